import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from isokin import _kernels_py, backend_name

try:
    from isokin import _core

    HAVE_CORE = True
except ImportError:
    _core = None
    HAVE_CORE = False


def omega_profile(s):
    return np.stack(
        [0.2 * np.sin(s / 3.0), 0.05 * np.cos(s / 5.0), np.full_like(s, 0.1)],
        axis=-1,
    )


class TestBackendSelection:
    def test_backend_reported(self):
        assert backend_name() in ("compiled", "python")

    def test_pure_python_env_forces_fallback(self):
        code = (
            "import os; os.environ['ISOKIN_PURE_PYTHON'] = '1'; "
            "import isokin; print(isokin.backend_name())"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "python"


@pytest.mark.skipif(not HAVE_CORE, reason="compiled core not built")
class TestKernelAgreement:
    def test_integrate_frames_matches(self):
        steps = 500
        s = np.linspace(0.0, 15.0, steps + 1)
        h = 15.0 / steps
        mids = s[:-1] + 0.5 * h
        wn, wm = omega_profile(s), omega_profile(mids)
        f_c, p_c = _core.integrate_frames(wn, wm, h)
        f_py, p_py = _kernels_py.integrate_frames(wn, wm, h)
        np.testing.assert_allclose(f_c, f_py, atol=1e-13)
        np.testing.assert_allclose(p_c, p_py, atol=1e-13)

    def test_integrate_rod_matches(self):
        out_c = _core.integrate_rod([0.3, -0.1, 0.05], [0.02, 0.05, -0.01], 15.0 / 400, 400)
        out_py = _kernels_py.integrate_rod(
            [0.3, -0.1, 0.05], [0.02, 0.05, -0.01], 15.0 / 400, 400
        )
        for a, b in zip(out_c, out_py):
            np.testing.assert_allclose(a, b, atol=1e-13)


class TestBenchmarkScript:
    def test_quick_run(self):
        root = Path(__file__).resolve().parents[1]
        out = subprocess.run(
            [sys.executable, str(root / "benchmarks" / "bench_backends.py"), "--quick"],
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0
        assert "integrate_rod" in out.stdout
