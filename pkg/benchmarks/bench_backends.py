"""Benchmark the compiled integration core against the pure NumPy fallback.

The backbone/rod integrators are the only sequential hot loops in the
package (everything else is vectorized NumPy); this script times both
backends on them and checks agreement.

Usage: python benchmarks/bench_backends.py [--quick]
"""

import argparse
import time

import numpy as np

from isokin import _kernels_py

try:
    from isokin import _core

    HAVE_CORE = True
except ImportError:
    _core = None
    HAVE_CORE = False


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_frames(impl, steps, repeats):
    length = 15.0
    h = length / steps
    s = np.linspace(0.0, length, steps + 1)
    mids = s[:-1] + 0.5 * h
    omega = lambda x: np.stack(
        [0.2 * np.sin(x / 3.0), 0.05 * np.cos(x / 5.0), np.full_like(x, 0.1)],
        axis=-1,
    )
    wn, wm = omega(s), omega(mids)
    return _time(lambda: impl.integrate_frames(wn, wm, h), repeats)


def bench_rod(impl, steps, repeats):
    omega0 = np.array([0.3, -0.1, 0.05])
    lam = np.array([0.02, 0.05, -0.01])
    h = 15.0 / steps
    return _time(lambda: impl.integrate_rod(omega0, lam, h, steps), repeats)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--quick", action="store_true", help="small sizes")
    args = parser.parse_args(argv)

    steps = 200 if args.quick else 2000
    repeats = 2 if args.quick else 5

    rows = []
    t_py, (f_py, p_py) = bench_frames(_kernels_py, steps, repeats)
    if HAVE_CORE:
        t_c, (f_c, p_c) = bench_frames(_core, steps, repeats)
        agree = max(np.abs(f_c - f_py).max(), np.abs(p_c - p_py).max())
        rows.append(("integrate_frames", t_py, t_c, agree))
    else:
        rows.append(("integrate_frames", t_py, None, 0.0))

    t_py, out_py = bench_rod(_kernels_py, steps, repeats)
    if HAVE_CORE:
        t_c, out_c = bench_rod(_core, steps, repeats)
        agree = max(np.abs(a - b).max() for a, b in zip(out_c, out_py))
        rows.append(("integrate_rod", t_py, t_c, agree))
    else:
        rows.append(("integrate_rod", t_py, None, 0.0))

    print(f"steps = {steps}")
    header = f"{'kernel':<18}{'python (ms)':>14}{'compiled (ms)':>16}{'speedup':>10}{'max |diff|':>14}"
    print(header)
    print("-" * len(header))
    for name, t_py, t_c, agree in rows:
        if t_c is None:
            print(f"{name:<18}{t_py * 1e3:>14.2f}{'n/a':>16}{'n/a':>10}{'n/a':>14}")
        else:
            print(
                f"{name:<18}{t_py * 1e3:>14.2f}{t_c * 1e3:>16.3f}"
                f"{t_py / t_c:>9.0f}x{agree:>14.2e}"
            )
    if not HAVE_CORE:
        print("compiled core not available; showing pure-Python timings only")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
