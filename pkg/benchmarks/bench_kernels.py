"""Time the numba and numpy simulator kernels on the same inputs.

    python benchmarks/bench_kernels.py [--reps 200] [--sites 144 484]

Both backends are run in-process by flipping FDISAC_DISABLE_NUMBA; the first
numba call (JIT compile or cache load) is excluded from the timings.  Outputs
are checked for bitwise equality before anything is reported.
"""
import argparse
import os
import time

import numpy as np

from fdisac import netsim
from fdisac.netsim import kernels
from fdisac.netsim._accel import HAVE_NUMBA
from fdisac.params import NetworkParams


def _time(fn, repeat):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = fn()
    return (time.perf_counter() - t0) / repeat, out


def _sites(n, rng):
    r = 12.0 * np.sqrt(rng.random(n - 1))
    a = 2 * np.pi * rng.random(n - 1)
    return np.vstack(([0.0, 0.0], np.column_stack((r * np.cos(a), r * np.sin(a)))))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=200, help="realizations for the end-to-end timing")
    ap.add_argument("--sites", type=int, nargs="+", default=[144, 484])
    args = ap.parse_args(argv)
    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    rng = np.random.default_rng(0)

    print(f"{'kernel':32s}" + "".join(f"{b:>14s}" for b in backends) + f"{'speed-up':>10s}")
    for n in args.sites:
        sites = _sites(n, rng)
        uni = rng.random((n, 3))
        gains = rng.exponential(size=n)
        cases = {
            f"sample_in_cells ({n} sites)": lambda: kernels.sample_in_cells(sites, 24.0, uni),
            f"faded_sum ({n} points)": lambda: kernels.faded_sum(sites, (0.3, -0.2), gains, 4.0),
        }
        for name, fn in cases.items():
            times, outs = [], []
            for b in backends:
                os.environ["FDISAC_DISABLE_NUMBA"] = "1" if b == "numpy" else "0"
                t, out = _time(fn, 50)
                times.append(t)
                outs.append(out)
            assert all(np.array_equal(outs[0], o) for o in outs[1:]), f"{name}: backends disagree"
            row = "".join(f"{t * 1e3:11.3f} ms" for t in times)
            speed = f"{times[0] / times[-1]:9.1f}x" if len(times) > 1 else ""
            print(f"{name:32s}{row}{speed}")

    params = NetworkParams()
    times, batches = [], []
    for b in backends:
        os.environ["FDISAC_DISABLE_NUMBA"] = "1" if b == "numpy" else "0"
        netsim.simulate_batch(params, 2, seed=1)  # warm-up
        t0 = time.perf_counter()
        batches.append(netsim.simulate_batch(params, args.reps, seed=1, workers=1))
        times.append((time.perf_counter() - t0) / args.reps)
    same = all(np.array_equal(batches[0].i_ue_tbs, x.i_ue_tbs) for x in batches[1:])
    row = "".join(f"{t * 1e3:11.3f} ms" for t in times)
    speed = f"{times[0] / times[-1]:9.1f}x" if len(times) > 1 else ""
    print(f"{'realization (end to end)':32s}{row}{speed}")
    print(f"batches bit-identical across backends: {same}")


if __name__ == "__main__":
    main()
