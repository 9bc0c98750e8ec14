"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py --p 15 --n 200 --repeat 50
"""

import argparse
import timeit

import numpy as np

from mrf_changepoint import make_ising_spec, random_network
from mrf_changepoint import _kernels_py
from mrf_changepoint.kernels import get_backend


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=15)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--sweeps", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    spec = make_ising_spec()
    rng = np.random.default_rng(args.seed)
    W = random_network(args.p, 0.2, args.seed).dense()
    X = rng.integers(0, 2, size=(args.n, args.p)).astype(np.int32)
    G = np.zeros((args.p, args.p))
    U = rng.random((args.sweeps, args.p))
    record = np.full(args.sweeps, -1, dtype=np.intp)
    out = np.zeros((1, args.p), dtype=np.int32)

    backends = {"python": _kernels_py}
    try:
        backends["cython"] = get_backend("cython")
    except ImportError:
        print("compiled kernels unavailable; timing the fallback only")

    cases = {
        "segment_loss": lambda k: k.segment_loss(X, W, spec.b0_table, spec.b_table),
        "segment_loss_grad": lambda k: k.segment_loss_grad(X, W, spec.b0_table, spec.b_table, G),
        "gibbs_sweeps": lambda k: k.gibbs_sweeps(W, spec.b0_table, spec.b_table,
                                                 np.zeros(args.p, np.int32), U, record, out),
    }
    print(f"p={args.p} n={args.n} sweeps={args.sweeps}")
    print(f"{'kernel':<20}{'backend':<10}{'ms/call':>12}{'speedup':>10}")
    for name, fn in cases.items():
        times = {}
        for bname, mod in backends.items():
            reps = max(1, args.repeat // (20 if bname == "python" and name == "gibbs_sweeps" else 1))
            times[bname] = min(timeit.repeat(lambda: fn(mod), number=reps, repeat=3)) / reps
        for bname, t in times.items():
            speed = times["python"] / t
            print(f"{name:<20}{bname:<10}{1e3 * t:>12.3f}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
