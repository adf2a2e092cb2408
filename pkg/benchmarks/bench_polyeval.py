"""Compare the compiled polynomial kernel against the numpy fallback.

    python benchmarks/bench_polyeval.py [--points N] [--repeat R]
"""

import argparse
import timeit

import numpy as np

from poisson_averaging._kernels import _fallback

try:
    from poisson_averaging._kernels import _polyeval
except ImportError:
    _polyeval = None


def random_poly(rng, d, terms, max_deg):
    exps = rng.integers(0, max_deg + 1, size=(terms, d)).astype(np.int64)
    coeffs = rng.standard_normal(terms)
    return exps, coeffs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    cases = [(3, 10, 3), (3, 40, 6), (4, 120, 8)]
    print(f"{'d':>2} {'terms':>5} {'deg':>3} {'fallback ms':>12} {'compiled ms':>12} {'speedup':>8} {'max diff':>10}")
    for d, terms, deg in cases:
        exps, coeffs = random_poly(rng, d, terms, deg)
        pts = rng.uniform(-1.5, 1.5, size=(d, args.points))
        ref = _fallback.poly_eval_batch(pts, exps, coeffs)
        t_py = min(timeit.repeat(lambda: _fallback.poly_eval_batch(pts, exps, coeffs), number=1, repeat=args.repeat))
        if _polyeval is None:
            print(f"{d:>2} {terms:>5} {deg:>3} {1e3 * t_py:>12.3f} {'n/a':>12} {'n/a':>8} {'n/a':>10}")
            continue
        out = _polyeval.poly_eval_batch(pts, exps, coeffs)
        t_c = min(timeit.repeat(lambda: _polyeval.poly_eval_batch(pts, exps, coeffs), number=1, repeat=args.repeat))
        diff = float(np.max(np.abs(out - ref)))
        print(f"{d:>2} {terms:>5} {deg:>3} {1e3 * t_py:>12.3f} {1e3 * t_c:>12.3f} {t_py / t_c:>8.1f} {diff:>10.2e}")
    if _polyeval is None:
        print("compiled kernel not built; run `pip install --no-build-isolation -e .`")


if __name__ == "__main__":
    main()
