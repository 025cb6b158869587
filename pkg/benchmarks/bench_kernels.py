"""Compare the numba and pure-numpy backends on the hot kernels.

Each backend runs in its own interpreter because the backend is fixed at
import time by RANK_KNOCKOFFS_BACKEND. Run:

    python3 benchmarks/bench_kernels.py [--repeat 3] [--quick]
"""

import argparse
import json
import os
import subprocess
import sys
import time

WORKER = r"""
import json, sys, time
import numpy as np
from rank_knockoffs import BACKEND, lasso
from rank_knockoffs._kernels import lasso_cd_gram, cv_lasso_errors
from rank_knockoffs.precision import estimate_precision_nodewise

n, p, repeat = (int(a) for a in sys.argv[1:4])
rng = np.random.default_rng(0)
x = rng.standard_normal((n, p))
beta = np.zeros(p); beta[:10] = 2.0
y = x @ beta + rng.standard_normal(n)
xs = (x - x.mean(0)) / x.std(0)
yc = y - y.mean()
gram = np.ascontiguousarray(xs.T @ xs); corr = xs.T @ yc
allowed = np.ones(p, dtype=np.bool_)
lam = 0.1 * np.abs(corr).max() / n

def single():
    lasso_cd_gram(gram, corr, float(n), lam, np.zeros(p), allowed, lasso.TOL, lasso.MAX_SWEEPS)

def cv_fit():
    lasso.fit_lasso_cv(x, y, rng=np.random.default_rng(1))

def nodewise():
    estimate_precision_nodewise(x[:, : min(p, 40)], rng=np.random.default_rng(2))

def timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0

out = {"backend": BACKEND}
for name, fn in (("lasso_cd_single", single), ("lasso_cv_path", cv_fit), ("nodewise_p40", nodewise)):
    first = timed(fn)
    out[name] = {"first_call": first, "best": min(timed(fn) for _ in range(repeat))}
print(json.dumps(out))
"""


def run_backend(backend, n, p, repeat):
    env = dict(os.environ, RANK_KNOCKOFFS_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", WORKER, str(n), str(p), str(repeat)],
                          env=env, capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--quick", action="store_true", help="smaller problem (n=100, p=60)")
    args = parser.parse_args(argv)
    n, p = (100, 60) if args.quick else (200, 150)

    start = time.perf_counter()
    results = {b: run_backend(b, n, p, args.repeat) for b in ("numba", "numpy")}
    print(f"problem n={n} p={p}, best of {args.repeat} (first call includes JIT compile or cache load)")
    print(f"{'kernel':<18}{'numba best':>12}{'numpy best':>12}{'speedup':>10}{'numba 1st':>12}")
    for name in ("lasso_cd_single", "lasso_cv_path", "nodewise_p40"):
        fast, slow = results["numba"][name], results["numpy"][name]
        print(f"{name:<18}{fast['best']:>11.4f}s{slow['best']:>11.4f}s"
              f"{slow['best'] / max(fast['best'], 1e-12):>9.1f}x{fast['first_call']:>11.3f}s")
    print(f"total {time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
