"""Time the compiled and pure-Python minimal cone kernels on the same clouds.

    python3 benchmarks/bench_welzl.py --sizes 100 1000 10000 --repeat 5
"""
import argparse
import time

import numpy as np

from conebound import kernels
from conebound.cones import min_enclosing_cone
from conebound.models import paraboloid
from conebound.sampling import SampleSpec, sample_chart


def paraboloid_cloud(count, m, seed):
    phi = paraboloid(m, 0.1, box=10.0).map
    return np.array([phi(x) for x in sample_chart(phi, SampleSpec("random", count, seed))])


def best_time(points, backend, repeat):
    o = np.zeros(points.shape[1])
    best = float("inf")
    for k in range(repeat):
        start = time.perf_counter()
        cone = min_enclosing_cone(points, o, seed=k, backend=backend)
        best = min(best, time.perf_counter() - start)
    return best, cone.width


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000, 100000])
    parser.add_argument("--dim", type=int, default=2, help="domain dimension m of the paraboloid")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    backends = sorted(kernels.BACKENDS)
    if "compiled" not in backends:
        print("compiled extension not built; timing the Python kernel only")
    print(f"{'points':>8}  " + "  ".join(f"{b:>12}" for b in backends) + "   speedup  width diff")
    for n in args.sizes:
        P = paraboloid_cloud(n, args.dim, args.seed)
        results = {b: best_time(P, b, args.repeat) for b in backends}
        row = f"{n:>8}  " + "  ".join(f"{results[b][0] * 1e3:>10.3f}ms" for b in backends)
        if len(results) == 2:
            speedup = results["python"][0] / results["compiled"][0]
            diff = abs(results["python"][1] - results["compiled"][1])
            row += f"  {speedup:>7.1f}x  {diff:.1e}"
        print(row)


if __name__ == "__main__":
    main()
