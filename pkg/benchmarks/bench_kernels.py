"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--hidden 3] [--classes 6] [--repeat 5]
"""
import argparse

from canids import bench


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--hidden", type=int, default=3)
    ap.add_argument("--classes", type=int, default=6)
    ap.add_argument("--samples", type=int, default=4096)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    results = bench.compare_backends(args.hidden, args.classes, args.samples, repeat=args.repeat, seed=args.seed)
    print(bench.format_backends(results), end="")


if __name__ == "__main__":
    main()
