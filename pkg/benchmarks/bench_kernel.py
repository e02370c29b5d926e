"""Compare the compiled and pure-Python forward-sampling kernels.

Times ``kernel.draw`` plus ``kernel.forward`` on a bundled fixture under
its flip intervention, checks the two backends agree bit for bit, and
prints trials per second for each.

Usage: python3 benchmarks/bench_kernel.py [--model FIX-G] [--n 200000] [--repeat 3]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cftwin import kernel
from cftwin.fixtures import load_fixture
from cftwin.interventions import flip_regime


def time_backend(enc, n, seed, backend, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        rows, noise = kernel.draw(enc, seed, 0, n, backend)
        out = kernel.forward(enc, rows, noise, backend)
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="FIX-G")
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    scm = load_fixture(args.model)
    targets = list(scm.metadata.get("targets") or [])
    enc = kernel.encode(scm, flip_regime(scm, targets).bind(scm))
    backends = kernel.available_backends()
    results = {}
    for b in backends:
        results[b] = time_backend(enc, args.n, args.seed, b, args.repeat)

    print(f"model {args.model}, flip on {','.join(targets) or '-'}, n={args.n}, "
          f"best of {args.repeat}")
    for b, (secs, _) in results.items():
        print(f"  {b:<9} {secs:8.3f} s  {args.n / secs:12.0f} trials/s")
    if "compiled" in results and "python" in results:
        same = np.array_equal(results["compiled"][1], results["python"][1])
        speedup = results["python"][0] / results["compiled"][0]
        print(f"  speedup {speedup:.1f}x, identical output: {same}")
        return 0 if same else 1
    print("  compiled backend not built; only the Python kernel was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
