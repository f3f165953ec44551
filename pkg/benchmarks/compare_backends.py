"""Time the compiled kernels against the plain-Python fallback.

Runs the same basin-estimation workload in two child interpreters, one
per EGD_BACKEND value, and checks that the label CSVs are byte-identical
before reporting the speedup. Invoke from the repository root:

    python3 benchmarks/compare_backends.py [--samples N] [--label 6_1]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import tempfile
import textwrap
from pathlib import Path

WORKER = textwrap.dedent("""
    import json, sys, time
    from egdyn import BACKEND, enumerate_nash, estimate_basins, zeeman_fixture

    label, samples, out = sys.argv[1], int(sys.argv[2]), sys.argv[3]
    game = zeeman_fixture(label).game
    eqs = enumerate_nash(game)
    # warm-up compiles the kernels (a no-op for the fallback)
    estimate_basins(game, 128, seed=1, equilibria=eqs)
    t0 = time.perf_counter()
    bmap = estimate_basins(game, samples, seed=7, equilibria=eqs)
    elapsed = time.perf_counter() - t0
    bmap.to_csv(out)
    print(json.dumps({"backend": BACKEND, "seconds": elapsed}))
""")


def run_backend(backend: str, label: str, samples: int, out: Path) -> dict:
    env = dict(os.environ, EGD_BACKEND=backend)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER, label, str(samples), str(out)],
        env=env, capture_output=True, text=True, check=True)
    import json
    result = json.loads(proc.stdout.strip().splitlines()[-1])
    if result["backend"] != backend:
        raise RuntimeError(f"requested {backend}, child ran {result['backend']}")
    return result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=4000)
    parser.add_argument("--label", default="6_1")
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        outs = {b: Path(tmp) / f"{b}.csv" for b in ("numba", "numpy")}
        results = {b: run_backend(b, args.label, args.samples, outs[b])
                   for b in outs}
        identical = outs["numba"].read_bytes() == outs["numpy"].read_bytes()

    t_jit = results["numba"]["seconds"]
    t_py = results["numpy"]["seconds"]
    print(f"workload: {args.samples} samples of class {args.label}, "
          "both dynamics")
    print(f"numba : {t_jit:8.3f} s")
    print(f"numpy : {t_py:8.3f} s")
    print(f"speedup: {t_py / t_jit:.1f}x, labels byte-identical: {identical}")
    return 0 if identical else 1


if __name__ == "__main__":
    sys.exit(main())
