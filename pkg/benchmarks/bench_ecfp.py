#!/usr/bin/env python3
"""
Fingerprinting and pooling throughput on the synthetic SAR library.

Usage: python3 benchmarks/bench_ecfp.py [--n 300] [--repeat 3] [--workers 1]
"""

import argparse
import time

from forge.ecfp import EnumerationConfig, enumerate_many
from forge.pooling import FitContext, PoolingMethod, fit_pooling
from forge.smiles import parse_smiles
from forge.toydata import MAX_MOLECULES, library


def best_of(repeat, fn):
    timings = []
    result = None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        timings.append(time.perf_counter() - start)
    return min(timings), result


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--n", type=int, default=MAX_MOLECULES)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    smiles = [molecule.smiles for molecule in library(args.n)]
    labels = [molecule.clean_label for molecule in library(args.n)]

    elapsed, graphs = best_of(args.repeat, lambda: [parse_smiles(s) for s in smiles])
    print(f"parse        {len(graphs):5d} molecules  {elapsed * 1e3:8.1f} ms  {len(graphs) / elapsed:9.0f} mol/s")

    fps = []
    for radius in (1, 2, 3):
        cfg = EnumerationConfig(radius=radius)
        elapsed, fps = best_of(args.repeat, lambda: enumerate_many(graphs, cfg, workers=args.workers))
        ids = len(set().union(*(fp.ids for fp in fps)))
        print(f"ecfp r={radius}    {len(fps):5d} molecules  {elapsed * 1e3:8.1f} ms  {ids:6d} distinct ids")

    ctx = FitContext(fps, labels)
    for method in PoolingMethod:
        elapsed, spec = best_of(args.repeat, lambda: fit_pooling(method, ctx, 1024))
        print(f"fit {method.value:<10s} dim 1024          {elapsed * 1e3:8.1f} ms  {len(spec.slots):6d} slots")
        elapsed, _ = best_of(args.repeat, lambda: spec.transform_many(fps))
        print(f"transform {method.value:<10s}             {elapsed * 1e3:8.1f} ms")


if __name__ == "__main__":
    main()
