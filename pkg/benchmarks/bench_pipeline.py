#!/usr/bin/env python3
"""
End-to-end experiment timing: MMP search, split plans, and one model per plan.

Usage: python3 benchmarks/bench_pipeline.py [--n 300] [--model knn] [--threads 1]
"""

import argparse
import os
import tempfile
import time
from pathlib import Path

from forge.config import ExperimentConfig
from forge.harness import make_plans, prepare_data, run_experiment
from forge.toydata import MAX_MOLECULES, make_sar_dataset


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--n", type=int, default=MAX_MOLECULES)
    parser.add_argument("--model", choices=["knn", "mlp", "twin"], default="knn")
    parser.add_argument("--method", default="sort_slice")
    parser.add_argument("--dim", type=int, default=1024)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()
    os.environ["FORGE_THREADS"] = str(args.threads)

    with tempfile.TemporaryDirectory() as tmp:
        dataset = Path(tmp) / "toy.csv"
        make_sar_dataset(args.n).to_csv(dataset, index=False)
        cfg = ExperimentConfig.from_dict(
            {
                "dataset": str(dataset),
                "id_column": "id",
                "pooling": {"method": args.method, "dim": args.dim},
                "model": args.model,
                "mlp": {"hidden": [128], "train": {"epochs": 20}},
                "twin": {"embedding": [128], "train": {"epochs": 10}},
                "output": str(Path(tmp) / "results.json"),
            }
        )

        start = time.perf_counter()
        data = prepare_data(cfg)
        prepared = time.perf_counter() - start
        print(f"prepare   {data.n:5d} compounds  {len(data.mmps):6d} MMPs  {prepared:7.2f} s")

        start = time.perf_counter()
        plans = make_plans(cfg, data)
        print(f"split     {len(plans):5d} plans                 {time.perf_counter() - start:7.2f} s")

        start = time.perf_counter()
        results = run_experiment(cfg, data=data, plans=plans)
        evaluated = time.perf_counter() - start
        print(f"evaluate  {args.model:<5s} x {len(plans)} plans ({args.threads} threads)  {evaluated:7.2f} s")

    summary = results["summary"]
    for key in ("mae", "mmp.test.ac_binary.mcc", "mmp.test.ac_ternary.mcc", "mmp.test.pd.accuracy"):
        entry = summary.get(key)
        if entry and entry["mean"] is not None:
            print(f"{key:<26s} {entry['mean']:.3f} +/- {entry['sd']:.3f}  (n={entry['count']})")


if __name__ == "__main__":
    main()
