"""
Command-line interface: ``forge <command> [--config PATH] [flags]``.

Exit codes: 0 on success, 2 for a ForgeError (one line on stderr), 1 for
anything else (traceback only with ``--debug``).
"""

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from forge import __version__
from forge.config import ExperimentConfig, env_threads, validate_settings
from forge.dataio import (
    load_dataset,
    load_smiles,
    read_fingerprints,
    read_json,
    read_mmps,
    read_plans,
    read_pool_spec,
    write_dataset,
    write_fingerprints,
    write_json,
    write_mmps,
    write_plans,
    write_pool_spec,
    write_text_atomic,
)
from forge.ecfp import AtomInvariants, EnumerationConfig, enumerate_many
from forge.exceptions import ConfigValidationError, DatasetError, ForgeError, ParseError
from forge.harness import FittedPlan, fit_plan, make_plans, prepare_data, run_and_write, score_plan
from forge.logs import configure_logging
from forge.mmp import clean_dataset, find_mmps, label_counts, to_pactivity
from forge.molgraph import canonical_smiles
from forge.pooling import FitContext, PoolingMethod, fit_pooling
from forge.smiles import parse_smiles
from forge.split import repeated_cv
from forge.stats import binarize_labels, is_binary
from forge.toydata import make_sar_dataset

logger = logging.getLogger("forge.cli")

METHOD_CHOICES = ["hash", "sortslice", "sort_slice", "filter", "mim"]

# flag destination -> dotted ExperimentConfig field
OVERRIDES = {
    "dataset": "dataset",
    "units": "activity_units",
    "radius": "ecfp.radius",
    "invariants": "ecfp.invariants",
    "chirality": "ecfp.use_chirality",
    "method": "pooling.method",
    "dim": "pooling.dim",
    "k": "split.k",
    "seeds": "split.seeds",
    "stratify": "split.stratify",
    "model": "model",
    "out": "output",
}


def _method(value: Optional[str]) -> Optional[str]:
    if value is None:
        return None
    return PoolingMethod.SORT_SLICE.value if value == "sortslice" else value


def _seeds(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"seeds must be comma-separated integers, got {text!r}") from exc


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """File values overridden by any stage flag that was given."""
    overrides: Dict[str, Any] = {}
    for dest, dotted in OVERRIDES.items():
        value = getattr(args, dest, None)
        if dest == "method":
            value = _method(value)
        if isinstance(value, Path):
            value = str(value)
        if value is not None:
            overrides[dotted] = value
    if args.config:
        cfg = ExperimentConfig.from_file(args.config)
    else:
        dataset = overrides.pop("dataset", None)
        if dataset is None:
            raise ConfigValidationError("give --config or --dataset")
        cfg = ExperimentConfig.from_dict({"dataset": dataset})
    return cfg.with_overrides(**overrides)


def _ecfp_settings(args: argparse.Namespace) -> EnumerationConfig:
    base = ExperimentConfig.from_file(args.config).ecfp if args.config else EnumerationConfig()
    data = base.model_dump()
    if args.radius is not None:
        data["radius"] = args.radius
    if args.invariants is not None:
        data["invariants"] = args.invariants
    if args.chirality:
        data["use_chirality"] = True
    return validate_settings(EnumerationConfig, data)


def _emit(text: str, out: Optional[Path]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_text_atomic(out, text)


def cmd_parse(args: argparse.Namespace) -> int:
    if args.smiles is not None:
        print(canonical_smiles(parse_smiles(args.smiles)))
        return 0
    if args.dataset is None:
        raise ConfigValidationError("give --smiles or --dataset")
    ids, smiles_list = load_smiles(args.dataset, args.column, args.id_column)
    rows = []
    for row_id, smiles in zip(ids, smiles_list):
        try:
            canonical, error = canonical_smiles(parse_smiles(smiles)), ""
        except ParseError as exc:
            canonical, error = "", f"{exc.kind.value}@{exc.position}"
            logger.warning("row %s (%s): %s", row_id, smiles, error)
        rows.append((row_id, smiles, canonical, error))
    frame = pd.DataFrame(rows, columns=["id", "smiles", "canonical", "error"])
    _emit(frame.to_csv(index=False), args.out)
    return 0


def cmd_fingerprint(args: argparse.Namespace) -> int:
    settings = _ecfp_settings(args)
    ids, smiles_list = load_smiles(args.dataset, args.column, args.id_column)
    graphs = []
    for row, smiles in enumerate(smiles_list):
        try:
            graphs.append(parse_smiles(smiles))
        except ParseError as exc:
            exc.context.update({"file": str(args.dataset), "row": row})
            raise
    fps = enumerate_many(graphs, settings, workers=env_threads())
    if args.out is None:
        for row_id, fp in zip(ids, fps):
            print(json.dumps({"id": row_id, "fp": fp.sorted_ids()}))
    else:
        write_fingerprints(args.out, ids, fps)
    logger.info("fingerprinted %d molecules (radius %d)", len(fps), settings.radius)
    return 0


def cmd_pool_fit(args: argparse.Namespace) -> int:
    ids, fps = read_fingerprints(args.fingerprints)
    labels = None
    if args.dataset is not None:
        dataset = load_dataset(args.dataset, args.column, args.label_column, args.id_column)
        if len(dataset) != len(fps):
            raise DatasetError(
                "dataset and fingerprint file differ in length",
                {"dataset": len(dataset), "fingerprints": len(fps)},
            )
        labels = dataset.labels
    method = PoolingMethod(_method(args.method))
    if method == PoolingMethod.FILTER:
        logger.warning("fingerprint files carry no occurrences; filter skips the closedness step")
    spec = fit_pooling(method, FitContext(fps, labels), args.dim)
    if args.out is None:
        print(json.dumps(spec.model_dump(mode="json")))
    else:
        write_pool_spec(args.out, spec)
    return 0


def cmd_pool_transform(args: argparse.Namespace) -> int:
    spec = read_pool_spec(args.spec)
    ids, fps = read_fingerprints(args.fingerprints)
    lines = [json.dumps({"id": row_id, "x": spec.transform(fp).tolist()}) for row_id, fp in zip(ids, fps)]
    _emit("\n".join(lines) + ("\n" if lines else ""), args.out)
    return 0


def cmd_mmp(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, args.column, args.label_column, args.id_column)
    report = clean_dataset(dataset.records, units=args.units, ids=dataset.ids)
    activities = report.activities
    if args.units == "raw":
        activities = to_pactivity(activities, args.molar_scale).tolist()
    mmps = find_mmps(report.graphs, activities)
    write_mmps(args.out, mmps)
    if args.cleaned_out is not None:
        write_dataset(
            args.cleaned_out,
            [r.record_id or str(r.rows[0]) for r in report.records],
            [r.smiles for r in report.records],
            activities,
        )
    counts = label_counts(mmps)
    logger.info("%d MMPs: %s", len(mmps), ", ".join(f"{label.tag}={n}" for label, n in counts.items()))
    return 0


def cmd_split(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.dataset, args.column, args.label_column, args.id_column)
    mmps = read_mmps(args.mmps)
    n = len(dataset)
    for pair in mmps:
        if pair.j >= n:
            raise DatasetError("MMP refers to a compound beyond the dataset", {"j": pair.j, "compounds": n})
    stratify = None
    if args.stratify:
        stratify = dataset.labels if is_binary(dataset.labels) else binarize_labels(dataset.labels)
    plans = repeated_cv(n, mmps, args.k, args.seeds, stratify=stratify)
    write_plans(args.out, plans)
    logger.info("wrote %d plans to %s", len(plans), args.out)
    return 0


def _plans_for(cfg: ExperimentConfig, data: Any, path: Optional[Path]) -> list:
    return read_plans(path) if path is not None else make_plans(cfg, data)


def _pick(plans: Sequence[Any], index: int) -> Any:
    if not 0 <= index < len(plans):
        raise ConfigValidationError(f"plan {index} out of range", context={"plans": len(plans)})
    return plans[index]


def cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    data = prepare_data(cfg)
    plan = _pick(_plans_for(cfg, data, args.plans), args.plan)
    plan.verify(data.n, data.mmps)
    fitted = fit_plan(data, plan, cfg)
    write_json(args.model_out, fitted.to_dict())
    logger.info("trained %s model for seed %d fold %d", cfg.model, plan.seed, plan.fold)
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    data = prepare_data(cfg)
    plan = _pick(_plans_for(cfg, data, args.plans), args.plan)
    fitted = FittedPlan.from_dict(read_json(args.model_file))
    if (fitted.seed, fitted.fold) != (plan.seed, plan.fold):
        raise ConfigValidationError(
            "model was trained on a different plan",
            context={"model": f"{fitted.seed}/{fitted.fold}", "plan": f"{plan.seed}/{plan.fold}"},
        )
    metrics = score_plan(data, plan, cfg, fitted)
    text = json.dumps(metrics, indent=2) + "\n"
    _emit(text, args.metrics_out)
    return 0


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    results = run_and_write(cfg)
    mae = results["summary"].get("mae", {}).get("mean")
    logger.info("%d plans evaluated; mean MAE %s", len(results["plans"]), mae)
    return 0


def cmd_toy(args: argparse.Namespace) -> int:
    try:
        frame = make_sar_dataset(args.n, args.seed, args.noise)
    except ValueError as exc:
        raise ConfigValidationError(str(exc), context={"n": args.n, "noise": args.noise}) from exc
    _emit(frame.to_csv(index=False), args.out)
    return 0


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="experiment config (JSON)")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: FORGE_LOG_LEVEL or WARNING)")
    common.add_argument("--debug", action="store_true", help="print tracebacks for unexpected errors")
    return common


def _dataset_flags(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--dataset", type=Path, required=required, help="dataset CSV with a header row")
    parser.add_argument("--column", default="smiles", help="SMILES column (default: smiles)")
    parser.add_argument("--label-column", default="label", help="label column (default: label)")
    parser.add_argument("--id-column", default=None, help="optional id column")


def _ecfp_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--radius", type=int, default=None, help="maximum radius 0..10 (default 2)")
    parser.add_argument("--invariants", choices=[v.value for v in AtomInvariants], default=None)
    parser.add_argument("--chirality", action="store_true", default=None, help="include tetrahedral stereo")


def _experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dataset", type=Path, default=None, help="overrides the config's dataset")
    parser.add_argument("--units", choices=["p", "raw"], default=None, help="activity units of the label column")
    _ecfp_flags(parser)
    parser.add_argument("--method", choices=METHOD_CHOICES, default=None, help="pooling method")
    parser.add_argument("--dim", type=int, default=None, help="pooled fingerprint length")
    parser.add_argument("--k", type=int, default=None, help="cross-validation folds")
    parser.add_argument("--seeds", type=_seeds, default=None, help="comma-separated seeds, e.g. 0,1,2")
    parser.add_argument("--stratify", action="store_true", default=None, help="stratify folds by binarised label")
    parser.add_argument("--model", choices=["knn", "mlp", "twin"], default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="forge", description="ECFP pooling, matched pairs and activity-cliff models.")
    parser.add_argument("--version", action="version", version=f"forge {__version__}")
    commands = parser.add_subparsers(dest="command", required=True, metavar="<command>")

    p = commands.add_parser("parse", parents=[common], help="canonical SMILES for one string or a dataset")
    p.add_argument("--smiles", default=None, help="a single SMILES string")
    _dataset_flags(p, required=False)
    p.add_argument("--out", type=Path, default=None, help="CSV output (default: stdout)")
    p.set_defaults(handler=cmd_parse)

    p = commands.add_parser("fingerprint", parents=[common], help="circular substructure identifiers per molecule")
    _dataset_flags(p)
    _ecfp_flags(p)
    p.add_argument("--out", type=Path, default=None, help="JSON lines output (default: stdout)")
    p.set_defaults(handler=cmd_fingerprint)

    pool = commands.add_parser("pool", help="fit or apply a pooling operator")
    pool_commands = pool.add_subparsers(dest="pool_command", required=True, metavar="<fit|transform>")
    p = pool_commands.add_parser("fit", parents=[common], help="fit a pooling operator on fingerprints")
    p.add_argument("--fingerprints", type=Path, required=True, help="fingerprint JSON lines")
    p.add_argument("--method", choices=METHOD_CHOICES, default="sort_slice")
    p.add_argument("--dim", type=int, default=1024)
    _dataset_flags(p, required=False)
    p.add_argument("--out", type=Path, default=None, help="pool spec JSON (default: stdout)")
    p.set_defaults(handler=cmd_pool_fit)
    p = pool_commands.add_parser("transform", parents=[common], help="pool fingerprints into fixed-length vectors")
    p.add_argument("--spec", type=Path, required=True, help="pool spec JSON")
    p.add_argument("--fingerprints", type=Path, required=True, help="fingerprint JSON lines")
    p.add_argument("--out", type=Path, default=None, help="JSON lines output (default: stdout)")
    p.set_defaults(handler=cmd_pool_transform)

    p = commands.add_parser("mmp", parents=[common], help="matched molecular pairs with AC/PD labels")
    _dataset_flags(p)
    p.add_argument("--units", choices=["p", "raw"], default="p")
    p.add_argument("--molar-scale", type=float, default=1.0, help="raw unit to molar multiplier (e.g. 1e-9 for nM)")
    p.add_argument("--out", type=Path, required=True, help="MMP CSV")
    p.add_argument("--cleaned-out", type=Path, default=None, help="cleaned dataset CSV the MMP indices refer to")
    p.set_defaults(handler=cmd_mmp)

    p = commands.add_parser("split", parents=[common], help="repeated k-fold plans with MMP routing")
    _dataset_flags(p)
    p.add_argument("--mmps", type=Path, required=True, help="MMP CSV")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--seeds", type=_seeds, default=[0, 1, 2], help="comma-separated seeds (default 0,1,2)")
    p.add_argument("--stratify", action="store_true")
    p.add_argument("--out", type=Path, required=True, help="split plans JSON")
    p.set_defaults(handler=cmd_split)

    p = commands.add_parser("train", parents=[common], help="fit pooling and a model on one plan")
    _experiment_flags(p)
    p.add_argument("--plans", type=Path, default=None, help="split plans JSON (default: derived from the config)")
    p.add_argument("--plan", type=int, default=0, help="plan index")
    p.add_argument("--model-out", type=Path, required=True, help="model JSON")
    p.set_defaults(handler=cmd_train)

    p = commands.add_parser("evaluate", parents=[common], help="score a trained model on its plan")
    _experiment_flags(p)
    p.add_argument("--plans", type=Path, default=None, help="split plans JSON (default: derived from the config)")
    p.add_argument("--plan", type=int, default=0, help="plan index")
    p.add_argument("--model-file", type=Path, required=True, help="model JSON from `forge train`")
    p.add_argument("--metrics-out", type=Path, default=None, help="metrics JSON (default: stdout)")
    p.set_defaults(handler=cmd_evaluate)

    p = commands.add_parser("experiment", parents=[common], help="run the full pipeline over every plan")
    _experiment_flags(p)
    p.add_argument("--out", type=Path, default=None, help="results JSON (overrides the config's output)")
    p.set_defaults(handler=cmd_experiment)

    p = commands.add_parser("toy", parents=[common], help="write the synthetic SAR dataset")
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.1, help="label noise standard deviation")
    p.add_argument("--out", type=Path, default=None, help="CSV output (default: stdout)")
    p.set_defaults(handler=cmd_toy)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except ForgeError as exc:
        print(f"error: {exc.render()}", file=sys.stderr)
        return 2
    except Exception as exc:
        if args.debug:
            traceback.print_exc()
        else:
            print(f"unexpected error: {type(exc).__name__}: {exc} (rerun with --debug for a traceback)", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
