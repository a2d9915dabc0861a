"""
Reading and writing forge artifacts.

Datasets and MMP listings are CSV (pandas); fingerprints are JSON lines;
pooling specs, split plans, models and results are JSON. Every write goes
to a temporary file in the target directory and is then moved into place.
"""

import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Tuple, Union

import pandas as pd

from forge.ecfp import FingerprintSet
from forge.exceptions import DatasetError
from forge.mmp import AcLabel, Mmp, PdLabel
from forge.pooling import PoolSpec
from forge.split import SplitPlan

logger = logging.getLogger("forge.dataio")

PathLike = Union[str, Path]
MMP_COLUMNS = ["i", "j", "core", "var_i", "var_j", "ac_label", "pd_label"]


@dataclass
class DatasetRecords:
    ids: List[str]
    smiles: List[str]
    labels: List[float]

    def __len__(self) -> int:
        return len(self.smiles)

    @property
    def records(self) -> List[Tuple[str, float]]:
        return list(zip(self.smiles, self.labels))


def write_text_atomic(path: PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(temp, path)
    except BaseException:
        Path(temp).unlink(missing_ok=True)
        raise


def write_json(path: PathLike, payload: Any) -> None:
    write_text_atomic(path, json.dumps(payload, indent=2, sort_keys=False) + "\n")


def read_json(path: PathLike) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}", {"file": str(path)}) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON: {exc.msg}", {"file": str(path), "line": exc.lineno}) from exc


def _read_csv(path: PathLike, **kwargs: Any) -> pd.DataFrame:
    path = Path(path)
    try:
        return pd.read_csv(path, **kwargs)
    except FileNotFoundError as exc:
        raise DatasetError(f"file not found: {path}", {"file": str(path)}) from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DatasetError(f"unreadable CSV: {exc}", {"file": str(path)}) from exc


def load_dataset(
    path: PathLike,
    smiles_column: str = "smiles",
    label_column: str = "label",
    id_column: Optional[str] = None,
) -> DatasetRecords:
    """
    Load a dataset CSV with a header row.

    Labels must be numeric; row ids default to the 0-based row number. Errors
    name the file and, for bad values, the CSV line (header is line 1).
    """
    frame = _read_csv(path, dtype={smiles_column: str}, keep_default_na=False, na_values=[""])
    for column in filter(None, (smiles_column, label_column, id_column)):
        if column not in frame.columns:
            raise DatasetError(
                f"missing column '{column}'", {"file": str(path), "columns": ",".join(map(str, frame.columns))}
            )
    labels = pd.to_numeric(frame[label_column], errors="coerce")
    bad = labels.isna()
    if bad.any():
        row = int(bad.idxmax())
        raise DatasetError(
            f"non-numeric value in column '{label_column}'",
            {"file": str(path), "line": row + 2, "value": frame[label_column].iloc[row]},
        )
    smiles = frame[smiles_column].fillna("").astype(str).tolist()
    ids = frame[id_column].astype(str).tolist() if id_column else [str(i) for i in range(len(frame))]
    logger.info("loaded %d records from %s", len(frame), path)
    return DatasetRecords(ids=ids, smiles=smiles, labels=labels.astype(float).tolist())


def load_smiles(path: PathLike, smiles_column: str = "smiles", id_column: Optional[str] = None) -> Tuple[List[str], List[str]]:
    "Ids and SMILES of a CSV that need not carry labels."
    frame = _read_csv(path, dtype={smiles_column: str}, keep_default_na=False)
    for column in filter(None, (smiles_column, id_column)):
        if column not in frame.columns:
            raise DatasetError(f"missing column '{column}'", {"file": str(path)})
    ids = frame[id_column].astype(str).tolist() if id_column else [str(i) for i in range(len(frame))]
    return ids, frame[smiles_column].astype(str).tolist()


def write_dataset(path: PathLike, ids: Sequence[str], smiles: Sequence[str], labels: Sequence[float]) -> None:
    frame = pd.DataFrame({"id": list(ids), "smiles": list(smiles), "label": list(labels)})
    write_text_atomic(path, frame.to_csv(index=False))


def write_fingerprints(path: PathLike, ids: Sequence[str], fps: Sequence[FingerprintSet]) -> None:
    lines = [json.dumps({"id": row_id, "fp": fp.sorted_ids()}) for row_id, fp in zip(ids, fps)]
    write_text_atomic(path, "\n".join(lines) + ("\n" if lines else ""))


def read_fingerprints(path: PathLike) -> Tuple[List[str], List[FingerprintSet]]:
    ids: List[str] = []
    fps: List[FingerprintSet] = []
    path = Path(path)
    try:
        handle = path.open(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}", {"file": str(path)}) from exc
    with handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                entry = json.loads(line)
                ids.append(str(entry["id"]))
                fps.append(FingerprintSet.from_ids(entry["fp"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"bad fingerprint record: {exc}", {"file": str(path), "line": line_number}) from exc
    return ids, fps


def write_pool_spec(path: PathLike, spec: PoolSpec) -> None:
    write_json(path, spec.model_dump(mode="json"))


def read_pool_spec(path: PathLike) -> PoolSpec:
    return PoolSpec.model_validate(read_json(path))


def write_mmps(path: PathLike, mmps: Iterable[Mmp]) -> None:
    rows = [
        (m.i, m.j, m.core, m.var_i, m.var_j, m.ac_label.tag, int(m.pd_label))
        for m in mmps
    ]
    frame = pd.DataFrame(rows, columns=MMP_COLUMNS)
    write_text_atomic(path, frame.to_csv(index=False))


def read_mmps(path: PathLike) -> List[Mmp]:
    frame = _read_csv(path, dtype={"core": str, "var_i": str, "var_j": str}, keep_default_na=False)
    missing = [c for c in MMP_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"missing column '{missing[0]}'", {"file": str(path)})
    mmps = []
    for row in frame.itertuples(index=False):
        mmps.append(
            Mmp(
                i=int(row.i),
                j=int(row.j),
                core=row.core,
                var_i=row.var_i,
                var_j=row.var_j,
                ac_label=AcLabel.from_tag(row.ac_label),
                pd_label=PdLabel(int(row.pd_label)),
            )
        )
    return mmps


def write_plans(path: PathLike, plans: Sequence[SplitPlan]) -> None:
    write_json(path, [plan.model_dump(mode="json") for plan in plans])


def read_plans(path: PathLike) -> List[SplitPlan]:
    data = read_json(path)
    if not isinstance(data, list):
        raise DatasetError("split file must hold a JSON list of plans", {"file": str(path)})
    return [SplitPlan.model_validate(entry) for entry in data]
