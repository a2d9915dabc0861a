"""
forge: circular substructure fingerprints, pooling and activity-cliff models.
Built on numpy, scipy, networkx and pydantic.
"""

from forge.config import ExperimentConfig, TrainConfig
from forge.ecfp import EnumerationConfig, FingerprintSet, enumerate_substructures, hash32
from forge.exceptions import ConfigValidationError, DatasetError, ForgeError, ParseError, ParseErrorKind
from forge.metrics import auprc, auroc, mae, mcc_binary, mcc_multiclass
from forge.mmp import AcLabel, Mmp, PdLabel, clean_dataset, find_mmps
from forge.molgraph import Atom, Bond, MolGraph, canonical_smiles
from forge.pooling import FitContext, PoolingMethod, PoolSpec, fit_pooling
from forge.predictors import KnnRegressor, MlpRegressor
from forge.smiles import parse_smiles, write_smiles
from forge.split import SplitPlan, build_split, repeated_cv
from forge.twin import TwinModel, train_twin, twin_forward

__version__ = "0.3.0"

__all__ = [
    "Atom",
    "Bond",
    "MolGraph",
    "parse_smiles",
    "write_smiles",
    "canonical_smiles",
    "hash32",
    "EnumerationConfig",
    "FingerprintSet",
    "enumerate_substructures",
    "PoolingMethod",
    "PoolSpec",
    "FitContext",
    "fit_pooling",
    "AcLabel",
    "PdLabel",
    "Mmp",
    "clean_dataset",
    "find_mmps",
    "SplitPlan",
    "build_split",
    "repeated_cv",
    "mae",
    "mcc_binary",
    "mcc_multiclass",
    "auroc",
    "auprc",
    "KnnRegressor",
    "MlpRegressor",
    "TwinModel",
    "twin_forward",
    "train_twin",
    "ExperimentConfig",
    "TrainConfig",
    "ForgeError",
    "ParseError",
    "ParseErrorKind",
    "ConfigValidationError",
    "DatasetError",
]
