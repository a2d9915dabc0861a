import numpy as np
import pytest

from forge.config import ExperimentConfig
from forge.dataio import load_dataset
from forge.smiles import parse_smiles
from forge.toydata import bundled_dataset_path

CORPUS = [
    "C", "CC", "CCO", "CC(=O)O", "CCN(CC)CC", "c1ccccc1", "Cc1ccccc1", "Oc1ccccc1",
    "c1ccncc1", "c1ccc2ccccc2c1", "C1CCCCC1", "C1CC1", "CC(C)(C)O", "N#CC", "C=CC=C",
    "OC(=O)c1ccccc1", "CC(=O)Nc1ccc(O)cc1", "CN1CCC(CC1)C", "c1ccoc1", "c1ccsc1",
    "c1cc[nH]c1", "Clc1ccc(Br)cc1", "FC(F)(F)c1ccccc1", "CS(C)(=O)=O", "C[N+](C)(C)C",
    "[O-][N+](=O)c1ccccc1", "CC(C)Cc1ccc(cc1)C(C)C(=O)O", "O=C1CCCN1", "C1COCCN1",
    "c1ccc(cc1)-c1ccccc1", "CCOC(=O)C", "NC(=O)N", "OCC(O)CO", "CC#CC", "C1=CCC=C1",
    "Cc1nc2ccccc2n1C", "O=C(c1ccccc1)N1CCCCC1", "CCCCCCCC", "CC(N)C(=O)O", "c1cnc2[nH]ccc2c1",
    "COc1ccc(cc1)C=O", "[NH4+]", "C[C@H](N)C(=O)O", "OP(=O)(O)O", "ClC(Cl)Cl", "BrCCBr",
    "C1CC2CCC1C2", "CCS", "c1ccc2c(c1)oc1ccccc12", "CN(C)C=O",
]


@pytest.fixture(scope="session")
def corpus_graphs():
    return [parse_smiles(smiles) for smiles in CORPUS]


@pytest.fixture(scope="session")
def toy_path():
    return bundled_dataset_path()


@pytest.fixture(scope="session")
def toy_dataset(toy_path):
    return load_dataset(toy_path, id_column="id")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_config(toy_path, tmp_path):
    return ExperimentConfig.from_dict(
        {
            "dataset": str(toy_path),
            "pooling": {"method": "sort_slice", "dim": 64},
            "split": {"k": 2, "seeds": [0, 1, 2]},
            "knn": {"k": 3},
            "output": str(tmp_path / "results.json"),
        }
    )
