import numpy as np
import pandas as pd
import pytest

from forge.mmp import find_mmps
from forge.smiles import parse_smiles
from forge.toydata import MAX_MOLECULES, bundled_dataset_path, library, make_sar_dataset


def test_bundled_file_matches_generator():
    shipped = pd.read_csv(bundled_dataset_path())
    generated = make_sar_dataset(60, noise=0.0)
    assert shipped["id"].tolist() == generated["id"].tolist()
    assert shipped["smiles"].tolist() == generated["smiles"].tolist()
    np.testing.assert_allclose(shipped["label"], generated["label"])


def test_every_molecule_parses():
    for molecule in library(MAX_MOLECULES):
        parse_smiles(molecule.smiles)


def test_labels_are_additive():
    first = library(1)[0]
    assert first.smiles == "c1cc(F)ccc1C(=O)Nc1ccc(F)cn1"
    assert first.clean_label == pytest.approx(5.4)


def test_noise_is_seeded():
    a = make_sar_dataset(30, seed=3)
    b = make_sar_dataset(30, seed=3)
    c = make_sar_dataset(30, seed=4)
    assert a.equals(b)
    assert not a["label"].equals(c["label"])


def test_bad_arguments():
    with pytest.raises(ValueError):
        library(0)
    with pytest.raises(ValueError):
        library(MAX_MOLECULES + 1)
    with pytest.raises(ValueError):
        make_sar_dataset(10, noise=-1.0)


def test_series_give_matched_pairs(toy_dataset):
    graphs = [parse_smiles(s) for s in toy_dataset.smiles]
    mmps = find_mmps(graphs, toy_dataset.labels)
    assert len(mmps) >= 60
    assert {m.ac_label for m in mmps} == {0, 1, 2}
