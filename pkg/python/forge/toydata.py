"""
Synthetic structure-activity data.

Molecules are built from three scaffolds with two substitution sites. Each
of twenty substituent families adds a fixed amount to the activity, so the
label is a scaffold offset plus two additive contributions plus optional
Gaussian noise. Molecules come in series of five that share a scaffold and
one substituent, which yields many matched molecular pairs.

The CSV shipped in ``forge/data`` is the first 60 molecules with no noise:
its labels are the exact additive sums. Noisy variants come from
``make_sar_dataset(n, seed, noise)``; the ordering checks in the test suite
run on ``make_sar_dataset(300, seed=0, noise=0.1)``.
"""

from importlib import resources
from pathlib import Path
from typing import List, NamedTuple, Tuple

import numpy as np
import pandas as pd

SERIES_SIZE = 5
MAX_MOLECULES = 300


class Scaffold(NamedTuple):
    template: str
    offset: float


SCAFFOLDS: Tuple[Scaffold, ...] = (
    Scaffold("c1cc({a})ccc1C(=O)Nc1ccc({b})cn1", 5.0),
    Scaffold("O=C(c1ccc({a})cc1)N1CCC(CC1){b}", 6.0),
    Scaffold("Cc1nc2ccc({a})cc2n1CC{b}", 4.5),
)

# (substituent SMILES, additive contribution in p-units)
SUBSTITUENTS: Tuple[Tuple[str, float], ...] = (
    ("F", 0.2),
    ("Cl", 0.6),
    ("Br", 0.7),
    ("C", 0.3),
    ("CC", 0.5),
    ("C(C)C", 0.9),
    ("OC", 0.4),
    ("O", -0.3),
    ("N", -0.5),
    ("N(C)C", 0.1),
    ("C#N", 1.2),
    ("C(F)(F)F", 1.6),
    ("C(=O)O", -1.2),
    ("C(=O)N", -0.6),
    ("S(C)(=O)=O", -0.9),
    ("c9ccccc9", 2.0),
    ("C9CC9", 1.0),
    ("OCC", 0.6),
    ("CO", -0.2),
    ("[N+](=O)[O-]", 0.8),
)


class ToyMolecule(NamedTuple):
    smiles: str
    scaffold: int
    site_a: int
    site_b: int
    clean_label: float


def library(n: int) -> List[ToyMolecule]:
    """
    The first ``n`` molecules of the library, noise-free.

    Molecule m belongs to series m // 5. A series fixes the scaffold and the
    site-b substituent and walks site a through five substituents.
    """
    if not 1 <= n <= MAX_MOLECULES:
        raise ValueError(f"n must lie in 1..{MAX_MOLECULES}, got {n}")
    count = len(SUBSTITUENTS)
    molecules = []
    for m in range(n):
        series, position = divmod(m, SERIES_SIZE)
        scaffold = series % len(SCAFFOLDS)
        site_b = (series * 7) % count
        site_a = (series * 3 + position * 4) % count
        template, offset = SCAFFOLDS[scaffold]
        smiles = template.format(a=SUBSTITUENTS[site_a][0], b=SUBSTITUENTS[site_b][0])
        label = round(offset + SUBSTITUENTS[site_a][1] + SUBSTITUENTS[site_b][1], 2)
        molecules.append(ToyMolecule(smiles, scaffold, site_a, site_b, label))
    return molecules


def make_sar_dataset(n: int = 60, seed: int = 0, noise: float = 0.1) -> pd.DataFrame:
    """Columns ``id``, ``smiles``, ``label``; noise is N(0, noise**2) from ``default_rng(seed)``."""
    if noise < 0:
        raise ValueError("noise must be non-negative")
    molecules = library(n)
    labels = np.array([mol.clean_label for mol in molecules])
    if noise > 0:
        labels = labels + np.random.default_rng(seed).normal(0.0, noise, size=n)
    return pd.DataFrame(
        {
            "id": [f"toy-{index:03d}" for index in range(n)],
            "smiles": [mol.smiles for mol in molecules],
            "label": np.round(labels, 4),
        }
    )


def bundled_dataset_path() -> Path:
    "The shipped 60-molecule noise-free dataset (``make_sar_dataset(60, noise=0)``)."
    return Path(str(resources.files("forge") / "data" / "toy_sar.csv"))
