import numpy as np
import pytest

from forge.exceptions import ParseError, ParseErrorKind
from forge.molgraph import BondOrder, Stereo, canonical_smiles
from forge.smiles import canonicalize, parse_smiles, random_smiles, write_smiles

from conftest import CORPUS


def test_parse_ethanol():
    g = parse_smiles("CCO")
    assert g.num_atoms == 3
    assert g.num_bonds == 2
    assert [a.element for a in g.atoms] == [6, 6, 8]
    assert [a.h_count for a in g.atoms] == [3, 2, 1]


def test_parse_benzene_is_aromatic_ring():
    g = parse_smiles("c1ccccc1")
    assert all(a.aromatic and a.h_count == 1 for a in g.atoms)
    assert all(b.order == BondOrder.AROMATIC for b in g.bonds)
    assert all(g.ring_atom) and all(g.ring_bond)


def test_parse_explicit_bonds():
    g = parse_smiles("C=CC#N")
    assert [b.order for b in g.bonds] == [BondOrder.DOUBLE, BondOrder.SINGLE, BondOrder.TRIPLE]
    assert [a.h_count for a in g.atoms] == [2, 1, 0, 0]


def test_bracket_atoms():
    ammonium = parse_smiles("[NH4+]")
    assert ammonium.atoms[0].formal_charge == 1
    assert ammonium.atoms[0].h_count == 4

    g = parse_smiles("[13C@@H](F)(Cl)Br")
    center = g.atoms[0]
    assert center.isotope == 13
    assert center.stereo == Stereo.CW
    assert center.h_count == 1
    assert [a.element for a in g.atoms] == [6, 9, 17, 35]


def test_aromatic_nitrogen_with_hydrogen():
    g = parse_smiles("c1cc[nH]c1")
    nitrogen = g.atoms[3]
    assert nitrogen.element == 7 and nitrogen.aromatic and nitrogen.h_count == 1


@pytest.mark.parametrize(
    "text, kind, position",
    [
        ("", ParseErrorKind.EMPTY_INPUT, 0),
        ("   ", ParseErrorKind.EMPTY_INPUT, 0),
        ("C(C", ParseErrorKind.UNBALANCED_PARENTHESIS, 1),
        ("  C(C", ParseErrorKind.UNBALANCED_PARENTHESIS, 3),
        ("CC)", ParseErrorKind.UNBALANCED_PARENTHESIS, 2),
        ("C()C", ParseErrorKind.UNBALANCED_PARENTHESIS, 2),
        ("C1CC", ParseErrorKind.UNCLOSED_RING, 1),
        ("C11", ParseErrorKind.UNCLOSED_RING, 2),
        ("C.C", ParseErrorKind.DISCONNECTED_PARTS, 1),
        ("CX", ParseErrorKind.UNKNOWN_SYMBOL, 1),
        ("C=", ParseErrorKind.UNKNOWN_SYMBOL, 1),
        ("*C", ParseErrorKind.UNKNOWN_SYMBOL, 0),
        ("C[Xx]", ParseErrorKind.BAD_BRACKET_ATOM, 1),
        ("C[C", ParseErrorKind.BAD_BRACKET_ATOM, 1),
        ("FC(F)(F)(F)F", ParseErrorKind.VALENCE_OVERFLOW, 1),
    ],
)
def test_parse_errors(text, kind, position):
    with pytest.raises(ParseError) as info:
        parse_smiles(text)
    assert info.value.kind == kind
    assert info.value.position == position


def test_parse_error_renders_kind_and_position():
    with pytest.raises(ParseError) as info:
        parse_smiles("C1CC")
    assert "kind=UnclosedRing" in info.value.render()
    assert "position=1" in info.value.render()


def test_wildcard_only_when_allowed():
    g = parse_smiles("[*]CC", allow_wildcard=True)
    assert g.atoms[0].element == 0
    with pytest.raises(ParseError):
        parse_smiles("[*]CC")


def test_write_follows_index_order():
    assert write_smiles(parse_smiles("CCO")) == "CCO"
    assert write_smiles(parse_smiles("CC(C)O")) == "CC(C)O"
    assert write_smiles(parse_smiles("c1ccccc1")) == "c1ccccc1"


def test_write_uses_brackets_when_needed():
    assert write_smiles(parse_smiles("[NH4+]")) == "[NH4+]"
    assert write_smiles(parse_smiles("c1cc[nH]c1")) == "c1cc[nH]c1"


def test_canonical_smiles_ignores_input_order():
    assert canonicalize("OCC") == canonicalize("CCO")
    assert canonicalize("c1ccccc1C") == canonicalize("Cc1ccccc1")
    assert canonicalize("OC(=O)C") == canonicalize("CC(=O)O")


@pytest.mark.parametrize("smiles", CORPUS)
def test_written_smiles_round_trip(smiles):
    g = parse_smiles(smiles)
    assert canonical_smiles(parse_smiles(write_smiles(g))) == canonical_smiles(g)


def test_random_smiles_parse_to_same_molecule(corpus_graphs):
    rng = np.random.default_rng(7)
    for g in corpus_graphs:
        expected = canonical_smiles(g)
        for _ in range(5):
            assert canonical_smiles(parse_smiles(random_smiles(g, rng))) == expected


@pytest.mark.parametrize(
    "smiles",
    [
        "C" * 5000,
        "C" + "C(O)" * 2000 + "N",
        "C1" + "C" * 3000 + "C1",
    ],
)
def test_long_chains_write_without_recursion(smiles):
    g = parse_smiles(smiles)
    assert write_smiles(g) == smiles
    rewritten = parse_smiles(random_smiles(g, np.random.default_rng(3)))
    assert rewritten.num_atoms == g.num_atoms
    assert rewritten.num_bonds == g.num_bonds
