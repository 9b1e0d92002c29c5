from fractions import Fraction

import pytest

from phi4box.diagrams import (Diagram, ExternalLeg, enumerate_diagrams,
                              enumerate_trees, enumerate_cauchy_trees,
                              unlabeled_count, all_pairings,
                              wick_contract_xi, qft_weight, hbar_power,
                              classical_loop_weight, beta_match,
                              _loop_cycle_length)


def test_counting_laws_sample():
    for n, k in [(2, 0), (2, 1), (4, 1), (4, 2), (6, 2), (8, 3)]:
        for d in enumerate_diagrams(n, k):
            assert d.num_lines == n // 2 + 2 * k
            assert d.loop_count() == k - n // 2 + 1
            assert d.is_connected()
            d.validate()


def test_parity_and_capacity_guards():
    assert enumerate_diagrams(3, 1) == []     # odd total leg count
    assert enumerate_diagrams(6, 1) == []     # too many legs for one vertex
    assert enumerate_diagrams(4, 0) == []     # free line needs n = 2
    with pytest.raises(ValueError):
        enumerate_diagrams(-1, 0)


def test_tree_counts():
    # labeled quartic tree topologies: 1, 10, 280 for n = 4, 6, 8
    assert len(enumerate_trees(4)) == 1
    assert len(enumerate_trees(6)) == 10
    assert len(enumerate_trees(8)) == 280
    assert enumerate_trees(5) == []
    for d in enumerate_trees(6):
        assert d.loop_count() == 0
        assert d.weight == 1


def test_tree_enumeration_matches_brute_force():
    trees = enumerate_diagrams(6, 2)
    assert len([d for d in trees if d.loop_count() == 0]) == 10


def test_cauchy_tree_multiplicities():
    # order 2: one chain shape with multiplicity 3 (three child slots)
    ds = enumerate_cauchy_trees(2)
    assert len(ds) == 1
    assert ds[0].weight == 3
    assert sum(d.weight for d in enumerate_cauchy_trees(3)) == 12


def test_pairings_double_factorial():
    assert len(all_pairings(list(range(4)))) == 3
    assert len(all_pairings(list(range(6)))) == 15
    assert all_pairings([1]) == []


def test_qft_weights_compensated():
    # trees carry weight 1; the tadpole keeps its 1/2 symmetry factor
    for n, k in [(2, 0), (4, 1), (6, 2)]:
        tree = [d for d in enumerate_diagrams(n, k) if d.loop_count() == 0][0]
        assert qft_weight(n, k, tree) == Fraction(1)
    tadpole = enumerate_diagrams(2, 1)[0]
    assert qft_weight(2, 1, tadpole) == Fraction(1, 2)


def test_wick_contract_tadpole():
    tree = enumerate_diagrams(4, 1, tags=["ext", "ext", "xi", "xi"])[0]
    loops = wick_contract_xi(tree)
    assert len(loops) == 1
    d = loops[0]
    assert d.loop_count() == 1
    assert d.beta_power == 1
    assert _loop_cycle_length(d) == 1
    assert d.weight == Fraction(1)   # one pairing of the two xi legs


def test_hbar_power_law():
    tadpole = wick_contract_xi(
        enumerate_diagrams(4, 1, tags=["ext", "ext", "xi", "xi"])[0])[0]
    assert hbar_power(tadpole) == 2
    tree = enumerate_diagrams(4, 1)[0]
    assert hbar_power(tree) == 3


def test_classical_loop_weights():
    assert classical_loop_weight(1) == Fraction(1, 2)
    assert classical_loop_weight(2) == Fraction(1)
    assert classical_loop_weight(3) == Fraction(3)


def test_beta_match_values():
    tadpole = wick_contract_xi(
        enumerate_diagrams(4, 1, tags=["ext", "ext", "xi", "xi"])[0])[0]
    rep = beta_match(tadpole)
    assert rep.verified
    assert rep.beta_coeff == Fraction(1, 2)   # beta = (1/2)/pi = 1/(2 pi)


def test_canonical_key_invariance():
    d = enumerate_diagrams(4, 2)[0]
    # relabel internal vertices; the canonical key must not change
    swap = {0: 1, 1: 0}
    edges = tuple(
        (tuple(("v", swap[p[1]]) if p[0] == "v" else p for p in (a, b))
         + (lab,)) for a, b, lab in [(e[0], e[1], e[2]) for e in d.edges])
    edges = tuple((e[0], e[1], e[2]) for e in edges)
    d2 = Diagram(d.num_vertices, d.external, edges)
    assert d.canonical_key() == d2.canonical_key()


def test_unlabeled_count_collapses_orbits():
    labeled = enumerate_trees(6)
    assert unlabeled_count(labeled) < len(labeled)


def test_serialization_roundtrip_smoke():
    d = enumerate_diagrams(2, 1)[0]
    j = d.to_json_dict()
    assert j["vertices"] == 1
    assert len(j["edges"]) == d.num_lines
    art = d.ascii_art()
    assert "V0" in art
