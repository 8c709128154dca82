from math import comb

import numpy as np
import pytest

from algebra.linalg import FinGenAbGroup, IntMatrix, RatMatrix
from algebra.abgroup import ExtensionResult
from engine import (HK_FLAG, companion_matrix, default_engines, free_abelian_engine, grigorchuk_homology,
                    is_primitive, katsura_engine, klein_mod2, map_degrees, matrix_order_mod_p,
                    multispinal_report, run_engine, spectral_radius_probe, sunic_input, sunic_mod2_homology,
                    sunic_orbit_count)
from inputs.documents import KINDS, FreeAbelianInput, KatsuraInput
from util.errors import HypothesisError, InputError

Z = FinGenAbGroup.free(1)


def _g(text):
    return FinGenAbGroup.parse(text)


def test_graph_two_cycle(load):
    report = run_engine(load("graph_two_cycle"), 3)
    assert report.homology[0] == Z and report.homology[1] == Z
    assert report.homology[2].is_trivial()
    assert report.k_theory.K0 == Z and report.k_theory.K1 == Z
    assert report.k_theory.unit_class.order is None
    assert HK_FLAG in report.flags


def test_graph_bouquet_and_source(load):
    report = run_engine(load("graph_bouquet3"), 2)
    assert report.homology[0] == _g("Z/2")
    assert report.homology[1].is_trivial()
    assert report.k_theory.unit_class.order == 2
    report = run_engine(load("graph_source"), 2)
    assert report.homology[0] == Z
    assert report.homology[1].is_trivial()


def test_katsura_examples(load):
    report = run_engine(load("katsura_2_1"), 3)
    assert [str(report.homology[n]) for n in range(4)] == ["0", "Z", "Z", "0"]
    assert report.k_theory.K0 == Z and report.k_theory.K1 == Z
    assert report.k_theory.unit_class.is_zero
    report = run_engine(load("katsura_zero"), 2)
    assert [str(report.homology[n]) for n in range(3)] == ["Z", "Z", "0"]


def test_katsura_support_hypothesis():
    k = KatsuraInput(IntMatrix.from_rows([[0]]), IntMatrix.from_rows([[1]]))
    with pytest.raises(HypothesisError):
        katsura_engine(k)


def test_odometer(load):
    report = run_engine(load("odometer"), 4)
    assert [str(report.homology[n]) for n in range(5)] == ["0", "Z", "Z", "0", "0"]
    assert report.k_theory.K0 == Z and report.k_theory.K1 == Z
    assert any(f.startswith("self-replicating contracting checks passed") for f in report.flags)


def test_free_abelian_sausage3(load):
    report = run_engine(load("free_abelian_sausage3"), 5)
    assert [str(report.homology[n]) for n in range(6)] == ["0", "Z/3", "0", "Z", "Z", "0"]
    assert report.k_theory.K0 == Z
    assert report.k_theory.K1 == _g("Z/3 + Z")
    assert report.k_theory.unit_class.is_zero


def test_sausage2_from_automaton(load):
    report = run_engine(load("sausage2"), 4)
    assert [str(report.homology[n]) for n in range(5)] == ["0", "0", "Z/2", "0", "0"]
    assert report.k_theory.K0 == _g("Z/2")
    assert report.k_theory.K1.is_trivial()


def test_free_abelian_integrality_failure():
    f = FreeAbelianInput(RatMatrix.from_rows([["1/3"]]), 2)
    with pytest.raises(HypothesisError):
        free_abelian_engine(f)


def test_free_abelian_checks_skipped_when_not_contracting():
    f = FreeAbelianInput(RatMatrix.from_rows([[2]]), 2)
    report = free_abelian_engine(f, 2)
    assert any(f.startswith("self-replicating contracting checks skipped") for f in report.flags)


def test_spectral_radius_probe():
    A = RatMatrix.from_rows([[0, 1, 0], [0, 0, 1], ["1/2", 0, 0]])
    assert spectral_radius_probe(A) == pytest.approx(2 ** (-1 / 3), rel=1e-6)
    assert spectral_radius_probe(RatMatrix.from_rows([[0]])) == 0.0


def test_ggs3(load):
    report = run_engine(load("ggs3"), 4)
    assert report.homology[0] == _g("Z/2")
    assert all(report.homology[n] == _g("Z/3") for n in range(1, 5))
    assert report.k_theory.K0 == _g("Z/2 + Z^2")
    assert report.k_theory.K1 == _g("Z^2")
    assert report.k_theory.unit_class.order == 2


def test_grigorchuk_multispinal(load):
    report = run_engine(load("grigorchuk_multispinal"), 6)
    assert [str(report.homology[n]) for n in range(7)] == [
        "0", "0", "Z/2", "(Z/2)^2", "Z/2", "(Z/2)^2", "(Z/2)^3"]
    assert report.k_theory.K0 == Z and report.k_theory.K1 == Z
    assert report.k_theory.unit_class.is_zero
    assert any("Schur multiplier" in n for n in report.notes)


def test_grigorchuk_erschler_multispinal(load):
    report = run_engine(load("grigorchuk_erschler"), 4)
    assert report.homology[1] == _g("Z/2")
    assert 2 not in report.homology
    assert report.k_theory.K0 == _g("Z^2") and report.k_theory.K1 == _g("Z^2")


@pytest.mark.parametrize("name,k0,k1", [
    ("sunic_2_x3", "Z", "Z"),
    ("sunic_3_x1", "Z/2 + Z", "Z"),
])
def test_sunic_k_theory(load, name, k0, k1):
    report = run_engine(load(name), 1)
    assert report.k_theory.K0 == _g(k0)
    assert report.k_theory.K1 == _g(k1)
    assert sunic_orbit_count(load(name).payload) == 1


def test_sunic_input_matches_fixture(load):
    ms = sunic_input(2, (1, 1, 0, 1))
    assert ms.phi == load("sunic_2_x3").payload.phi


def test_companion_and_primitivity():
    C = companion_matrix((1, 1, 1), 2)
    assert C == IntMatrix.from_rows([[0, 1], [1, 1]])
    assert matrix_order_mod_p(C, 2) == 3
    assert is_primitive((1, 1, 0, 1), 2)
    assert not is_primitive((1, 0, 1), 2)
    with pytest.raises(InputError):
        companion_matrix((0, 1), 2)


def test_klein_mod2_small():
    assert np.array_equal(klein_mod2(np.eye(2, dtype=np.int64), 4), np.eye(5, dtype=np.int64))
    swap = np.array([[0, 1], [1, 0]], dtype=np.int64)
    assert np.array_equal(klein_mod2(swap, 3), np.fliplr(np.eye(4, dtype=np.int64)))
    assert np.array_equal(klein_mod2(swap, 0), np.ones((1, 1), dtype=np.int64))


def test_grigorchuk_routes_agree():
    for n in range(0, 13):
        group = grigorchuk_homology(n, shuffle_limit=12)
        expected = {0: 0, 1: 0, 2: 1, 3: 2, 4: 1, 5: 2, 6: 3}.get(n)
        if expected is not None:
            assert group == FinGenAbGroup.from_invariants([2] * expected)


def test_shuffle_route_rejects_even_order():
    with pytest.raises(HypothesisError):
        sunic_mod2_homology((1, 0, 1), 2)


def test_multispinal_report_workers_match_serial(load):
    ms = load("ggs3").payload
    assert multispinal_report(ms, 5, workers=0).homology == multispinal_report(ms, 5, workers=2).homology


def test_map_degrees_keeps_order():
    assert map_degrees(abs, [-3, 2, -1]) == [3, 2, 1]


@pytest.mark.parametrize("name,orbits", [("ggs3", 2), ("grigorchuk_multispinal", 1), ("grigorchuk_erschler", 2)])
def test_multispinal_orbit_note(load, name, orbits):
    report = run_engine(load(name), 2)
    note = "orbits of Φ_a on B\\{{0}}: {}".format(orbits)
    assert note in report.notes
    assert "note: " + note in report.to_table()


@pytest.mark.parametrize("name,max_degree", [("ggs3", 5), ("grigorchuk_multispinal", 4), ("sunic_3_x1", 3)])
def test_multispinal_resolved_degrees_are_groups(load, name, max_degree):
    report = run_engine(load(name), max_degree)
    for n, entry in report.homology.items():
        if isinstance(entry, ExtensionResult):
            assert entry.undetermined, "H_{} stored as a resolved extension".format(n)
        else:
            assert isinstance(entry, FinGenAbGroup)


def test_default_engines_cover_every_kind(load):
    engines = default_engines()
    assert sorted(engines) == sorted(KINDS)
    assert all("target" in engines[kind] for kind in KINDS)
    report = run_engine(load("katsura_2_1"), 2, engines=engines)
    assert report.homology == run_engine(load("katsura_2_1"), 2).homology


@pytest.mark.parametrize("n", range(1, 9))
def test_klein_mod2_of_companion_is_binomial(n):
    C_f = np.array([[0, 1], [1, 1]], dtype=np.int64)
    expected = [[comb(n - i, j) % 2 for j in range(n + 1)] for i in range(n + 1)]
    assert klein_mod2(C_f, n).tolist() == expected
