import pytest

from algebra.abgroup import splice_extension
from algebra.linalg import FinGenAbGroup
from algebra.report import FpSpace, GradedReport, UnitClass, parse_entry, unit_class_in
from reference import FamilySpec, closed_form
from util.errors import InputError


def test_json_is_canonical():
    report = closed_form(FamilySpec.parse("baumslag_solitar", ["5", "3"]), 4)
    text = report.dumps()
    again = GradedReport.from_json(text)
    assert again.dumps() == text
    assert again.k_theory.K0.undetermined


@pytest.mark.parametrize("family,args", [("grigorchuk", []), ("ggs", ["3"]), ("lamplighter", ["invariants=2,2"])])
def test_json_round_trip_families(family, args):
    text = closed_form(FamilySpec.parse(family, args), 6).dumps()
    assert GradedReport.from_json(text).dumps() == text


def test_universal_coefficients():
    report = closed_form(FamilySpec.parse("grigorchuk"), 6).with_coefficients(2)
    assert report.coefficients == "F2"
    assert str(report.homology[0]) == "0"
    assert str(report.homology[2]) == "F2"
    assert str(report.homology[3]) == "F2^3"
    odd = closed_form(FamilySpec.parse("grigorchuk"), 6).with_coefficients(3)
    assert all(str(e) == "0" for e in odd.homology.values())


def test_universal_coefficients_on_undetermined_extension():
    report = GradedReport()
    report.set_homology(0, splice_extension(FinGenAbGroup.cyclic(2), FinGenAbGroup.cyclic(2)), "x")
    report.set_homology(1, FinGenAbGroup.free(1), "x")
    out = report.with_coefficients(2)
    assert out.homology[0] == FpSpace(2, None)
    assert out.homology[1] == FpSpace(2, None)
    assert str(out.homology[1]) == "undetermined"


def test_unit_class():
    assert UnitClass.parse("0").is_zero
    u = UnitClass.parse("[1, 0] of order 2")
    assert u == UnitClass((1, 0), 2)
    assert str(UnitClass((1,), None)) == "[1] of order inf"
    assert UnitClass.parse("[1] of order inf").order is None
    with pytest.raises(InputError):
        UnitClass.parse("one")


def test_unit_class_in_group():
    g = FinGenAbGroup.from_invariants([2, 4])
    assert unit_class_in(g, [1, 2]).order == 2
    assert unit_class_in(g, [0, 1]).order == 4
    assert unit_class_in(g, [0, 4]).is_zero
    assert unit_class_in(FinGenAbGroup.free(1), [3]).order is None


def test_parse_entry():
    assert parse_entry("Z/2 + Z") == FinGenAbGroup.from_invariants([2, 0])
    assert parse_entry("F3^2") == FpSpace(3, 2)
    ext = parse_entry("extension of Z/4 by Z/2 (undetermined)")
    assert ext.sub == FinGenAbGroup.cyclic(2) and ext.quot == FinGenAbGroup.cyclic(4)


def test_table_rendering():
    report = closed_form(FamilySpec.parse("baumslag_solitar", ["5", "3"]), 2)
    table = report.to_table()
    assert table.splitlines()[0].startswith("H_0")
    assert "extension of Z/4 by Z/2 (undetermined)" in table
    assert "flag: K_0: extension undetermined" in table
    assert "[1]_0" not in table


def test_truncate_and_merge():
    a = closed_form(FamilySpec.parse("ggs", ["3"]), 5).truncate(2)
    assert sorted(a.homology) == [0, 1, 2]
    assert "H3" not in a.provenance
    b = GradedReport()
    b.set_homology(3, FinGenAbGroup.cyclic(3), "engine")
    b.flag("extra")
    a.merge(b)
    assert sorted(a.homology) == [0, 1, 2, 3]
    assert a.provenance["H3"] == "engine"
    assert a.flags[-1] == "extra"
