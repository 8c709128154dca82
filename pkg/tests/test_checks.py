import numpy as np
import pytest

import main
from algebra.abgroup import splice_extension
from algebra.linalg import FinGenAbGroup
from algebra.report import GradedReport
from test import (check_abmap_orders, check_ge_mod2, check_klein_functoriality, compare_reports,
                  image_size, random_finite_abmap, run_checks)
from tests.conftest import ROOT

QUICK = [
    "run.max_degree=6",
    "check.fixtures={}".format(ROOT / "fixtures"),
    "check.snf.trials=20",
    "check.cauchy_binet.trials=10",
    "check.abmap.trials=20",
    "check.katsura.trials=10",
    "check.brauer_limit=12",
    "check.brauer_lift_limit=12",
    "check.shuffle_limit=8",
    "check.ge_mod2_limit=8",
    "check.functoriality_limit=4",
    "check.cube_limit=12",
    "check.trace_limit=12",
]


def _quick_config():
    parser = main.get_parser()
    opt, unknown = parser.parse_known_args(["check"] + QUICK + ["-q", "-b", str(ROOT / "configs" / "default.yaml")])
    return main.load_config(opt, unknown)


def test_run_checks_all_pass():
    results = run_checks(_quick_config())
    failed = ["{}: {}".format(r.name, r.detail) for r in results if not r.ok]
    assert failed == []
    names = {r.name for r in results}
    assert {"snf contract", "abmap orders", "grigorchuk-erschler mod 2"} <= names
    assert any(name.startswith("ggs3: ") for name in names)


def test_check_command_exit_code(capsys):
    code = main.main(["check"] + QUICK + ["-q", "-b", str(ROOT / "configs" / "default.yaml")])
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[-1].endswith(", 0 failed")


@pytest.mark.parametrize("limit", [1, 2, 8])
def test_ge_mod2_degrees(limit):
    assert check_ge_mod2(limit).ok


def test_klein_functoriality_small():
    assert check_klein_functoriality(3).ok


def test_abmap_orders_oracle():
    assert check_abmap_orders(np.random.default_rng(3), trials=60, max_order=200).ok


def test_random_finite_abmap_is_bounded():
    rng = np.random.default_rng(5)
    for _ in range(20):
        m, src, tgt = random_finite_abmap(rng, 50)
        assert int(np.prod(src)) <= 50 and int(np.prod(tgt)) <= 50
        assert 1 <= image_size(m, src, tgt) <= int(np.prod(tgt))


def _report(entry):
    report = GradedReport()
    report.set_homology(1, entry, "x")
    return report


def test_compare_reports_on_groups():
    z2, z4 = FinGenAbGroup.cyclic(2), FinGenAbGroup.cyclic(4)
    assert compare_reports(_report(z2), _report(z2), "same").ok
    assert not compare_reports(_report(z2), _report(z4), "differ").ok
    resolved = splice_extension(z2, FinGenAbGroup.trivial())
    assert compare_reports(_report(resolved), _report(z2), "resolved").ok


def test_compare_reports_on_undetermined_extensions():
    z2 = FinGenAbGroup.cyclic(2)
    open_ext = splice_extension(z2, z2)
    assert open_ext.undetermined
    assert not compare_reports(_report(open_ext), _report(FinGenAbGroup.from_invariants([2, 2])), "open").ok
    assert not compare_reports(_report(FinGenAbGroup.cyclic(4)), _report(open_ext), "open").ok
    assert compare_reports(_report(open_ext), _report(splice_extension(z2, z2)), "both open").ok
    other = splice_extension(z2, FinGenAbGroup.cyclic(4))
    assert not compare_reports(_report(open_ext), _report(other), "different pieces").ok
