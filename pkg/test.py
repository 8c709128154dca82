"""
Self-checks: randomized algebraic identities, internal cross-validations and
agreement of every engine with the closed-form tables. Run through
`python main.py check` or directly with `python test.py`.
"""
import os
import sys
sys.path.append(os.getcwd())
import functools
import glob
import itertools
import math
from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

import util.misc as utils
from algebra.abgroup import (AbMap, AbPresentation, ExtensionResult, abmap_check, abmap_cokernel,
                             abmap_kernel)
from algebra.linalg import (FinGenAbGroup, IntMatrix, RatMatrix, binomial_sign_matrix, determinant,
                            cokernel, eigenvalue_one_multiplicity, exterior_power, kernel_rank,
                            nullity_mod_p, smith_normal_form)
from algebra.report import FpSpace
from algebra.selfsim import FREE_ABELIAN_MODE, GroupWord, phi1, phi1_via_transfer, with_default_abelianization
from engine import (_inclusion_minus_transpose, free_abelian_engine, graph_engine, grigorchuk_homology,
                    katsura_engine, klein_mod2, multispinal_report, run_engine, sunic_orbit_count)
from inputs.documents import (FreeAbelianInput, GraphInput, KatsuraInput, MultispinalInput, PhiEntry,
                              read_document)
from main import get_parser, load_config
from reference import FamilySpec, closed_form
from util.errors import SelfSimError
print = functools.partial(print, flush=True)

GE_SWAP = ((0, 1), (1, 0))


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def _fail(name, detail):
    return CheckResult(name, False, detail)


def _as_group(entry):
    if isinstance(entry, ExtensionResult):
        return entry.resolved
    if isinstance(entry, FinGenAbGroup):
        return entry
    return None


def _random_int_matrix(rng, rows, cols, bound):
    return IntMatrix.from_rows(rng.integers(-bound, bound + 1, size=(rows, cols)).tolist(), cols=cols)


# ---------------------------------------------------------------------------
# linear algebra


def check_snf_contract(rng, trials=500, max_size=12, entry_bound=9):
    """U·M·V = D, unimodular U and V, diagonal D with a divisibility chain."""
    for t in range(trials):
        rows, cols = (int(x) for x in rng.integers(0, max_size + 1, size=2))
        M = _random_int_matrix(rng, rows, cols, entry_bound)
        snf = smith_normal_form(M)
        if snf.U @ M @ snf.V != snf.D:
            return _fail("snf contract", "U·M·V != D for {!r}".format(M))
        if abs(determinant(snf.U)) != 1 or abs(determinant(snf.V)) != 1:
            return _fail("snf contract", "transform not unimodular for {!r}".format(M))
        if snf.U_inv @ snf.U != IntMatrix.identity(rows):
            return _fail("snf contract", "U_inv is not the inverse of U for {!r}".format(M))
        for i in range(rows):
            for j in range(cols):
                if i != j and snf.D[i, j] != 0:
                    return _fail("snf contract", "D not diagonal for {!r}".format(M))
        nonzero = [d for d in snf.diag if d != 0]
        if any(d < 0 for d in snf.diag) or snf.diag[:len(nonzero)] != tuple(nonzero):
            return _fail("snf contract", "zeros before nonzero diagonal entries: {}".format(snf.diag))
        if any(b % a != 0 for a, b in zip(nonzero, nonzero[1:])):
            return _fail("snf contract", "no divisibility chain: {}".format(snf.diag))
    return CheckResult("snf contract", True, "{} matrices".format(trials))


def check_cauchy_binet(rng, trials=100, max_q=3, max_size=6):
    """Λ^q(AB) = Λ^q(A)·Λ^q(B)."""
    for t in range(trials):
        n = int(rng.integers(1, max_size + 1))
        q = int(rng.integers(0, min(max_q, n) + 1))
        A = _random_int_matrix(rng, n, n, 4)
        B = _random_int_matrix(rng, n, n, 4)
        if exterior_power(A @ B, q) != exterior_power(A, q) @ exterior_power(B, q):
            return _fail("cauchy-binet", "n = {}, q = {}".format(n, q))
    return CheckResult("cauchy-binet", True, "{} pairs".format(trials))


def check_binomial_cube(limit=50):
    """The binomial sign matrix satisfies A^3 = (-1)^n I."""
    for n in range(limit + 1):
        A = binomial_sign_matrix(n)
        if A ** 3 != IntMatrix.identity(n + 1).scale((-1) ** n):
            return _fail("binomial cube", "n = {}".format(n))
    return CheckResult("binomial cube", True, "n <= {}".format(limit))


def check_trace_periodicity(limit=60):
    pattern = (1, 1, 0, -1, -1, 0)
    for n in range(limit + 1):
        A = binomial_sign_matrix(n)
        trace = sum(A[i, i] for i in range(n + 1))
        if trace != pattern[n % 6]:
            return _fail("trace periodicity", "n = {}: trace {}".format(n, trace))
    return CheckResult("trace periodicity", True, "n <= {}".format(limit))


def _random_finite_invariants(rng, max_order):
    while True:
        invariants = [int(n) for n in rng.integers(2, 9, size=int(rng.integers(1, 4)))]
        if int(np.prod(invariants)) <= max_order:
            return invariants


def random_finite_abmap(rng, max_order=200):
    """A well-defined map between Z/s_1 + ... and Z/t_1 + ..., both of order <= max_order."""
    src, tgt = _random_finite_invariants(rng, max_order), _random_finite_invariants(rng, max_order)
    rows = []
    for t in tgt:
        # Z/s -> Z/t is x -> a·x with a a multiple of t / gcd(s, t)
        rows.append([int(rng.integers(0, math.gcd(s, t))) * (t // math.gcd(s, t)) for s in src])
    matrix = IntMatrix.from_rows(rows, cols=len(src))
    return AbMap(AbPresentation.from_invariants(src), AbPresentation.from_invariants(tgt), matrix), src, tgt


def image_size(m, src, tgt):
    """|im m| by walking every element of the source."""
    image = set()
    for x in itertools.product(*(range(s) for s in src)):
        image.add(tuple(sum(m.matrix[j, i] * x[i] for i in range(len(src))) % t for j, t in enumerate(tgt)))
    return len(image)


def check_abmap_orders(rng, trials=100, max_order=200):
    """|coker|·|im| = |target| and |ker|·|im| = |source| against brute-force images."""
    for t in range(trials):
        m, src, tgt = random_finite_abmap(rng, max_order)
        if not abmap_check(m).ok:
            return _fail("abmap orders", "generated map is ill-defined: {}".format(m.matrix.tolist()))
        im = image_size(m, src, tgt)
        coker, ker = abmap_cokernel(m), abmap_kernel(m)
        if coker.order() * im != int(np.prod(tgt)) or ker.order() * im != int(np.prod(src)):
            return _fail("abmap orders", "{} -> {} by {}: |coker| = {}, |ker| = {}, |im| = {}".format(
                src, tgt, m.matrix.tolist(), coker.order(), ker.order(), im))
    return CheckResult("abmap orders", True, "{} maps".format(trials))


# ---------------------------------------------------------------------------
# Klein four group and Grigorchuk


def check_klein_functoriality(limit=10):
    """H_n(φψ; F_2) = H_n(φ; F_2)·H_n(ψ; F_2) over GL_2(F_2)."""
    gl2 = [np.array(m, dtype=np.int64).reshape(2, 2) for m in itertools.product((0, 1), repeat=4)]
    gl2 = [m for m in gl2 if (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]) % 2 == 1]
    for n in range(limit + 1):
        for f, g in itertools.product(gl2, repeat=2):
            left = klein_mod2((f @ g) % 2, n)
            right = (klein_mod2(f, n) @ klein_mod2(g, n)) % 2
            if not np.array_equal(left, right):
                return _fail("klein functoriality", "n = {}, φ = {}, ψ = {}".format(n, f.tolist(), g.tolist()))
    return CheckResult("klein functoriality", True, "{} automorphisms, n <= {}".format(len(gl2), limit))


def _dims(group):
    return group.tensor_rank(2)


def check_brauer_lift(limit=40):
    """dim H_n of the Grigorchuk groupoid equals the fixed rank of A^4."""
    table = closed_form(FamilySpec("grigorchuk"), limit)
    for n in range(1, limit + 1):
        rank = eigenvalue_one_multiplicity(binomial_sign_matrix(n) ** 4)
        if rank != _dims(table.homology[n]):
            return _fail("brauer lift", "n = {}: {} vs {}".format(n, rank, table.homology[n]))
    return CheckResult("brauer lift", True, "n <= {}".format(limit))


def check_grigorchuk_routes(limit=30, shuffle_limit=20):
    table = closed_form(FamilySpec("grigorchuk"), limit)
    for n in tqdm(range(limit + 1), desc="grigorchuk", disable=None, leave=False):
        try:
            group = grigorchuk_homology(n, shuffle_limit=shuffle_limit)
        except SelfSimError as exc:
            return _fail("grigorchuk shuffle/brauer", "n = {}: {}".format(n, exc))
        if group != table.homology[n]:
            return _fail("grigorchuk shuffle/brauer", "n = {}: {} vs {}".format(n, group, table.homology[n]))
    return CheckResult("grigorchuk shuffle/brauer", True, "n <= {}".format(limit))


def check_ge_mod2(limit=20):
    """
    Mod-2 homology of the Grigorchuk–Erschler groupoid: F_2 in degree 1 and
    dimension n + 1 in every degree n >= 2, the latter from the shuffle route.
    """
    table = closed_form(FamilySpec("grigorchuk_erschler"), limit).with_coefficients(2)
    if limit >= 1 and table.homology[1] != FpSpace(2, 1):
        return _fail("grigorchuk-erschler mod 2", "n = 1: {} vs F2".format(table.homology[1]))
    nullity = []
    for n in range(limit + 1):
        K = klein_mod2(np.array(GE_SWAP, dtype=np.int64), n)
        fixed = (np.eye(n + 1, dtype=np.int64) - K) % 2
        nullity.append(nullity_mod_p(fixed, 2))
    for n in range(2, limit + 1):
        dim = nullity[n] + nullity[n - 1]
        if dim != n + 1 or table.homology[n] != FpSpace(2, n + 1):
            return _fail("grigorchuk-erschler mod 2", "n = {}: {} vs {}".format(n, dim, table.homology[n]))
    return CheckResult("grigorchuk-erschler mod 2", True, "n <= {}".format(limit))


# ---------------------------------------------------------------------------
# graphs and Katsura data


def _random_katsura(rng, max_size):
    n = int(rng.integers(1, max_size + 1))
    A = rng.integers(0, 3, size=(n, n))
    B = rng.integers(-2, 3, size=(n, n)) * (A > 0)
    return KatsuraInput(IntMatrix.from_rows(A.tolist()), IntMatrix.from_rows(B.tolist()))


def _transpose_agrees(k, report):
    """Recompute H_0 and H_2 from the transposed maps: coker M and coker M^T share torsion."""
    regular = GraphInput.with_default_regular(k.A).regular
    MA, MB = _inclusion_minus_transpose(k.A, regular), _inclusion_minus_transpose(k.B, regular)
    h0 = FinGenAbGroup(cokernel(MA.T).torsion, kernel_rank(MA.T))
    h2 = FinGenAbGroup.free(cokernel(MB.T).free_rank)
    return report.homology[0] == h0 and report.homology[2] == h2


def check_katsura(rng, trials=50, max_size=6):
    """Rank balance, agreement with the graph engine and the B = 0 degeneration."""
    for t in range(trials):
        k = _random_katsura(rng, max_size)
        report = katsura_engine(k, 3)
        K = report.k_theory
        if K.K0.free_rank != K.K1.free_rank:
            return _fail("katsura", "rank K_0 != rank K_1 for A = {}, B = {}".format(k.A, k.B))
        graph = graph_engine(GraphInput.with_default_regular(k.A), 3)
        if report.homology[0] != graph.homology[0]:
            return _fail("katsura", "H_0 differs from the graph engine for A = {}".format(k.A))
        zero = katsura_engine(KatsuraInput(k.A, IntMatrix.zeros(k.A.rows, k.A.cols)), 3)
        singular = k.A.rows - len(GraphInput.with_default_regular(k.A).regular)
        expected = graph.homology[1].direct_sum(FinGenAbGroup.free(singular))
        if zero.homology[1] != expected or not zero.homology[2].is_trivial():
            return _fail("katsura", "B = 0 degeneration fails for A = {}".format(k.A))
        if not _transpose_agrees(k, report):
            return _fail("katsura", "transpose recomputation disagrees for A = {}, B = {}".format(k.A, k.B))
    return CheckResult("katsura", True, "{} pairs".format(trials))


# ---------------------------------------------------------------------------
# per-document checks


def _random_word(action, rng, length):
    letters = []
    for _ in range(length):
        name = action.names[int(rng.integers(len(action.names)))]
        letters.append((name, 1 if name in action.involutions or rng.integers(2) else -1))
    w = GroupWord()
    for sym, exp in letters:
        w = w.mul(GroupWord(((sym, exp),)), action.involutions)
    return w


def check_cocycle(action, rng, words=20, length=6, depth=6):
    """(uv)(p) = u(v(p)) and (uv)|_x = u|_v(x)·v|_x, compared on random paths."""
    inv = action.involutions
    for _ in range(words):
        u, v = _random_word(action, rng, length), _random_word(action, rng, length)
        uv = u.mul(v, inv)
        p = tuple(int(x) for x in rng.integers(action.alphabet_size, size=depth))
        if action.act(uv, p) != action.act(u, action.act(v, p)):
            return _fail("cocycle", "{} · {} on {}".format(u, v, p))
        x = p[:1]
        left = action.section(uv, x)
        right = action.section(u, action.act(v, x)).mul(action.section(v, x), inv)
        if action.act(left, p[1:]) != action.act(right, p[1:]):
            return _fail("cocycle", "sections of {} · {} at {}".format(u, v, x))
    return CheckResult("cocycle", True, "{} word pairs".format(words))


def check_transfer(action):
    """Φ_1 from section sums agrees with the transfer composite H_1(σ_x)∘tr."""
    action = with_default_abelianization(action)
    if action.abelianization is None or not action.is_transitive():
        return None
    direct, via = phi1(action), phi1_via_transfer(action)
    pres = action.abelianization.presentation
    diff = direct.matrix - via.matrix
    for j in range(diff.cols):
        if not pres.contains([diff[i, j] for i in range(diff.rows)]):
            return _fail("transfer", "Φ_1 columns {} differ".format(j))
    return CheckResult("transfer", True)


def check_orbits(ms):
    """Orbits of Φ_a on B\\{0} count the free rank of K_1."""
    if len(ms.A0) != 1:
        return None
    orbits = sunic_orbit_count(ms)
    rank = multispinal_report(ms, 1).k_theory.K1.free_rank
    if orbits != rank:
        return _fail("orbits", "{} orbits but rank K_1 = {}".format(orbits, rank))
    return CheckResult("orbits", True, "{} orbits".format(orbits))


def check_hk(report, name="hk"):
    """K_0 / K_1 as the even / odd sums of homology, for reports flagged HK."""
    if report.k_theory is None or not any(f.startswith("HK property") for f in report.flags):
        return None
    groups = {n: _as_group(e) for n, e in report.homology.items()}
    if any(g is None for g in groups.values()):
        return None
    even = FinGenAbGroup.trivial().direct_sum(*[g for n, g in groups.items() if n % 2 == 0])
    odd = FinGenAbGroup.trivial().direct_sum(*[g for n, g in groups.items() if n % 2 == 1])
    K = report.k_theory
    if _as_group(K.K0) != even or _as_group(K.K1) != odd:
        return _fail(name, "K = ({}, {}) but sums of H are ({}, {})".format(K.K0, K.K1, even, odd))
    return CheckResult(name, True)


def family_spec(family):
    fam = dict(family)
    name = fam.pop("name")
    args = ["{}={}".format(k, ",".join(str(x) for x in v) if isinstance(v, (list, tuple)) else v)
            for k, v in fam.items()]
    return FamilySpec.parse(name, args)


def _entries_agree(ours, theirs):
    """Groups compare as groups; an undetermined entry only matches the same undetermined extension."""
    a, b = _as_group(ours), _as_group(theirs)
    if a is not None and b is not None:
        return a == b
    if isinstance(ours, ExtensionResult) and isinstance(theirs, ExtensionResult):
        return ours.undetermined and theirs.undetermined and (ours.sub, ours.quot) == (theirs.sub, theirs.quot)
    return False


def compare_reports(engine_report, reference, name):
    """Every degree and K-group known to both sides must agree; units compare by order."""
    for n in sorted(set(engine_report.homology) & set(reference.homology)):
        ours, theirs = engine_report.homology[n], reference.homology[n]
        if not _entries_agree(ours, theirs):
            return _fail(name, "H_{}: {} vs {}".format(n, ours, theirs))
    if engine_report.k_theory is not None and reference.k_theory is not None:
        ours, theirs = engine_report.k_theory, reference.k_theory
        for label, a, b in (("K_0", ours.K0, theirs.K0), ("K_1", ours.K1, theirs.K1)):
            if not _entries_agree(a, b):
                return _fail(name, "{}: {} vs {}".format(label, a, b))
        if ours.unit_class is not None and theirs.unit_class is not None:
            if ours.unit_class.order != theirs.unit_class.order:
                return _fail(name, "unit class {} vs {}".format(ours.unit_class, theirs.unit_class))
    return CheckResult(name, True)


def check_document(doc, cfg):
    """Every check applicable to one input document."""
    rng = np.random.default_rng(cfg.run.seed)
    max_degree = min(cfg.run.max_degree, cfg.check.brauer_limit)
    results = []
    if doc.kind == "automaton":
        results.append(check_cocycle(doc.payload, rng, cfg.check.cocycle_words, cfg.check.cocycle_length))
        results.append(check_transfer(doc.payload))
    elif doc.kind == "multispinal":
        results.append(check_orbits(doc.payload))
    if doc.kind == "free_abelian":
        max_degree = max(max_degree, doc.payload.A.rows + 1)
    elif doc.kind == "automaton" and FREE_ABELIAN_MODE in doc.payload.assumptions:
        max_degree = max(max_degree, len(doc.payload.names) + 1)
    report = run_engine(doc, max_degree, cfg.engines)
    results.append(check_hk(report))
    if doc.family:
        spec = family_spec(doc.family)
        results.append(compare_reports(report, closed_form(spec, max_degree), "reference {}".format(spec)))
    return [CheckResult("{}: {}".format(doc.name, r.name), r.ok, r.detail) for r in results if r is not None]


# ---------------------------------------------------------------------------
# families


def ggs_input(m):
    """Spinal group with B = Z/m acting through position m - 1 only."""
    phi = [PhiEntry("hom", IntMatrix.from_rows([[1]]))]
    phi += [PhiEntry("hom", IntMatrix.zeros(1, 1)) for _ in range(1, m - 1)]
    phi.append(PhiEntry("aut", IntMatrix.from_rows([[1]])))
    return MultispinalInput(m, m, 1, tuple(phi), separating=True)


def sausage_input(n):
    rows = [[0] * n for _ in range(n)]
    for i in range(n - 1):
        rows[i][i + 1] = 1
    rows[n - 1][0] = "1/2"
    return FreeAbelianInput(RatMatrix.from_rows(rows), 2)


def check_families(cfg):
    c = cfg.check
    max_degree = min(cfg.run.max_degree, c.brauer_limit)
    results = []
    for m in c.ggs:
        report = multispinal_report(ggs_input(m), max_degree)
        results.append(compare_reports(report, closed_form(FamilySpec("ggs", (("m", m),)), max_degree),
                                       "ggs m = {}".format(m)))
    for n in c.sausage:
        report = free_abelian_engine(sausage_input(n), max_degree)
        results.append(compare_reports(report, closed_form(FamilySpec("sausage", (("n", n),)), max_degree),
                                       "sausage n = {}".format(n)))
    for invariants in c.lamplighter:
        spec = FamilySpec("lamplighter", (("invariants", tuple(invariants)),))
        results.append(check_hk(closed_form(spec, max_degree), "hk {}".format(spec)))
    return [r for r in results if r is not None]


def run_checks(cfg):
    c = cfg.check
    rng = utils.seed_everything(cfg.run.seed)
    suites = [
        lambda: check_snf_contract(rng, c.snf.trials, c.snf.max_size, c.snf.entry_bound),
        lambda: check_cauchy_binet(rng, c.cauchy_binet.trials, c.cauchy_binet.max_q, c.cauchy_binet.max_size),
        lambda: check_abmap_orders(rng, c.abmap.trials, c.abmap.max_order),
        lambda: check_binomial_cube(c.cube_limit),
        lambda: check_trace_periodicity(c.trace_limit),
        lambda: check_brauer_lift(c.brauer_lift_limit),
        lambda: check_grigorchuk_routes(c.brauer_limit, c.shuffle_limit),
        lambda: check_ge_mod2(c.ge_mod2_limit),
        lambda: check_klein_functoriality(c.functoriality_limit),
        lambda: check_katsura(rng, c.katsura.trials, c.katsura.max_size),
    ]
    results = []
    metric_logger = utils.MetricLogger()
    for suite in metric_logger.log_every(suites, c.print_freq, "check"):
        try:
            results.append(suite())
        except SelfSimError as exc:
            results.append(_fail(type(exc).__name__, str(exc)))
        metric_logger.update(failed=sum(1 for r in results if not r.ok))
    results += check_families(cfg)
    for path in sorted(glob.glob(os.path.join(c.fixtures, "*.json"))):
        try:
            results += check_document(read_document(path), cfg)
        except SelfSimError as exc:
            results.append(_fail(os.path.basename(path), str(exc)))
    return results


if __name__ == "__main__":
    sys.path.append(os.getcwd())
    parser = get_parser()
    opt, unknown = parser.parse_known_args(["check"] + sys.argv[1:])
    cfg = load_config(opt, unknown)
    utils.set_quiet(cfg.run.quiet)
    utils.set_verbose(cfg.run.verbose)
    results = run_checks(cfg)
    failed = [r for r in results if not r.ok]
    for r in failed:
        print("FAILED {}: {}".format(r.name, r.detail))
    print("{} checks, {} failed".format(len(results), len(failed)))
    sys.exit(1 if failed else 0)
