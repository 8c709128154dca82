"""
Homology and K-theory engines, one per input kind (graph, Katsura,
free abelian, multispinal, generic automaton), and the dispatch that picks
one from the `engines` section of the config.
"""
import functools
import os
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import itertools

import numpy as np
from omegaconf import OmegaConf
from sympy import Matrix

import util.misc as utils
from algebra.abgroup import AbMap, AbPresentation, abmap_cokernel, abmap_kernel, splice_extension
from algebra.linalg import (FinGenAbGroup, IntMatrix, binomial_sign_matrix, block_diagonal,
                            cokernel, cokernel_coordinates, determinant, eigenvalue_one_multiplicity,
                            exterior_power, inverse, kernel_rank, mod_p_reduce, nullity_mod_p,
                            scale_and_certify_integral)
from algebra.report import GradedReport, unit_class_in
from algebra.selfsim import (FREE_ABELIAN_MODE, FREE_GROUP_MODE, degree01_homology,
                             degree01_ktheory_free_group, virtual_endomorphism_matrix)
from inputs.documents import FreeAbelianInput, MultispinalInput, PhiEntry
from util.errors import ConsistencyError, HypothesisError, InputError

HK_FLAG = "HK property: K_i is the direct sum of H_(2q+i)"
GRIGORCHUK_POLY = (1, 1, 1)
GRIGORCHUK_NOTE = ("Röver–Nekrashevych group V(G) is rationally acyclic; "
                   "Schur multiplier H_2(V(G)) = Z/2")
SPECTRAL_TOLERANCE = 1e-9
DEFAULT_CONFIG = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs", "default.yaml")


def map_degrees(fn, degrees, workers=0, header="degrees"):
    """Evaluate fn on each degree, optionally in worker processes; results keep degree order."""
    degrees = list(degrees)
    if workers and workers > 1 and len(degrees) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, degrees))
    metric_logger = utils.MetricLogger(emit=utils.debug)
    out = []
    for n in metric_logger.log_every(degrees, 5, header):
        out.append(fn(n))
        metric_logger.update(degree=n)
    return out


def _zero_report(report, start, max_degree, provenance):
    for n in range(start, max_degree + 1):
        report.set_homology(n, FinGenAbGroup.trivial(), provenance)


# ---------------------------------------------------------------------------
# graphs and Katsura algebras


def _inclusion_minus_transpose(A, regular):
    """The map Z^regular -> Z^vertices, e_v -> e_v - sum_w A_{vw} e_w, i.e. id - (A')^T."""
    return IntMatrix.from_rows(
        [[int(w == v) - A[v, w] for v in regular] for w in range(A.rows)], cols=len(regular))


def _unit_class(presentation, vector):
    return unit_class_in(cokernel(presentation), cokernel_coordinates(presentation, vector))


def graph_engine(g, max_degree=10):
    M = _inclusion_minus_transpose(g.adjacency, g.regular)
    h0, h1 = cokernel(M), FinGenAbGroup.free(kernel_rank(M))
    report = GradedReport()
    report.set_homology(0, h0, "graph-engine: coker(id - A'^T)")
    if max_degree >= 1:
        report.set_homology(1, h1, "graph-engine: ker(id - A'^T)")
    _zero_report(report, 2, max_degree, "graph-engine")
    report.set_k_theory(h0, h1, _unit_class(M, [1] * g.adjacency.rows), "graph-engine")
    report.flag(HK_FLAG)
    return report


def katsura_engine(k, max_degree=10):
    A, B = k.A, k.B
    n = A.rows
    for i in range(n):
        for j in range(n):
            if A[i, j] == 0 and B[i, j] != 0:
                raise HypothesisError("B[{}][{}] = {} where A[{}][{}] = 0".format(i, j, B[i, j], i, j),
                                      hypothesis="A_ij = 0 implies B_ij = 0")
    regular = tuple(v for v in range(n) if any(A[v, w] for w in range(n)))
    MA = _inclusion_minus_transpose(A, regular)
    MB = _inclusion_minus_transpose(B, regular)
    coker_a, ker_a = cokernel(MA), FinGenAbGroup.free(kernel_rank(MA))
    coker_b, ker_b = cokernel(MB), FinGenAbGroup.free(kernel_rank(MB))

    report = GradedReport()
    report.set_homology(0, coker_a, "katsura-engine")
    if max_degree >= 1:
        report.set_homology(1, splice_extension(coker_b, ker_a).resolved, "katsura-engine")
    if max_degree >= 2:
        report.set_homology(2, ker_b, "katsura-engine")
    _zero_report(report, 3, max_degree, "katsura-engine")

    k0 = coker_a.direct_sum(ker_b)
    k1 = ker_a.direct_sum(coker_b)
    blocks = block_diagonal(MA, IntMatrix.zeros(ker_b.free_rank, 0))
    unit = _unit_class(blocks, [1] * n + [0] * ker_b.free_rank)
    report.set_k_theory(k0, k1, unit, "katsura-engine")
    report.flag(HK_FLAG)
    return report


# ---------------------------------------------------------------------------
# free abelian actions


def spectral_radius_probe(A, squarings=40):
    """
    Float estimate of the spectral radius by power iteration on repeated squares,
    rho ~ ||A^(2^j)||^(1/2^j). Advisory only.
    """
    M = np.array([[float(x) for x in row] for row in A.tolist()], dtype=np.float64)
    norm = np.linalg.norm(M)
    if norm == 0.0:
        return 0.0
    log_scale = math.log(norm)
    B = M / norm
    for _ in range(squarings):
        B = B @ B
        s = np.linalg.norm(B)
        if s == 0.0:
            return 0.0
        log_scale = 2.0 * log_scale + math.log(s)
        B = B / s
    return math.exp(log_scale / 2 ** squarings)


def _self_replicating_contracting(A, d):
    """(applies, reason): A^-1 integral, d = |det A^-1| and the spectral probe below 1."""
    try:
        A_inv = inverse(A)
    except InputError:
        return False, "A is singular"
    if not A_inv.is_integral():
        return False, "A^-1 is not integral"
    if abs(determinant(A_inv)) != d:
        return False, "d != |det A^-1|"
    rho = spectral_radius_probe(A)
    if rho >= 1.0 - SPECTRAL_TOLERANCE:
        return False, "spectral radius probe {:.6f} >= 1".format(rho)
    return True, "spectral radius probe {:.6f} < 1".format(rho)


def free_abelian_engine(f, max_degree=None, with_checks=True):
    """
    H_q = ker(id - dΛ^(q-1)A) + coker(id - dΛ^q A) for q = 0..n+1, K_0 / K_1 the
    even / odd sums.
    """
    A, d = f.A, f.d
    n = A.rows
    if max_degree is None:
        max_degree = n + 1
    M = []
    for q in range(n + 1):
        T = scale_and_certify_integral(exterior_power(A, q), d)
        M.append(IntMatrix.identity(T.rows) - T)
    kernels = [FinGenAbGroup.free(kernel_rank(m)) for m in M]
    cokernels = [cokernel(m) for m in M]

    report = GradedReport()
    homology = []
    for q in range(n + 2):
        sub = cokernels[q] if q <= n else FinGenAbGroup.trivial()
        quot = kernels[q - 1] if q >= 1 else FinGenAbGroup.trivial()
        homology.append(splice_extension(sub, quot).resolved)
        if q <= max_degree:
            report.set_homology(q, homology[q], "free-abelian-engine: exterior powers of A")
    _zero_report(report, n + 2, max_degree, "free-abelian-engine")

    k0 = FinGenAbGroup.trivial().direct_sum(*homology[0::2])
    k1 = FinGenAbGroup.trivial().direct_sum(*homology[1::2])
    blocks = block_diagonal(*[M[q] for q in range(0, n + 1, 2)],
                            *[IntMatrix.zeros(kernels[q].free_rank, 0) for q in range(1, n + 1, 2)])
    unit = _unit_class(blocks, [1] + [0] * (blocks.rows - 1))
    report.set_k_theory(k0, k1, unit, "free-abelian-engine: even/odd sums")
    report.flag(HK_FLAG)

    if with_checks:
        applies, reason = _self_replicating_contracting(A, d)
        if applies:
            _assert_self_replicating_contracting(A, d, M)
            report.flag("self-replicating contracting checks passed ({}, advisory)".format(reason))
        else:
            report.flag("self-replicating contracting checks skipped: {}".format(reason))
    return report


def _assert_self_replicating_contracting(A, d, M):
    n = A.rows
    if not 1 - d < 0:
        raise ConsistencyError("1 - d = {} is not negative".format(1 - d))
    for q in range(1, n):
        if determinant(M[q]) == 0:
            raise ConsistencyError("det(id - dΛ^{}(A)) = 0".format(q))
    top = M[n][0, 0]
    expected = 0 if determinant(A) > 0 else 2
    if top != expected:
        raise ConsistencyError("1 - dΛ^n(A) = {}, expected {}".format(top, expected))


# ---------------------------------------------------------------------------
# multispinal groups


def _aut_mod(entry, m):
    return [[x % m for x in row] for row in entry.matrix.tolist()]


def _character_action(aut, m):
    """Index map c -> (M^-1)^T c mod m on characters; raises for non-invertible M."""
    try:
        inv = Matrix(aut).inv_mod(m)
    except ValueError:
        raise HypothesisError("automorphism {} is not invertible mod {}".format(aut, m),
                              hypothesis="Φ_a ∈ Aut(B) for a ∈ A_0")
    return [[int(inv[j, i]) % m for j in range(inv.rows)] for i in range(inv.cols)]


def _apply_mod(M, v, m):
    return tuple(sum(M[i][j] * v[j] for j in range(len(v))) % m for i in range(len(M)))


def _nonzero_vectors(m, k):
    return [v for v in itertools.product(range(m), repeat=k) if any(v)]


def multispinal_k_engine(ms):
    chars = _nonzero_vectors(ms.m, ms.k)
    index = {c: i for i, c in enumerate(chars)}
    N = len(chars)
    T = np.zeros((N, N), dtype=object)
    for a in ms.A0:
        action = _character_action(_aut_mod(ms.phi[a], ms.m), ms.m)
        for c in chars:
            T[index[_apply_mod(action, c, ms.m)], index[c]] += 1
    id_minus_T = IntMatrix.identity(N) - (IntMatrix.from_array(T) if N else IntMatrix.zeros(0, 0))
    k0 = FinGenAbGroup.cyclic(ms.d - 1).direct_sum(cokernel(id_minus_T))
    k1 = FinGenAbGroup.free(kernel_rank(id_minus_T))
    blocks = block_diagonal(IntMatrix.from_rows([[1 - ms.d]]), id_minus_T)
    unit = _unit_class(blocks, [1] + [0] * N)
    report = GradedReport()
    report.set_k_theory(k0, k1, unit, "multispinal-k-engine: characters of B")
    return report


def sunic_orbit_count(ms):
    if len(ms.A0) != 1:
        raise HypothesisError("{} automorphism positions".format(len(ms.A0)), hypothesis="|A_0| = 1")
    M = _aut_mod(ms.phi[ms.A0[0]], ms.m)
    seen, orbits = set(), 0
    for v in _nonzero_vectors(ms.m, ms.k):
        if v in seen:
            continue
        orbits += 1
        while v not in seen:
            seen.add(v)
            v = _apply_mod(M, v, ms.m)
    return orbits


def companion_matrix(f, p):
    """Companion matrix over F_p of f (coefficients low -> high), normalized to be monic."""
    coeffs = [int(c) % p for c in f]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    k = len(coeffs) - 1
    if k < 1:
        raise InputError("polynomial {} must have degree >= 1 over F_{}".format(list(f), p))
    if coeffs[0] == 0:
        raise InputError("polynomial {} has f(0) = 0 over F_{}".format(list(f), p))
    lead_inv = pow(coeffs[-1], -1, p)
    g = [c * lead_inv % p for c in coeffs]
    rows = [[0] * k for _ in range(k)]
    for i in range(k - 1):
        rows[i + 1][i] = 1
    for i in range(k):
        rows[i][k - 1] = (-g[i]) % p
    return IntMatrix.from_rows(rows)


def matrix_order_mod_p(M, p):
    k = M.rows
    ident = np.eye(k, dtype=np.int64)
    base = mod_p_reduce(M, p)
    cur = base.copy()
    for order in range(1, p ** (k * k) + 1):
        if np.array_equal(cur, ident):
            return order
        cur = (cur @ base) % p
    raise HypothesisError("matrix is not invertible mod {}".format(p), hypothesis="f(0) != 0")


def sunic_input(p, f):
    """G_{p,f}: Φ_0 = last coordinate, Φ_1..Φ_(p-2) = 0, Φ_(p-1) = C_f."""
    C = companion_matrix(f, p)
    k = C.rows
    phi = [PhiEntry("hom", IntMatrix.from_rows([[0] * (k - 1) + [1]]))]
    phi += [PhiEntry("hom", IntMatrix.zeros(1, k)) for _ in range(1, p - 1)]
    phi.append(PhiEntry("aut", C))
    return MultispinalInput(p, p, k, tuple(phi), separating=True)


def is_primitive(f, p):
    C = companion_matrix(f, p)
    return matrix_order_mod_p(C, p) == p ** C.rows - 1


def klein_mod2(phi, n):
    """
    H_n(φ; F_2) on H_n(Z/2 x Z/2; F_2) in the basis e_j ⊗ e_(n-j), j = 0..n:
    Eilenberg–Zilber shuffles, φ letterwise, then Alexander–Whitney.
    """
    f = mod_p_reduce(phi if isinstance(phi, (IntMatrix, np.ndarray)) else IntMatrix.from_rows(phi), 2)
    if n == 0:
        return np.ones((1, 1), dtype=np.int64)
    # bit k of a shuffle mask set: position k carries (b,1), else (1,c)
    masks = np.arange(1 << n, dtype=np.int64)
    full = (1 << n) - 1
    j = np.zeros_like(masks)
    for k in range(n):
        j += (masks >> k) & 1
    first = (masks if f[0, 0] else 0) | ((full ^ masks) if f[0, 1] else 0)
    second = (masks if f[1, 0] else 0) | ((full ^ masks) if f[1, 1] else 0)
    first = np.broadcast_to(np.asarray(first, dtype=np.int64), masks.shape)
    second = np.broadcast_to(np.asarray(second, dtype=np.int64), masks.shape)

    # nondegenerate split after i letters iff the first i letters have a b-part
    # and the last n-i letters have a c-part
    head = np.zeros_like(masks)
    alive = np.ones(masks.shape, dtype=bool)
    for k in range(n):
        alive &= ((first >> k) & 1).astype(bool)
        head += alive
    tail = np.zeros_like(masks)
    alive = np.ones(masks.shape, dtype=bool)
    for k in range(n - 1, -1, -1):
        alive &= ((second >> k) & 1).astype(bool)
        tail += alive
    lo, hi = n - tail, head
    ok = lo <= hi
    diff = np.zeros((n + 2, n + 1), dtype=np.int64)
    np.add.at(diff, (lo[ok], j[ok]), 1)
    np.add.at(diff, (hi[ok] + 1, j[ok]), -1)
    return np.cumsum(diff, axis=0)[:n + 1] % 2


def _mod2_homology_dim(aut, n):
    if n == 0:
        return 0
    K = klein_mod2(aut, n)
    return nullity_mod_p((np.eye(n + 1, dtype=np.int64) - K) % 2, 2)


def _require_odd_order(C):
    order = matrix_order_mod_p(C, 2)
    if order % 2 == 0:
        raise HypothesisError(
            "C_f has order {} divisible by 2; use `builtin grigorchuk_erschler` for this case".format(order),
            hypothesis="ord(C_f) coprime to p")
    return order


def sunic_mod2_homology(f, n):
    """dim_{F_2} H_n(G_{2,f}) = nullity(id - H_n(C_f; F_2)) for deg f = 2, ord(C_f) odd."""
    C = companion_matrix(f, 2)
    if C.rows != 2:
        raise InputError("the shuffle route covers deg f = 2 only")
    _require_odd_order(C)
    return _mod2_homology_dim(C, n)


def grigorchuk_homology(n, shuffle_limit=20, brauer=True):
    """H_n of the Grigorchuk groupoid, by the shuffle pipeline and the Brauer lift of A^4."""
    if n == 0:
        return FinGenAbGroup.trivial()
    dims = {}
    if n <= shuffle_limit:
        dims["shuffle"] = sunic_mod2_homology(GRIGORCHUK_POLY, n)
    if brauer:
        dims["brauer"] = eigenvalue_one_multiplicity(binomial_sign_matrix(n) ** 4)
    if not dims:
        raise InputError("degree {} beyond the shuffle limit with the Brauer route disabled".format(n))
    if len(set(dims.values())) != 1:
        raise ConsistencyError("H_{}: shuffle and Brauer routes disagree: {}".format(n, dims))
    return FinGenAbGroup.from_invariants([2] * next(iter(dims.values())))


@dataclass(frozen=True)
class ScaffoldPieces:
    degree: int
    coker: FinGenAbGroup
    ker: FinGenAbGroup


def multispinal_h_scaffold(maps, degree):
    """Pieces coker / ker of id - Σ_{a∈A_0} H_n(Φ_a) on H_n(B)."""
    if not maps:
        raise InputError("no maps given for degree {}".format(degree))
    pres = maps[0].source
    for m in maps:
        if m.source != pres or m.target != pres:
            raise InputError("degree {} maps do not share one presentation of H_n(B)".format(degree))
    total = maps[0]
    for m in maps[1:]:
        total = total + m
    id_minus = AbMap.identity(pres) - total
    return ScaffoldPieces(degree, abmap_cokernel(id_minus), abmap_kernel(id_minus))


def multispinal_degree_maps(ms, n):
    """H_n(Φ_a) for a ∈ A_0, known for n = 1 and for cyclic B in every degree."""
    if n == 1:
        pres = AbPresentation.from_invariants([ms.m] * ms.k)
        return [AbMap(pres, pres, IntMatrix.from_rows(_aut_mod(ms.phi[a], ms.m))) for a in ms.A0]
    if ms.k == 1:
        if n % 2 == 0:
            pres = AbPresentation.free(0)
            return [AbMap.zero(pres, pres) for _ in ms.A0]
        pres = AbPresentation.from_invariants([ms.m])
        # multiplication by u acts on H_(2i-1)(Z/m) = Z/m as u^i
        return [AbMap(pres, pres, IntMatrix.from_rows(
            [[pow(ms.phi[a].matrix[0, 0] % ms.m, (n + 1) // 2, ms.m)]])) for a in ms.A0]
    raise HypothesisError("H_{}(B) for B = (Z/{})^{} is not modelled".format(n, ms.m, ms.k),
                          hypothesis="B cyclic, or degree 1")


def multispinal_homology(ms, max_degree, workers=0):
    report = GradedReport()
    report.set_homology(0, FinGenAbGroup.cyclic(ms.d - 1), "multispinal: C/(d-1)C")
    if max_degree < 1:
        return report
    if ms.k == 1:
        pieces = map_degrees(functools.partial(_scaffold_for, ms), range(1, max_degree + 1), workers)
        report.set_homology(1, pieces[0].coker, "multispinal-h-scaffold")
        for n in range(2, max_degree + 1):
            ext = splice_extension(pieces[n - 1].coker, pieces[n - 2].ker)
            report.set_homology(n, ext if ext.undetermined else ext.resolved, "multispinal-h-scaffold")
            if ext.undetermined:
                report.flag("H_{}: extension undetermined".format(n))
        return report

    report.set_homology(1, _scaffold_for(ms, 1).coker, "multispinal-h-scaffold")
    if max_degree < 2:
        return report
    if ms.m == 2 and ms.d == 2 and ms.k == 2 and len(ms.A0) == 1:
        C = IntMatrix.from_rows(_aut_mod(ms.phi[ms.A0[0]], 2))
        if matrix_order_mod_p(C, 2) % 2 == 1:
            if C == companion_matrix(GRIGORCHUK_POLY, 2):
                groups = map_degrees(grigorchuk_homology, range(2, max_degree + 1), workers)
                tag = "shuffle + Brauer lift"
                report.notes.append(GRIGORCHUK_NOTE)
            else:
                dims = map_degrees(functools.partial(_mod2_homology_dim, C), range(2, max_degree + 1), workers)
                groups = [FinGenAbGroup.from_invariants([2] * k) for k in dims]
                tag = "shuffle: dim ker(id - H_n(C_f; F_2))"
            for n, g in zip(range(2, max_degree + 1), groups):
                report.set_homology(n, g, tag)
            return report
    report.flag("degrees >= 2 not computable for this B; see the builtin reference tables")
    return report


def _scaffold_for(ms, n):
    return multispinal_h_scaffold(multispinal_degree_maps(ms, n), n)


def multispinal_report(ms, max_degree=10, workers=0):
    report = multispinal_homology(ms, max_degree, workers)
    report.merge(multispinal_k_engine(ms))
    if len(ms.A0) == 1:
        report.notes.append("orbits of Φ_a on B\\{{0}}: {}".format(sunic_orbit_count(ms)))
    return report


# ---------------------------------------------------------------------------
# automata


def automaton_report(action, max_degree=10):
    if FREE_ABELIAN_MODE in action.assumptions:
        A = virtual_endomorphism_matrix(action)
        report = free_abelian_engine(FreeAbelianInput(A, action.alphabet_size), max_degree)
        report.notes.append("virtual endomorphism A = {}".format(A.to_json()))
        return report
    report = degree01_homology(action, max_degree)
    if FREE_GROUP_MODE in action.assumptions:
        report.merge(degree01_ktheory_free_group(action))
    return report


def default_engines():
    """The `engines` table of configs/default.yaml."""
    return OmegaConf.load(DEFAULT_CONFIG).engines


def run_engine(doc, max_degree=10, engines=None):
    """Dispatch on the document kind through the `target` table of the engines config."""
    engines = default_engines() if engines is None else engines
    if doc.kind not in engines:
        raise KeyError("no engine configured for kind {}".format(doc.kind))
    utils.log("engine: {} ({}) up to degree {}".format(doc.kind, doc.name, max_degree))
    return utils.instantiate_from_config(engines[doc.kind], doc.payload, max_degree=max_degree)
