"""
Self-similar group actions given by their wreath recursion.

A generator g carries a permutation of the alphabet X and one section word per
letter, g(x p) = g(x) g|_x(p). Group elements are words in the generators;
equality in G is never decided, only free reduction (plus a^-1 = a and aa = 1
for generators declared as involutions).
"""
import re
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

from algebra.abgroup import (AbMap, AbPresentation, abmap_cokernel, abmap_kernel,
                             in_column_span, require_well_defined, splice_extension)
from algebra.linalg import (FinGenAbGroup, IntMatrix, RatMatrix, block_diagonal, cokernel,
                            cokernel_coordinates, hstack, kernel_rank, pivot_columns,
                            smith_normal_form, solve_rational)
from algebra.report import GradedReport, unit_class_in
from util.errors import (ConsistencyError, HypothesisError, IllDefinedMapError, InputError,
                         NotTransitiveError)

_SYMBOL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)(?:\^(-?\d+))?$")
_IDENTITY_TOKENS = ("e", "1", "ε", "")

H2_VANISHES = "h2_vanishes"
FREE_GROUP_MODE = "free_group_mode"
FREE_ABELIAN_MODE = "free_abelian_mode"
ASSUMPTIONS = (H2_VANISHES, FREE_GROUP_MODE, FREE_ABELIAN_MODE)


def _reduce(letters, involutions=frozenset()):
    out = []
    for name, exp in letters:
        if name in involutions:
            exp = 1
        if out and out[-1][0] == name and (out[-1][1] == -exp or name in involutions):
            out.pop()
        else:
            out.append((name, exp))
    return tuple(out)


@dataclass(frozen=True)
class GroupWord:
    """Freely reduced word; ``letters`` is a tuple of (generator, ±1)."""
    letters: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def parse(cls, text, names=None, involutions=frozenset()):
        letters = []
        for token in text.split():
            if token in _IDENTITY_TOKENS:
                continue
            match = _SYMBOL.match(token)
            if match is None:
                raise InputError("cannot parse word symbol {!r} in {!r}".format(token, text))
            name, power = match.group(1), int(match.group(2) or 1)
            if names is not None and name not in names:
                raise InputError("undeclared generator {!r} in word {!r}".format(name, text))
            sign = 1 if power > 0 else -1
            letters += [(name, sign)] * abs(power)
        return cls(_reduce(letters, involutions))

    @classmethod
    def generator(cls, name):
        return cls(((name, 1),))

    def is_identity(self):
        return not self.letters

    def mul(self, other, involutions=frozenset()):
        return GroupWord(_reduce(self.letters + other.letters, involutions))

    def inverse(self, involutions=frozenset()):
        return GroupWord(_reduce(tuple((n, -e) for n, e in reversed(self.letters)), involutions))

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        if not self.letters:
            return "e"
        return " ".join(n if e == 1 else "{}^-1".format(n) for n, e in self.letters)


@dataclass(frozen=True)
class Generator:
    perm: Tuple[int, ...]
    sections: Tuple[GroupWord, ...]
    involution: bool = False

    @property
    def inverse_perm(self):
        inv = [0] * len(self.perm)
        for x, y in enumerate(self.perm):
            inv[y] = x
        return tuple(inv)


@dataclass(frozen=True)
class Abelianization:
    """G^ab presented as Z^g / R together with the image vector of every generator."""
    presentation: AbPresentation
    images: Dict[str, Tuple[int, ...]]


@dataclass(frozen=True)
class StabilizerData:
    point: int
    transversal: Dict[int, GroupWord]
    schreier_generators: List[GroupWord]
    sigma_images: List[GroupWord]


def _as_letters(p):
    return tuple(int(c) for c in p)


def _like(p, letters):
    if isinstance(p, str):
        return "".join(str(c) for c in letters)
    return tuple(letters)


@dataclass(frozen=True)
class SelfSimilarAction:
    alphabet_size: int
    generators: Dict[str, Generator]
    abelianization: Optional[Abelianization] = None
    assumptions: FrozenSet[str] = frozenset()

    def __post_init__(self):
        if self.alphabet_size < 2:
            raise InputError("alphabet must have at least 2 letters")
        for name, gen in self.generators.items():
            if sorted(gen.perm) != list(range(self.alphabet_size)):
                raise InputError("permutation of {!r} is not a bijection of the alphabet".format(name))
            if len(gen.sections) != self.alphabet_size:
                raise InputError("{!r} needs one section per letter".format(name))
            for w in gen.sections:
                for sym, _ in w.letters:
                    if sym not in self.generators:
                        raise InputError("section of {!r} uses undeclared generator {!r}".format(name, sym))
        for flag in self.assumptions:
            if flag not in ASSUMPTIONS:
                raise InputError("unknown assumption {!r}".format(flag))
        for name, gen in self.generators.items():
            if gen.involution:
                self._check_involution(name, gen)

    @property
    def names(self):
        return list(self.generators)

    @property
    def involutions(self):
        return frozenset(n for n, g in self.generators.items() if g.involution)

    def word(self, text):
        return GroupWord.parse(text, self.generators, self.involutions)

    def _check_involution(self, name, gen):
        for x in range(self.alphabet_size):
            y = gen.perm[x]
            if gen.perm[y] != x:
                raise InputError("{!r} is declared an involution but its permutation is not".format(name))
            back = gen.sections[y].mul(gen.sections[x], self.involutions)
            if not back.is_identity():
                raise InputError("{!r} is declared an involution but g|_g(x) g|_x = {}".format(name, back))

    # -- letter level ------------------------------------------------------

    def _letter_step(self, name, exp, x):
        gen = self.generators[name]
        if exp == 1:
            return gen.perm[x], gen.sections[x]
        x0 = gen.inverse_perm[x]
        return x0, gen.sections[x0].inverse(self.involutions)

    def _word_step(self, w, x):
        """(w(x), w|_x) for a single letter x."""
        parts = []
        cur = x
        for name, exp in reversed(w.letters):
            cur, sec = self._letter_step(name, exp, cur)
            parts.append(sec)
        out = GroupWord()
        for sec in reversed(parts):
            out = out.mul(sec, self.involutions)
        return cur, out

    def act(self, w, p):
        letters = []
        cur = w
        for x in _as_letters(p):
            self._check_letter(x)
            y, cur = self._word_step(cur, x)
            letters.append(y)
        return _like(p, letters)

    def section(self, w, p):
        cur = w
        for x in _as_letters(p):
            self._check_letter(x)
            _, cur = self._word_step(cur, x)
        return cur

    def perm_of(self, w):
        return tuple(self._word_step(w, x)[0] for x in range(self.alphabet_size))

    def _check_letter(self, x):
        if not 0 <= x < self.alphabet_size:
            raise InputError("letter {} outside alphabet 0..{}".format(x, self.alphabet_size - 1))

    # -- orbit structure ---------------------------------------------------

    def orbits(self):
        seen = set()
        out = []
        for start in range(self.alphabet_size):
            if start in seen:
                continue
            orbit = {start}
            queue = deque([start])
            while queue:
                e = queue.popleft()
                for gen in self.generators.values():
                    for f in (gen.perm[e], gen.inverse_perm[e]):
                        if f not in orbit:
                            orbit.add(f)
                            queue.append(f)
            seen |= orbit
            out.append(tuple(sorted(orbit)))
        return out

    def is_transitive(self):
        return len(self.orbits()) == 1

    def transversal(self, x):
        """t_e with t_e(x) = e for every e in the orbit of x, by breadth-first search."""
        self._check_letter(x)
        trans = {x: GroupWord()}
        queue = deque([x])
        while queue:
            e = queue.popleft()
            for name, gen in self.generators.items():
                f = gen.perm[e]
                if f not in trans:
                    trans[f] = GroupWord.generator(name).mul(trans[e], self.involutions)
                    queue.append(f)
        return trans

    def stabilizer(self, x):
        trans = self.transversal(x)
        schreier, seen = [], set()
        for e in sorted(trans):
            for name, gen in self.generators.items():
                f = gen.perm[e]
                s = trans[f].inverse(self.involutions).mul(
                    GroupWord.generator(name), self.involutions).mul(trans[e], self.involutions)
                if s.is_identity() or s in seen:
                    continue
                seen.add(s)
                schreier.append(s)
        sigma = [self.section(s, (x,)) for s in schreier]
        return StabilizerData(x, trans, schreier, sigma)

    # -- abelianization ----------------------------------------------------

    def abelian_image(self, w):
        ab = self._require_abelianization()
        vec = [0] * ab.presentation.generators
        for name, exp in w.letters:
            for i, c in enumerate(ab.images[name]):
                vec[i] += exp * c
        return vec

    def _require_abelianization(self):
        if self.abelianization is None:
            raise HypothesisError("no abelianization declared", hypothesis="abelianization of G is given")
        return self.abelianization


def _image_matrix(action):
    ab = action._require_abelianization()
    return IntMatrix.from_rows(
        [[ab.images[name][i] for name in action.names] for i in range(ab.presentation.generators)],
        cols=len(action.names))


def _phi1_from_generator_values(action, psi_columns):
    """
    Turn per-generator values Ψ(g) in Z^g into an endomorphism of G^ab, after
    checking Ψ kills every relation among the generator images.
    """
    ab = action._require_abelianization()
    pres = ab.presentation
    img = _image_matrix(action)
    psi = IntMatrix.from_rows(
        [[psi_columns[j][i] for j in range(len(action.names))] for i in range(pres.generators)],
        cols=len(action.names))
    N = hstack(img, pres.relations)
    snf = smith_normal_form(N)
    ngen = len(action.names)

    # relations among the generator images
    V = snf.V.tolist()
    rel_snf = smith_normal_form(pres.relations)
    for j in range(snf.rank, N.cols):
        x = [V[i][j] for i in range(ngen)]
        value = [sum(psi[i, k] * x[k] for k in range(ngen)) for i in range(pres.generators)]
        if not in_column_span(pres.relations, value, snf=rel_snf):
            relator = " ".join("{}^{}".format(action.names[k], x[k]) for k in range(ngen) if x[k])
            raise IllDefinedMapError(
                "section sums do not respect the relation {} of the declared abelianization".format(relator),
                witness=relator)

    # preimages of the basis vectors of Z^g
    columns = []
    for i in range(pres.generators):
        target = [snf.U[r, i] for r in range(N.rows)]
        y = [0] * N.cols
        for r in range(N.rows):
            d = snf.diag[r] if r < len(snf.diag) else 0
            if d == 0:
                if target[r] != 0:
                    raise InputError("generator images do not generate the declared abelianization")
            elif target[r] % d != 0:
                raise InputError("generator images do not generate the declared abelianization")
            else:
                y[r] = target[r] // d
        z = [sum(V[k][r] * y[r] for r in range(N.cols)) for k in range(ngen)]
        columns.append([sum(psi[row, k] * z[k] for k in range(ngen)) for row in range(pres.generators)])
    matrix = IntMatrix.from_rows(
        [[columns[j][i] for j in range(pres.generators)] for i in range(pres.generators)],
        cols=pres.generators)
    return require_well_defined(AbMap(pres, pres, matrix))


def phi1(action):
    """Φ_1(g) = Σ_e g|_e in G^ab."""
    values = []
    for name in action.names:
        total = [0] * action._require_abelianization().presentation.generators
        for e in range(action.alphabet_size):
            for i, c in enumerate(action.abelian_image(action.generators[name].sections[e])):
                total[i] += c
        values.append(total)
    return _phi1_from_generator_values(action, values)


def phi1_via_transfer(action, x=0):
    """Φ_1 as H_1(σ_x)∘tr: Σ_e σ_x(t_{g(e)}^-1 g t_e) over the orbit of x."""
    if not action.is_transitive():
        raise NotTransitiveError("the transfer route needs a transitive action",
                                 hypothesis="G acts transitively on X")
    trans = action.transversal(x)
    inv = action.involutions
    values = []
    for name, gen in action.generators.items():
        total = [0] * action._require_abelianization().presentation.generators
        for e in range(action.alphabet_size):
            s = trans[gen.perm[e]].inverse(inv).mul(GroupWord.generator(name), inv).mul(trans[e], inv)
            for i, c in enumerate(action.abelian_image(action.section(s, (x,)))):
                total[i] += c
        values.append(total)
    return _phi1_from_generator_values(action, values)


def _require_transitive(action):
    if not action.is_transitive():
        raise NotTransitiveError(
            "action has orbits {}; use the graph or Katsura engines for multi-vertex data".format(action.orbits()),
            hypothesis="G acts transitively on X")


def with_default_abelianization(action):
    """Free-group mode without a declared abelianization means G^ab = Z^r on the generators."""
    if action.abelianization is not None or FREE_GROUP_MODE not in action.assumptions:
        return action
    r = len(action.names)
    images = {name: tuple(int(i == j) for j in range(r)) for i, name in enumerate(action.names)}
    return SelfSimilarAction(action.alphabet_size, action.generators,
                             Abelianization(AbPresentation.free(r), images), action.assumptions)


def degree01_homology(action, max_degree=1):
    """H_0 = Z/(|X|-1), H_1 = coker(id-Φ_1), and H_2 = ker(id-Φ_1) when H_n(G) = 0 for n >= 2."""
    _require_transitive(action)
    action = with_default_abelianization(action)
    report = GradedReport()
    report.set_homology(0, FinGenAbGroup.cyclic(action.alphabet_size - 1), "transitive-transfer")
    if max_degree < 1:
        return report
    if action.abelianization is None:
        report.flag("no abelianization declared: only H_0 computed")
        return report
    phi = phi1(action)
    id_minus_phi = AbMap.identity(phi.source) - phi
    report.set_homology(1, abmap_cokernel(id_minus_phi), "transitive-transfer")
    if H2_VANISHES in action.assumptions or FREE_GROUP_MODE in action.assumptions:
        if max_degree >= 2:
            report.set_homology(2, abmap_kernel(id_minus_phi), "transitive-transfer; H_n(G)=0 for n>=2")
        for n in range(3, max_degree + 1):
            report.set_homology(n, FinGenAbGroup.trivial(), "transitive-transfer; H_n(G)=0 for n>=2")
    elif max_degree >= 2:
        report.flag("degrees >= 2 need h2_vanishes or a specialized engine")
    return report


def degree01_ktheory_free_group(action):
    """
    K-theory for a free group G of rank r: Φ_0 is multiplication by |X| on Z·[1],
    Φ_1 is the section-sum matrix on K_1(C*G) = Z^r.
    """
    if FREE_GROUP_MODE not in action.assumptions:
        raise HypothesisError("K-theory of the generic automaton path needs free_group_mode",
                              hypothesis="G is free on the listed generators")
    _require_transitive(action)
    action = with_default_abelianization(action)
    r = len(action.names)
    pres = action.abelianization.presentation
    if pres.generators != r or pres.to_group() != FinGenAbGroup.free(r):
        raise InputError("free_group_mode needs the abelianization Z^{} on the generators".format(r))
    phi = phi1(action)
    m1 = IntMatrix.identity(r) - phi.matrix
    m0 = IntMatrix.from_rows([[1 - action.alphabet_size]])
    ker1 = FinGenAbGroup.free(kernel_rank(m1))
    ker0 = FinGenAbGroup.free(kernel_rank(m0))
    coker0, coker1 = cokernel(m0), cokernel(m1)
    k0 = splice_extension(coker0, ker1)
    k1 = splice_extension(coker1, ker0)
    blocks = block_diagonal(m0, IntMatrix.zeros(ker1.free_rank, 0))
    unit = unit_class_in(cokernel(blocks), cokernel_coordinates(blocks, [1] + [0] * ker1.free_rank))
    report = GradedReport()
    report.set_k_theory(k0.resolved if k0.resolved is not None else k0,
                        k1.resolved if k1.resolved is not None else k1,
                        unit, "six-term; free group transfer")
    return report


def section_closure(action, seed, bound):
    """
    Close {e} ∪ seed ∪ seed^-1 under taking sections at single letters.
    Returns the sorted word list, or None once more than ``bound`` words appear.
    """
    if bound < 1:
        raise InputError("section closure bound must be >= 1")
    inv = action.involutions
    words = [GroupWord()]
    for w in seed:
        if isinstance(w, str):
            w = action.word(w)
        words += [w, w.inverse(inv)]
    found = set()
    queue = deque()
    for w in words:
        if w not in found:
            found.add(w)
            queue.append(w)
    if len(found) > bound:
        return None
    while queue:
        w = queue.popleft()
        for x in range(action.alphabet_size):
            s = action.section(w, (x,))
            if s not in found:
                found.add(s)
                if len(found) > bound:
                    return None
                queue.append(s)
    return sorted(found, key=lambda w: (len(w), str(w)))


def virtual_endomorphism_matrix(action, x=0):
    """
    Matrix A of σ_x ⊗ Q for an action of G = Z^n with the identity abelianization:
    solves A·S = Σ where S holds the Schreier generators of G_x and Σ their sections at x.
    """
    if FREE_ABELIAN_MODE not in action.assumptions:
        raise HypothesisError("virtual endomorphism extraction needs free_abelian_mode",
                              hypothesis="G is free abelian")
    ab = action._require_abelianization()
    n = ab.presentation.generators
    if ab.presentation.to_group() != FinGenAbGroup.free(n):
        raise InputError("free_abelian_mode needs a free abelianization Z^n")
    st = action.stabilizer(x)
    S = IntMatrix.from_rows([[action.abelian_image(s)[i] for s in st.schreier_generators] for i in range(n)],
                            cols=len(st.schreier_generators))
    sigma = IntMatrix.from_rows([[action.abelian_image(s)[i] for s in st.sigma_images] for i in range(n)],
                                cols=len(st.sigma_images))
    pivots = pivot_columns(S)
    if len(pivots) != n:
        raise HypothesisError("stabilizer G_{} has rank {} < {}".format(x, len(pivots), n),
                              hypothesis="G_x has finite index in G")
    S_sub = IntMatrix.from_rows([[S[i, j] for j in pivots] for i in range(n)], cols=n)
    sigma_sub = IntMatrix.from_rows([[sigma[i, j] for j in pivots] for i in range(n)], cols=n)
    A = solve_rational(S_sub.T, sigma_sub.T).T
    if A @ S.to_rational() != sigma.to_rational():
        raise ConsistencyError("σ_{} is not linear on the Schreier generators".format(x))
    return RatMatrix(A.rows, A.cols, A.entries)


def sigma_surjective(action, x=0):
    """Do the σ_x images of the stabilizer generators generate G^ab?"""
    ab = action._require_abelianization()
    st = action.stabilizer(x)
    n = ab.presentation.generators
    sigma = IntMatrix.from_rows([[action.abelian_image(s)[i] for s in st.sigma_images] for i in range(n)],
                                cols=len(st.sigma_images))
    return cokernel(hstack(sigma, ab.presentation.relations)).is_trivial()
