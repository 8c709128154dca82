"""
Finitely presented abelian groups Z^g / im(R), homomorphisms between them and
the kernel / cokernel / extension bookkeeping of long exact sequences.
"""
from dataclasses import dataclass
from typing import Optional

from algebra.linalg import (FinGenAbGroup, IntMatrix, cokernel, hstack,
                            smith_normal_form, solve_rational)
from util.errors import DimensionError, IllDefinedMapError, InputError


@dataclass(frozen=True)
class AbPresentation:
    """Z^generators modulo the column span of ``relations`` (generators x k)."""
    generators: int
    relations: IntMatrix

    def __post_init__(self):
        if self.relations.rows != self.generators:
            raise DimensionError("relation matrix has {} rows for {} generators".format(
                self.relations.rows, self.generators))

    @classmethod
    def free(cls, g):
        return cls(g, IntMatrix.zeros(g, 0))

    @classmethod
    def from_invariants(cls, invariants):
        """Z/n_1 + ... + Z/n_g, where n_i = 0 gives a free generator."""
        invariants = [abs(int(n)) for n in invariants]
        cols = [i for i, n in enumerate(invariants) if n != 0]
        rows = [[invariants[i] if i == c else 0 for c in cols] for i in range(len(invariants))]
        return cls(len(invariants), IntMatrix.from_rows(rows, cols=len(cols)))

    @classmethod
    def from_json(cls, doc):
        try:
            g = int(doc["generators"])
            rel = doc.get("relations", [])
        except (KeyError, TypeError):
            raise InputError("presentation needs 'generators' and 'relations'")
        if not rel:
            return cls(g, IntMatrix.zeros(g, 0))
        return cls(g, IntMatrix.from_rows(rel))

    def to_json(self):
        return {"generators": self.generators, "relations": self.relations.tolist()}

    def to_group(self):
        return cokernel(self.relations)

    def contains(self, v):
        """Is the integer vector v in the column span of the relations?"""
        return in_column_span(self.relations, v)


def in_column_span(R, v, snf=None):
    if snf is None:
        snf = smith_normal_form(R)
    w = [sum(snf.U[i, j] * int(v[j]) for j in range(R.rows)) for i in range(R.rows)]
    for i, wi in enumerate(w):
        d = snf.diag[i] if i < len(snf.diag) else 0
        if (d == 0 and wi != 0) or (d != 0 and wi % d != 0):
            return False
    return True


@dataclass(frozen=True)
class AbMap:
    source: AbPresentation
    target: AbPresentation
    matrix: IntMatrix

    def __post_init__(self):
        if self.matrix.shape != (self.target.generators, self.source.generators):
            raise DimensionError("map matrix is {}, expected {}x{}".format(
                self.matrix.shape, self.target.generators, self.source.generators))

    @classmethod
    def identity(cls, pres):
        return cls(pres, pres, IntMatrix.identity(pres.generators))

    @classmethod
    def zero(cls, source, target):
        return cls(source, target, IntMatrix.zeros(target.generators, source.generators))

    def __add__(self, other):
        self._same_ends(other)
        return AbMap(self.source, self.target, self.matrix + other.matrix)

    def __sub__(self, other):
        self._same_ends(other)
        return AbMap(self.source, self.target, self.matrix - other.matrix)

    def __matmul__(self, other):
        if other.target != self.source:
            raise InputError("cannot compose maps with mismatched presentations")
        return AbMap(other.source, self.target, self.matrix @ other.matrix)

    def _same_ends(self, other):
        if self.source != other.source or self.target != other.target:
            raise InputError("maps act between different presentations")


@dataclass(frozen=True)
class AbMapCheck:
    ok: bool
    witness: Optional[int] = None


def abmap_check(m):
    """ok iff matrix·R_source lies in columnspan(R_target); witness = first bad relator."""
    image = m.matrix @ m.source.relations
    snf = smith_normal_form(m.target.relations)
    for j in range(image.cols):
        column = [image[i, j] for i in range(image.rows)]
        if not in_column_span(m.target.relations, column, snf=snf):
            return AbMapCheck(False, j)
    return AbMapCheck(True)


def require_well_defined(m):
    check = abmap_check(m)
    if not check.ok:
        raise IllDefinedMapError(
            "relator column {} of the source is not sent into the target relations".format(check.witness),
            witness=check.witness)
    return m


def abmap_cokernel(m):
    require_well_defined(m)
    return cokernel(hstack(m.matrix, m.target.relations))


def abmap_kernel(m):
    """
    Kernel of the induced map: pull back columnspan(R_target) along the matrix,
    then divide the solution lattice by columnspan(R_source).
    """
    require_well_defined(m)
    s = m.source.generators
    if s == 0:
        return FinGenAbGroup.trivial()
    N = hstack(m.matrix, m.target.relations)
    snf = smith_normal_form(N)
    V = snf.V.tolist()
    lattice = [[V[i][j] for j in range(snf.rank, N.cols)] for i in range(s)]
    X = IntMatrix.from_rows(lattice, cols=N.cols - snf.rank)
    # basis of the solution lattice: columns d_i * (U^-1)_i of the SNF of its generators
    snf_x = smith_normal_form(X)
    r = snf_x.rank
    if r == 0:
        return FinGenAbGroup.trivial()
    basis = IntMatrix.from_rows(
        [[snf_x.U_inv[i, j] * snf_x.diag[j] for j in range(r)] for i in range(s)], cols=r)
    coords = solve_rational(basis, m.source.relations)
    return cokernel(IntMatrix(coords.rows, coords.cols, coords.entries))


@dataclass(frozen=True)
class ExtensionResult:
    """0 -> sub -> H -> quot -> 0 with H known only when the sequence is forced to split."""
    sub: FinGenAbGroup
    quot: FinGenAbGroup
    resolved: Optional[FinGenAbGroup] = None

    @property
    def undetermined(self):
        return self.resolved is None

    def __str__(self):
        if self.resolved is not None:
            return str(self.resolved)
        return "extension of {} by {} (undetermined)".format(self.quot, self.sub)


def splice_extension(sub, quot):
    if quot.is_free() or sub.is_trivial() or quot.is_trivial():
        return ExtensionResult(sub, quot, sub.direct_sum(quot))
    return ExtensionResult(sub, quot)
