"""
Exact integer / rational matrices and the canonical forms built on them.

Matrices are immutable row-major tuples; numpy object arrays are used as the
working representation so that entries stay python ints or Fractions.
"""
import itertools
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import comb
from sympy import factorint, isprime

from util.errors import DimensionError, InputError, IntegralityError


def _as_int(x):
    if isinstance(x, Fraction):
        if x.denominator != 1:
            raise InputError("non-integral entry {} in integer matrix".format(x))
        return x.numerator
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, str):
        return _as_int(_as_fraction(x))
    if isinstance(x, float) and x.is_integer():
        return int(x)
    raise InputError("cannot read {!r} as an integer".format(x))


def _as_fraction(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError("cannot read {!r} as a rational".format(x))
    raise InputError("cannot read {!r} as a rational".format(x))


class _Matrix:
    _coerce = staticmethod(_as_int)

    def __post_init__(self):
        if self.rows < 0 or self.cols < 0:
            raise DimensionError("negative matrix dimension {}x{}".format(self.rows, self.cols))
        if len(self.entries) != self.rows * self.cols:
            raise DimensionError("{} entries for a {}x{} matrix".format(
                len(self.entries), self.rows, self.cols))
        object.__setattr__(self, "entries", tuple(self._coerce(x) for x in self.entries))

    @classmethod
    def from_rows(cls, rows, cols=None):
        rows = list(rows)
        if any(not isinstance(r, (list, tuple, np.ndarray)) for r in rows):
            raise InputError("matrix rows must be arrays")
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise DimensionError("ragged matrix rows: expected {} columns, got {}".format(cols, len(r)))
        return cls(len(rows), cols, tuple(x for r in rows for x in r))

    @classmethod
    def from_array(cls, arr):
        arr = np.asarray(arr, dtype=object)
        if arr.ndim != 2:
            raise DimensionError("expected a 2-d array, got shape {}".format(arr.shape))
        return cls(arr.shape[0], arr.shape[1], tuple(arr.reshape(-1).tolist()))

    @classmethod
    def zeros(cls, rows, cols):
        return cls(rows, cols, (0,) * (rows * cols))

    @classmethod
    def identity(cls, n):
        return cls(n, n, tuple(int(i == j) for i in range(n) for j in range(n)))

    @property
    def shape(self):
        return self.rows, self.cols

    def is_square(self):
        return self.rows == self.cols

    def array(self):
        out = np.empty((self.rows, self.cols), dtype=object)
        for k, x in enumerate(self.entries):
            out[k // self.cols, k % self.cols] = x
        return out

    def tolist(self):
        return [list(self.entries[i * self.cols:(i + 1) * self.cols]) for i in range(self.rows)]

    def __getitem__(self, idx):
        i, j = idx
        return self.entries[i * self.cols + j]

    @property
    def T(self):
        return type(self).from_rows(
            [[self[i, j] for i in range(self.rows)] for j in range(self.cols)], cols=self.rows)

    def _binary(self, other, op):
        if self.shape != other.shape:
            raise DimensionError("shape mismatch {} vs {}".format(self.shape, other.shape))
        cls = RatMatrix if RatMatrix in (type(self), type(other)) else IntMatrix
        return cls(self.rows, self.cols, tuple(op(a, b) for a, b in zip(self.entries, other.entries)))

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b)

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b)

    def __neg__(self):
        return type(self)(self.rows, self.cols, tuple(-x for x in self.entries))

    def scale(self, k):
        return type(self)(self.rows, self.cols, tuple(k * x for x in self.entries))

    def __matmul__(self, other):
        if self.cols != other.rows:
            raise DimensionError("cannot multiply {} by {}".format(self.shape, other.shape))
        cls = RatMatrix if RatMatrix in (type(self), type(other)) else IntMatrix
        if self.cols == 0:
            return cls.zeros(self.rows, other.cols)
        return cls.from_array(self.array().dot(other.array()))

    def __pow__(self, k):
        if not self.is_square():
            raise DimensionError("power of a non-square matrix")
        out = type(self).identity(self.rows)
        base = self
        while k > 0:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def __repr__(self):
        return "{}({})".format(type(self).__name__, self.tolist())


@dataclass(frozen=True, repr=False)
class IntMatrix(_Matrix):
    rows: int
    cols: int
    entries: tuple

    def to_rational(self):
        return RatMatrix(self.rows, self.cols, self.entries)


@dataclass(frozen=True, repr=False)
class RatMatrix(_Matrix):
    rows: int
    cols: int
    entries: tuple
    _coerce = staticmethod(_as_fraction)

    def is_integral(self):
        return all(x.denominator == 1 for x in self.entries)

    def to_rational(self):
        return self

    def to_json(self):
        return [[str(x) for x in row] for row in self.tolist()]


def block_diagonal(*mats):
    rows = sum(m.rows for m in mats)
    cols = sum(m.cols for m in mats)
    out = np.zeros((rows, cols), dtype=object)
    r = c = 0
    for m in mats:
        out[r:r + m.rows, c:c + m.cols] = m.array()
        r += m.rows
        c += m.cols
    cls = RatMatrix if any(isinstance(m, RatMatrix) for m in mats) else IntMatrix
    if rows == 0 or cols == 0:
        return cls.zeros(rows, cols)
    return cls.from_array(out)


def hstack(*mats):
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise DimensionError("hstack needs equal row counts")
    cols = sum(m.cols for m in mats)
    cls = RatMatrix if any(isinstance(m, RatMatrix) for m in mats) else IntMatrix
    blocks = [m.tolist() for m in mats]
    return cls.from_rows([[x for b in blocks for x in b[i]] for i in range(rows)], cols=cols)


# ---------------------------------------------------------------------------
# Smith normal form


@dataclass(frozen=True)
class SmithDecomposition:
    U: IntMatrix
    D: IntMatrix
    V: IntMatrix
    diag: tuple
    U_inv: IntMatrix = field(default=None, compare=False)

    @property
    def rank(self):
        return sum(1 for d in self.diag if d != 0)


def _nonzero_min_abs(A, s):
    """argmin |A[i, j]| over the nonzero entries with i, j >= s, or None."""
    idx = None
    valmin = None
    for i in range(s, A.shape[0]):
        for j in range(s, A.shape[1]):
            if A[i, j] == 0:
                continue
            if valmin is None or abs(A[i, j]) < valmin:
                idx = (i, j)
                valmin = abs(A[i, j])
    return idx


class _SmithReducer(object):
    """Min-abs pivot Smith reduction keeping U, U^-1 and V in step with A."""

    def __init__(self, M):
        self.A = M.array()
        m, n = self.A.shape
        self.U = IntMatrix.identity(m).array()
        self.U_inv = IntMatrix.identity(m).array()
        self.V = IntMatrix.identity(n).array()

    def _swap_rows(self, i, j):
        if i == j:
            return
        self.A[[i, j]] = self.A[[j, i]]
        self.U[[i, j]] = self.U[[j, i]]
        self.U_inv[:, [i, j]] = self.U_inv[:, [j, i]]

    def _swap_cols(self, i, j):
        if i == j:
            return
        self.A[:, [i, j]] = self.A[:, [j, i]]
        self.V[:, [i, j]] = self.V[:, [j, i]]

    def _add_row(self, target, source, k):
        # row_target += k * row_source
        self.A[target] += k * self.A[source]
        self.U[target] += k * self.U[source]
        self.U_inv[:, source] -= k * self.U_inv[:, target]

    def _add_col(self, target, source, k):
        self.A[:, target] += k * self.A[:, source]
        self.V[:, target] += k * self.V[:, source]

    def _negate_row(self, i):
        self.A[i] *= -1
        self.U[i] *= -1
        self.U_inv[:, i] *= -1

    def _find_non_divisible(self, s):
        for i in range(s + 1, self.A.shape[0]):
            for j in range(s + 1, self.A.shape[1]):
                if self.A[i, j] % self.A[s, s] != 0:
                    return i
        return None

    def reduce(self):
        A = self.A
        m, n = A.shape
        s = 0
        while s < min(m, n):
            pivot = _nonzero_min_abs(A, s)
            if pivot is None:
                break
            self._swap_rows(s, pivot[0])
            self._swap_cols(s, pivot[1])

            for i in range(s + 1, m):
                if A[i, s] != 0:
                    self._add_row(i, s, -(A[i, s] // A[s, s]))
            for j in range(s + 1, n):
                if A[s, j] != 0:
                    self._add_col(j, s, -(A[s, j] // A[s, s]))

            if any(A[i, s] != 0 for i in range(s + 1, m)) or any(A[s, j] != 0 for j in range(s + 1, n)):
                # remainders are smaller than the pivot; pick again
                continue
            row_next = self._find_non_divisible(s)
            if row_next is not None:
                self._add_row(s, row_next, 1)
                continue
            if A[s, s] < 0:
                self._negate_row(s)
            s += 1
        return self


def smith_normal_form(M):
    """
    Smith decomposition U·M·V = D of an integer matrix.

    Args:
        M: IntMatrix, any shape (0-row / 0-column allowed).
    Returns:
        SmithDecomposition with diag = (D[0,0], ..., D[k-1,k-1]), k = min(rows, cols),
        forming a divisibility chain of nonnegative integers.
    """
    if isinstance(M, RatMatrix):
        M = IntMatrix(M.rows, M.cols, M.entries)
    red = _SmithReducer(M).reduce()
    m, n = red.A.shape
    diag = tuple(int(red.A[i, i]) for i in range(min(m, n)))
    return SmithDecomposition(
        U=IntMatrix(m, m, tuple(red.U.reshape(-1).tolist())),
        D=IntMatrix(m, n, tuple(red.A.reshape(-1).tolist())),
        V=IntMatrix(n, n, tuple(red.V.reshape(-1).tolist())),
        diag=diag,
        U_inv=IntMatrix(m, m, tuple(red.U_inv.reshape(-1).tolist())),
    )


# ---------------------------------------------------------------------------
# finitely generated abelian groups

_TOKEN = re.compile(r"^(?:\(Z/(\d+)\)\^(\d+)|Z/(\d+)|Z\^(\d+)|Z|0)$")


def _invariant_factors(moduli):
    """Turn arbitrary cyclic orders (each >= 2) into an ascending divisibility chain."""
    per_prime = {}
    for m in moduli:
        for p, e in factorint(m).items():
            per_prime.setdefault(p, []).append(e)
    if not per_prime:
        return ()
    length = max(len(v) for v in per_prime.values())
    factors = [1] * length
    for p, exps in per_prime.items():
        exps = sorted(exps, reverse=True)
        for i, e in enumerate(exps):
            factors[i] *= p ** e
    return tuple(reversed(factors))


@dataclass(frozen=True)
class FinGenAbGroup:
    """Z/d_1 + ... + Z/d_k + Z^r with d_1 | d_2 | ... | d_k and every d_i >= 2."""
    torsion: tuple = ()
    free_rank: int = 0

    def __post_init__(self):
        torsion = tuple(int(d) for d in self.torsion)
        object.__setattr__(self, "torsion", torsion)
        if self.free_rank < 0:
            raise InputError("negative free rank")
        for a, b in zip(torsion, torsion[1:]):
            if b % a != 0:
                raise InputError("torsion {} is not a divisibility chain".format(torsion))
        if any(d < 2 for d in torsion):
            raise InputError("invariant factors must be >= 2, got {}".format(torsion))

    @classmethod
    def from_invariants(cls, factors):
        """Canonicalize cyclic orders: 0 means Z, 1 is dropped, the rest are recombined."""
        factors = [abs(int(d)) for d in factors]
        free = sum(1 for d in factors if d == 0)
        return cls(_invariant_factors([d for d in factors if d > 1]), free)

    @classmethod
    def trivial(cls):
        return cls()

    @classmethod
    def free(cls, rank):
        return cls((), rank)

    @classmethod
    def cyclic(cls, m):
        return cls.from_invariants([m])

    def is_trivial(self):
        return not self.torsion and self.free_rank == 0

    def is_free(self):
        return not self.torsion

    def is_finite(self):
        return self.free_rank == 0

    def order(self):
        if self.free_rank:
            return None
        out = 1
        for d in self.torsion:
            out *= d
        return out

    def direct_sum(self, *others):
        factors = list(self.torsion) + [0] * self.free_rank
        for g in others:
            factors += list(g.torsion) + [0] * g.free_rank
        return FinGenAbGroup.from_invariants(factors)

    def tensor_rank(self, p):
        """dim_{F_p} (G ⊗ F_p)."""
        return self.free_rank + sum(1 for d in self.torsion if d % p == 0)

    def tor_rank(self, p):
        """dim_{F_p} Tor(G, F_p)."""
        return sum(1 for d in self.torsion if d % p == 0)

    def __str__(self):
        parts = []
        for d, group in itertools.groupby(self.torsion):
            k = len(list(group))
            parts.append("Z/{}".format(d) if k == 1 else "(Z/{})^{}".format(d, k))
        if self.free_rank == 1:
            parts.append("Z")
        elif self.free_rank > 1:
            parts.append("Z^{}".format(self.free_rank))
        return " + ".join(parts) if parts else "0"

    @classmethod
    def parse(cls, text):
        factors = []
        for token in text.replace(" ", "").split("+"):
            match = _TOKEN.match(token)
            if match is None:
                raise InputError("cannot parse abelian group {!r}".format(text))
            rep_mod, rep_k, mod, zpow = match.group(1), match.group(2), match.group(3), match.group(4)
            if rep_mod:
                factors += [int(rep_mod)] * int(rep_k)
            elif mod:
                factors.append(int(mod))
            elif zpow:
                factors += [0] * int(zpow)
            elif token == "Z":
                factors.append(0)
        return cls.from_invariants(factors)


def cokernel(M):
    """Z^rows / columnspan(M)."""
    snf = smith_normal_form(M)
    return FinGenAbGroup(
        tuple(d for d in snf.diag if d > 1),
        M.rows - snf.rank,
    )


def cokernel_coordinates(M, v, snf=None):
    """
    Coordinates of the class of the integer vector v in coker(M), listed in the
    order of the canonical summands of ``cokernel(M)`` (torsion ascending, then free).
    """
    if snf is None:
        snf = smith_normal_form(M)
    w = [sum(snf.U[i, j] * int(v[j]) for j in range(M.rows)) for i in range(M.rows)]
    torsion, free = [], []
    for i in range(M.rows):
        d = snf.diag[i] if i < len(snf.diag) else 0
        if d == 1:
            continue
        if d > 1:
            torsion.append(w[i] % d)
        else:
            free.append(w[i])
    return tuple(torsion + free)


# ---------------------------------------------------------------------------
# rational elimination


def _rref(M):
    """Reduced row echelon form over Q. Returns (R, pivot_cols)."""
    R = np.empty((M.rows, M.cols), dtype=object)
    for k, x in enumerate(M.entries):
        R[k // M.cols, k % M.cols] = Fraction(x)
    m, n = R.shape
    pivot_cols = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        found = next((i for i in range(row, m) if R[i, col] != 0), None)
        if found is None:
            continue
        if found != row:
            R[[row, found]] = R[[found, row]]
        R[row] = R[row] / R[row, col]
        for i in range(m):
            if i != row and R[i, col] != 0:
                R[i] = R[i] - R[i, col] * R[row]
        pivot_cols.append(col)
        row += 1
    return R, pivot_cols


def rank(M):
    return len(_rref(M)[1])


def pivot_columns(M):
    return _rref(M)[1]


def kernel_rank(M):
    return M.cols - rank(M)


def kernel_basis(M):
    """Basis of the rational nullspace, one tuple of Fractions per vector."""
    R, pivots = _rref(M)
    basis = []
    for free in (c for c in range(M.cols) if c not in pivots):
        v = [Fraction(0)] * M.cols
        v[free] = Fraction(1)
        for r, p in enumerate(pivots):
            v[p] = -R[r, free]
        basis.append(tuple(v))
    return basis


def solve_rational(M, B):
    """Solve M·X = B exactly; raises InputError if inconsistent."""
    aug = hstack(M.to_rational(), B.to_rational())
    R, pivots = _rref(aug)
    if any(p >= M.cols for p in pivots):
        raise InputError("linear system has no rational solution")
    X = np.zeros((M.cols, B.cols), dtype=object)
    X[:] = Fraction(0)
    for r, p in enumerate(pivots):
        X[p] = R[r, M.cols:]
    return RatMatrix.from_array(X)


def determinant(M):
    if not M.is_square():
        raise DimensionError("determinant of a non-square matrix")
    A = M.to_rational().array()
    n = A.shape[0]
    det = Fraction(1)
    for col in range(n):
        found = next((i for i in range(col, n) if A[i, col] != 0), None)
        if found is None:
            return Fraction(0)
        if found != col:
            A[[col, found]] = A[[found, col]]
            det = -det
        det *= A[col, col]
        for i in range(col + 1, n):
            if A[i, col] != 0:
                A[i] = A[i] - (A[i, col] / A[col, col]) * A[col]
    return det


def inverse(M):
    """Exact inverse; raises InputError for singular input."""
    if not M.is_square():
        raise DimensionError("inverse of a non-square matrix")
    return solve_rational(M, IntMatrix.identity(M.rows))


# ---------------------------------------------------------------------------
# exterior powers and friends


def exterior_power(M, q):
    """
    q-th exterior power; rows/columns indexed by q-subsets in lexicographic order,
    entry (I, J) = det M[I, J].
    """
    M = M.to_rational()
    if not M.is_square():
        raise DimensionError("exterior power of a non-square matrix")
    n = M.rows
    if q < 0 or q > n:
        raise DimensionError("exterior power degree {} outside 0..{}".format(q, n))
    subsets = list(itertools.combinations(range(n), q))
    A = M.array()
    out = []
    for I in subsets:
        row = []
        for J in subsets:
            if q == 0:
                row.append(Fraction(1))
            else:
                row.append(determinant(RatMatrix.from_array(A[np.ix_(I, J)])))
        out.append(row)
    return RatMatrix.from_rows(out, cols=len(subsets))


def scale_and_certify_integral(M, d):
    """d·M as an IntMatrix, or IntegralityError naming the first bad entry."""
    M = M.to_rational()
    scaled = []
    for k, x in enumerate(M.entries):
        y = d * x
        if y.denominator != 1:
            raise IntegralityError(
                "entry ({}, {}) of {}·M is {}".format(k // M.cols, k % M.cols, d, y),
                hypothesis="d·Λ^q(A) is integral (genuine self-similar lattice datum)")
        scaled.append(y.numerator)
    return IntMatrix(M.rows, M.cols, tuple(scaled))


def binomial_sign_matrix(n):
    """Entry (i, j) = (-1)^i C(n-i, j), indices 0..n."""
    return IntMatrix.from_rows(
        [[(-1) ** i * int(comb(n - i, j, exact=True)) for j in range(n + 1)] for i in range(n + 1)])


def eigenvalue_one_multiplicity(M):
    """
    Nullity of M - I over Q. This is the multiplicity of the eigenvalue 1 only
    when M is diagonalizable, e.g. of finite order.
    """
    if not M.is_square():
        raise DimensionError("eigenvalue multiplicity of a non-square matrix")
    return kernel_rank(M.to_rational() - RatMatrix.identity(M.rows))


# ---------------------------------------------------------------------------
# prime fields


def _check_prime(p):
    if not isinstance(p, (int, np.integer)) or not isprime(int(p)):
        raise InputError("{} is not a prime".format(p))


def mod_p_reduce(M, p):
    """
    Entries reduced into [0, p). The result is int64 while a row of products of
    residues still fits in it, otherwise an object array of Python ints.
    """
    _check_prime(p)
    if isinstance(M, np.ndarray):
        arr = M.astype(object)
    else:
        arr = IntMatrix(M.rows, M.cols, M.entries).array()
    reduced = arr % p
    width = max(arr.shape[-1] if arr.ndim else 1, 1)
    if (p - 1) ** 2 * width <= np.iinfo(np.int64).max:
        return np.asarray(reduced, dtype=np.int64).reshape(arr.shape)
    return reduced


def row_echelon_mod_p(M, p):
    """Row-reduce over F_p. Returns (R, pivot_cols)."""
    R = mod_p_reduce(M, p).copy()
    m, n = R.shape
    pivot_cols = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        nz = np.nonzero(R[row:, col])[0]
        if nz.size == 0:
            continue
        found = row + nz[0]
        if found != row:
            R[[row, found]] = R[[found, row]]
        R[row] = (R[row] * pow(int(R[row, col]), -1, p)) % p
        for i in range(m):
            if i != row and R[i, col] != 0:
                R[i] = (R[i] - R[i, col] * R[row]) % p
        pivot_cols.append(col)
        row += 1
    return R, pivot_cols


def rank_mod_p(M, p):
    return len(row_echelon_mod_p(M, p)[1])


def nullity_mod_p(M, p):
    cols = M.shape[1] if isinstance(M, np.ndarray) else M.cols
    return cols - rank_mod_p(M, p)
