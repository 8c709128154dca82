import itertools
import math

import numpy as np
import pytest

from algebra.abgroup import (AbMap, AbPresentation, abmap_check, abmap_cokernel, abmap_kernel,
                             splice_extension)
from algebra.linalg import FinGenAbGroup, IntMatrix
from util.errors import DimensionError, IllDefinedMapError


def test_presentation_from_invariants():
    pres = AbPresentation.from_invariants([2, 0])
    assert pres.to_group() == FinGenAbGroup.from_invariants([2, 0])
    assert pres.contains([4, 0])
    assert not pres.contains([1, 0])
    assert not pres.contains([0, 1])


def test_doubling_on_z4():
    pres = AbPresentation.from_invariants([4])
    double = AbMap(pres, pres, IntMatrix.from_rows([[2]]))
    assert abmap_check(double).ok
    assert abmap_cokernel(double) == FinGenAbGroup.cyclic(2)
    assert abmap_kernel(double) == FinGenAbGroup.cyclic(2)


def test_identity_minus_identity_is_zero_map():
    pres = AbPresentation.from_invariants([3, 3])
    zero = AbMap.identity(pres) - AbMap.identity(pres)
    assert abmap_cokernel(zero) == FinGenAbGroup.from_invariants([3, 3])
    assert abmap_kernel(zero) == FinGenAbGroup.from_invariants([3, 3])


def test_kernel_on_free_source():
    pres = AbPresentation.free(2)
    m = AbMap(pres, pres, IntMatrix.from_rows([[1, 1], [1, 1]]))
    assert abmap_kernel(m) == FinGenAbGroup.free(1)
    assert abmap_cokernel(m) == FinGenAbGroup.free(1)


def test_ill_defined_map_names_relator():
    source = AbPresentation.from_invariants([2])
    target = AbPresentation.from_invariants([3])
    m = AbMap(source, target, IntMatrix.from_rows([[1]]))
    check = abmap_check(m)
    assert not check.ok and check.witness == 0
    with pytest.raises(IllDefinedMapError) as exc:
        abmap_cokernel(m)
    assert exc.value.witness == 0


def test_map_shape_checked():
    pres = AbPresentation.free(2)
    with pytest.raises(DimensionError):
        AbMap(pres, pres, IntMatrix.identity(3))


def test_composition():
    pres = AbPresentation.free(1)
    triple = AbMap(pres, pres, IntMatrix.from_rows([[3]]))
    assert (triple @ triple).matrix == IntMatrix.from_rows([[9]])


def test_splice_extension():
    z2 = FinGenAbGroup.cyclic(2)
    assert splice_extension(z2, FinGenAbGroup.free(1)).resolved == FinGenAbGroup.from_invariants([2, 0])
    assert splice_extension(FinGenAbGroup.trivial(), z2).resolved == z2
    ext = splice_extension(z2, z2)
    assert ext.undetermined
    assert str(ext) == "extension of Z/2 by Z/2 (undetermined)"


def _walk_image(matrix, src, tgt):
    return {tuple(sum(matrix[j][i] * x[i] for i in range(len(src))) % t for j, t in enumerate(tgt))
            for x in itertools.product(*(range(s) for s in src))}


@pytest.mark.parametrize("src,tgt,matrix", [
    ([4], [2], [[1]]),
    ([2, 4], [4, 2], [[2, 1], [1, 0]]),
    ([6], [4, 3], [[2], [1]]),
    ([3, 3], [9], [[3, 6]]),
    ([8], [8], [[0]]),
])
def test_orders_against_enumeration(src, tgt, matrix):
    m = AbMap(AbPresentation.from_invariants(src), AbPresentation.from_invariants(tgt),
              IntMatrix.from_rows(matrix, cols=len(src)))
    assert abmap_check(m).ok
    im = len(_walk_image(matrix, src, tgt))
    assert abmap_cokernel(m).order() * im == math.prod(tgt)
    assert abmap_kernel(m).order() * im == math.prod(src)


def test_orders_against_enumeration_random():
    rng = np.random.default_rng(17)
    for _ in range(40):
        src = [int(n) for n in rng.integers(2, 7, size=int(rng.integers(1, 4)))]
        tgt = [int(n) for n in rng.integers(2, 7, size=int(rng.integers(1, 4)))]
        matrix = [[int(rng.integers(0, math.gcd(s, t))) * (t // math.gcd(s, t)) for s in src] for t in tgt]
        m = AbMap(AbPresentation.from_invariants(src), AbPresentation.from_invariants(tgt),
                  IntMatrix.from_rows(matrix, cols=len(src)))
        im = len(_walk_image(matrix, src, tgt))
        assert abmap_cokernel(m).order() * im == math.prod(tgt)
        assert abmap_kernel(m).order() * im == math.prod(src)
