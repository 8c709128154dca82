"""
Closed-form homology and K-theory tables for named families of self-similar
groups. These serve ``builtin`` requests and are the regression targets of the
engines in ``check``.
"""
import math
from dataclasses import dataclass

from scipy.special import comb
from sympy import isprime

from algebra.abgroup import splice_extension
from algebra.linalg import FinGenAbGroup
from algebra.report import GradedReport, UnitClass, unit_class_in
from engine import GRIGORCHUK_NOTE, HK_FLAG
from util.errors import HypothesisError, InputError

REFERENCE = "reference"
REFERENCE_ONLY = "reference-only"

FAMILIES = {}


def register(name, *params):
    def wrap(fn):
        FAMILIES[name] = (params, fn)
        return fn
    return wrap


def _parse_value(text):
    if isinstance(text, (int, tuple, list)):
        return tuple(text) if isinstance(text, list) else text
    text = str(text).strip()
    try:
        if "," in text:
            return tuple(int(t) for t in text.split(",") if t.strip())
        return int(text)
    except ValueError:
        raise InputError("cannot read parameter value {!r}".format(text))


@dataclass(frozen=True)
class FamilySpec:
    family: str
    params: tuple = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError("unknown family {!r}; known: {}".format(self.family, ", ".join(sorted(FAMILIES))))
        names = FAMILIES[self.family][0]
        given = dict(self.params)
        missing = [n for n in names if n not in given]
        if missing:
            raise InputError("family {} needs parameter(s) {}".format(self.family, ", ".join(missing)))
        extra = [n for n in given if n not in names]
        if extra:
            raise InputError("family {} takes no parameter(s) {}".format(self.family, ", ".join(extra)))

    @classmethod
    def parse(cls, family, args=()):
        """``args`` are positional values or ``key=value`` strings."""
        if family not in FAMILIES:
            raise InputError("unknown family {!r}; known: {}".format(family, ", ".join(sorted(FAMILIES))))
        names = FAMILIES[family][0]
        params = {}
        positional = 0
        for arg in args:
            if isinstance(arg, str) and "=" in arg:
                key, value = arg.split("=", 1)
                params[key.strip()] = _parse_value(value)
            else:
                if positional >= len(names):
                    raise InputError("too many parameters for family {}".format(family))
                params[names[positional]] = _parse_value(arg)
                positional += 1
        return cls(family, tuple((n, params[n]) for n in names if n in params) +
                   tuple((k, v) for k, v in params.items() if k not in names))

    def get(self, key):
        return dict(self.params)[key]

    def __str__(self):
        if not self.params:
            return self.family
        return "{}({})".format(self.family, ", ".join("{}={}".format(k, v) for k, v in self.params))


def closed_form(spec, max_degree=10):
    if max_degree < 0:
        raise InputError("max_degree must be >= 0")
    report = FAMILIES[spec.family][1](spec, max_degree)
    report.notes.insert(0, "closed form for {}".format(spec))
    return report


def _fill(report, max_degree, h, tag=REFERENCE, start=0):
    for n in range(start, max_degree + 1):
        report.set_homology(n, h(n), tag)


def _zn(m):
    return FinGenAbGroup.cyclic(m)


def _z2_power(k):
    return FinGenAbGroup.from_invariants([2] * k)


def _generator_unit(group, summand):
    """Class of a generator of ``summand``, the first canonical summand of ``group``."""
    if summand.is_trivial():
        return UnitClass()
    coords = [0] * (len(group.torsion) + group.free_rank)
    coords[0] = 1
    return unit_class_in(group, coords)


def _require(condition, message, hypothesis):
    if not condition:
        raise HypothesisError(message, hypothesis=hypothesis)


@register("grigorchuk")
def grigorchuk(spec, max_degree):
    def h(n):
        if n == 0:
            return FinGenAbGroup.trivial()
        if n % 3 == 0:
            return _z2_power(n // 3 + 1)
        if n % 3 == 1:
            return _z2_power((n - 1) // 3)
        return _z2_power((n + 1) // 3)
    report = GradedReport()
    _fill(report, max_degree, h)
    report.set_k_theory(FinGenAbGroup.free(1), FinGenAbGroup.free(1), UnitClass(), REFERENCE)
    report.notes.append(GRIGORCHUK_NOTE)
    return report


@register("grigorchuk_erschler")
def grigorchuk_erschler(spec, max_degree):
    def h(n):
        if n == 0:
            return FinGenAbGroup.trivial()
        if n % 2 == 0:
            return _z2_power(n // 2 + 1)
        if n % 4 == 1:
            return _z2_power((n + 1) // 2)
        return _z2_power((n - 1) // 2).direct_sum(_zn(4))
    report = GradedReport()
    report.set_homology(0, h(0), REFERENCE)
    _fill(report, max_degree, h, REFERENCE_ONLY, start=1)
    report.set_k_theory(FinGenAbGroup.free(2), FinGenAbGroup.free(2), UnitClass(), REFERENCE)
    report.flag("reference-only: integral homology in degrees >= 1")
    return report


def _cyclic_spinal(m, max_degree):
    report = GradedReport()
    _fill(report, max_degree, lambda n: _zn(m - 1) if n == 0 else _zn(m))
    k0 = _zn(m - 1).direct_sum(FinGenAbGroup.free(m - 1))
    report.set_k_theory(k0, FinGenAbGroup.free(m - 1), _generator_unit(k0, _zn(m - 1)), REFERENCE)
    return report


@register("ggs", "m")
def ggs(spec, max_degree):
    m = spec.get("m")
    _require(isinstance(m, int) and m >= 2, "m = {}".format(m), "m >= 2")
    return _cyclic_spinal(m, max_degree)


@register("dihedral")
def dihedral(spec, max_degree):
    return _cyclic_spinal(2, max_degree)


@register("gupta_sidki", "p")
def gupta_sidki(spec, max_degree):
    p = spec.get("p")
    _require(isinstance(p, int) and p >= 3 and isprime(p), "p = {}".format(p), "p an odd prime")
    return _cyclic_spinal(p, max_degree)


@register("sunic_primitive", "p", "deg")
def sunic_primitive(spec, max_degree):
    p, deg = spec.get("p"), spec.get("deg")
    _require(isinstance(p, int) and isprime(p), "p = {}".format(p), "p prime")
    _require(isinstance(deg, int) and deg >= 1, "deg = {}".format(deg), "deg f >= 1")
    if p == 2 and deg == 1:
        report = _cyclic_spinal(2, max_degree)
        report.notes.append("G_{2,x+1} is the infinite dihedral group; the groupoid is Hausdorff")
        return report
    report = GradedReport()
    report.set_homology(0, _zn(p - 1), REFERENCE)
    if max_degree >= 1:
        report.set_homology(1, FinGenAbGroup.trivial(), REFERENCE)
    if max_degree >= 2:
        report.flag("degrees >= 2 depend on f; use the shuffle engine on a multispinal document")
    k0 = _zn(p - 1).direct_sum(FinGenAbGroup.free(1))
    report.set_k_theory(k0, FinGenAbGroup.free(1), _generator_unit(k0, _zn(p - 1)), REFERENCE)
    report.notes.append("the groupoid is not Hausdorff")
    return report


@register("hanoi")
def hanoi(spec, max_degree):
    report = GradedReport()
    report.set_homology(0, _zn(2), REFERENCE)
    _fill(report, max_degree, lambda n: _z2_power(3), REFERENCE_ONLY, start=1)
    report.set_k_theory(FinGenAbGroup.free(3), FinGenAbGroup.free(3), UnitClass(), REFERENCE_ONLY)
    report.flag("reference-only: H_n for n >= 1 and K-theory")
    return report


@register("aleshin")
def aleshin(spec, max_degree):
    report = GradedReport()
    _fill(report, max_degree, lambda n: _zn(2) if n == 1 else FinGenAbGroup.trivial())
    report.set_k_theory(FinGenAbGroup.trivial(), _zn(2), UnitClass(), REFERENCE)
    return report


@register("lamplighter", "invariants")
def lamplighter(spec, max_degree):
    invariants = spec.get("invariants")
    if isinstance(invariants, int):
        invariants = (invariants,)
    _require(all(isinstance(a, int) and a >= 1 for a in invariants),
             "invariants {}".format(invariants), "A a finite abelian group")
    order = math.prod(invariants)
    _require(order >= 2, "|A| = {}".format(order), "|A| >= 2")
    report = GradedReport()
    _fill(report, max_degree, lambda n: _zn(order - 1) if n <= 1 else FinGenAbGroup.trivial(), REFERENCE_ONLY)
    report.set_k_theory(_zn(order - 1), _zn(order - 1), None, REFERENCE_ONLY)
    report.flag(HK_FLAG)
    report.flag("reference-only: all entries")
    return report


@register("baumslag_solitar", "m", "n")
def baumslag_solitar(spec, max_degree):
    m, n = spec.get("m"), spec.get("n")
    _require(isinstance(m, int) and m >= 2, "m = {}".format(m), "m >= 2")
    _require(isinstance(n, int) and n >= 2 and math.gcd(m, n) == 1,
             "m = {}, n = {}".format(m, n), "n >= 2 and gcd(m, n) = 1")
    table = {0: _zn(n - 1), 1: _zn(m - 1).direct_sum(_zn(n - 1)), 2: _zn(m - 1)}
    report = GradedReport()
    _fill(report, max_degree, lambda q: table.get(q, FinGenAbGroup.trivial()), REFERENCE_ONLY)
    k0 = splice_extension(_zn(n - 1), _zn(m - 1))
    report.set_k_theory(k0.resolved if k0.resolved is not None else k0,
                        _zn(m - 1).direct_sum(_zn(n - 1)), None, REFERENCE_ONLY)
    if k0.undetermined:
        report.flag("K_0: extension undetermined")
    report.flag("reference-only: all entries")
    return report


def sausage_homology(n, q):
    if q == 0:
        return FinGenAbGroup.trivial()
    if 1 <= q <= n - 1:
        count = int(comb(n, q, exact=True)) // n
        return FinGenAbGroup.from_invariants([2 ** (n - q) - 1] * count)
    if q == n:
        return _zn(1 + (-1) ** n)
    if q == n + 1:
        return FinGenAbGroup.free(1) if n % 2 == 1 else FinGenAbGroup.trivial()
    return FinGenAbGroup.trivial()


@register("sausage", "n")
def sausage(spec, max_degree):
    n = spec.get("n")
    _require(isinstance(n, int) and isprime(n), "n = {}".format(n), "n prime")
    report = GradedReport()
    _fill(report, max_degree, lambda q: sausage_homology(n, q))
    pieces = [sausage_homology(n, q) for q in range(n + 2)]
    k0 = FinGenAbGroup.trivial().direct_sum(*pieces[0::2])
    k1 = FinGenAbGroup.trivial().direct_sum(*pieces[1::2])
    report.set_k_theory(k0, k1, UnitClass(), REFERENCE)
    report.flag(HK_FLAG)
    return report


@register("graph", "d")
def cuntz_bouquet(spec, max_degree):
    """Bouquet of d loops at one vertex."""
    d = spec.get("d")
    _require(isinstance(d, int) and d >= 1, "d = {}".format(d), "d >= 1")
    h0 = _zn(d - 1)
    h1 = FinGenAbGroup.free(1) if d == 1 else FinGenAbGroup.trivial()
    report = GradedReport()
    _fill(report, max_degree, lambda n: {0: h0, 1: h1}.get(n, FinGenAbGroup.trivial()))
    report.set_k_theory(h0, h1, _generator_unit(h0, h0), REFERENCE)
    report.flag(HK_FLAG)
    return report


@register("katsura", "a", "b")
def katsura_1x1(spec, max_degree):
    """A = [a], B = [b] on one vertex."""
    a, b = spec.get("a"), spec.get("b")
    _require(isinstance(a, int) and a >= 0, "a = {}".format(a), "A >= 0")
    _require(a != 0 or b == 0, "a = 0, b = {}".format(b), "A_ij = 0 implies B_ij = 0")
    if a == 0:
        coker_a, ker_a = FinGenAbGroup.free(1), FinGenAbGroup.trivial()
        coker_b, ker_b = FinGenAbGroup.free(1), FinGenAbGroup.trivial()
    else:
        coker_a, ker_a = _zn(1 - a), FinGenAbGroup.free(1) if a == 1 else FinGenAbGroup.trivial()
        coker_b, ker_b = _zn(1 - b), FinGenAbGroup.free(1) if b == 1 else FinGenAbGroup.trivial()
    table = {0: coker_a, 1: ker_a.direct_sum(coker_b), 2: ker_b}
    report = GradedReport()
    _fill(report, max_degree, lambda n: table.get(n, FinGenAbGroup.trivial()))
    k0 = coker_a.direct_sum(ker_b)
    report.set_k_theory(k0, ker_a.direct_sum(coker_b), _generator_unit(k0, coker_a), REFERENCE)
    report.flag(HK_FLAG)
    return report
