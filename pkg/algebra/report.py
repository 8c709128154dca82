"""
Degree-indexed homology, the K-theory pair and the bookkeeping (flags,
provenance, notes) that travels with them. JSON rendering is canonical:
emitting, parsing and emitting again gives identical text.
"""
import json
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from algebra.abgroup import ExtensionResult
from algebra.linalg import FinGenAbGroup
from util.errors import InputError

_EXTENSION = re.compile(r"^extension of (.+) by (.+) \(undetermined\)$")
_FP_SPACE = re.compile(r"^F(\d+)(?:\^(\d+))?$")
_UNIT = re.compile(r"^\[(.*)\] of order (\d+|inf)$")


@dataclass(frozen=True)
class FpSpace:
    """A vector space over F_p of known (or undetermined) dimension."""
    p: int
    dim: Optional[int]

    def __str__(self):
        if self.dim is None:
            return "undetermined"
        if self.dim == 0:
            return "0"
        return "F{}".format(self.p) if self.dim == 1 else "F{}^{}".format(self.p, self.dim)


Entry = Union[FinGenAbGroup, ExtensionResult, FpSpace]


@dataclass(frozen=True)
class UnitClass:
    """Class of the unit in K_0, in coordinates of the canonical summands of K_0."""
    coordinates: Tuple[int, ...] = ()
    order: Optional[int] = 1

    @property
    def is_zero(self):
        return self.order == 1

    def __str__(self):
        if self.is_zero:
            return "0"
        return "[{}] of order {}".format(
            ", ".join(str(c) for c in self.coordinates),
            "inf" if self.order is None else self.order)

    @classmethod
    def parse(cls, text):
        if text == "0":
            return cls()
        match = _UNIT.match(text)
        if match is None:
            raise InputError("cannot parse unit class {!r}".format(text))
        coords = tuple(int(c) for c in match.group(1).split(",") if c.strip())
        order = None if match.group(2) == "inf" else int(match.group(2))
        return cls(coords, order)


def unit_class_in(group, coordinates):
    """UnitClass for an element given in the canonical coordinates of ``group``."""
    coordinates = tuple(int(c) for c in coordinates)
    free = coordinates[len(group.torsion):]
    if any(c != 0 for c in free):
        return UnitClass(coordinates, None)
    order = 1
    for c, d in zip(coordinates, group.torsion):
        k = d // _gcd(c % d, d)
        order = order * k // _gcd(order, k)
    if order == 1:
        return UnitClass()
    return UnitClass(coordinates, order)


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def render_entry(entry):
    return str(entry)


def parse_entry(text):
    match = _EXTENSION.match(text)
    if match:
        quot, sub = FinGenAbGroup.parse(match.group(1)), FinGenAbGroup.parse(match.group(2))
        return ExtensionResult(sub, quot)
    if text == "undetermined":
        return FpSpace(0, None)
    match = _FP_SPACE.match(text)
    if match:
        return FpSpace(int(match.group(1)), int(match.group(2) or 1))
    return FinGenAbGroup.parse(text)


@dataclass
class KTheory:
    K0: Entry
    K1: Entry
    unit_class: Optional[UnitClass] = None

    def to_json(self):
        return {
            "K0": render_entry(self.K0),
            "K1": render_entry(self.K1),
            "unit_class": None if self.unit_class is None else str(self.unit_class),
        }


@dataclass
class GradedReport:
    homology: Dict[int, Entry] = field(default_factory=dict)
    k_theory: Optional[KTheory] = None
    flags: List[str] = field(default_factory=list)
    provenance: Dict[str, str] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    coefficients: str = "Z"

    def set_homology(self, degree, entry, provenance):
        self.homology[degree] = entry
        self.provenance["H{}".format(degree)] = provenance

    def set_k_theory(self, k0, k1, unit_class, provenance):
        self.k_theory = KTheory(k0, k1, unit_class)
        self.provenance["K"] = provenance

    def flag(self, text):
        if text not in self.flags:
            self.flags.append(text)

    def merge(self, other):
        for n, entry in other.homology.items():
            self.homology[n] = entry
        if other.k_theory is not None:
            self.k_theory = other.k_theory
        for flag in other.flags:
            self.flag(flag)
        self.provenance.update(other.provenance)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def truncate(self, max_degree):
        self.homology = {n: e for n, e in self.homology.items() if n <= max_degree}
        self.provenance = {k: v for k, v in self.provenance.items()
                           if not (k.startswith("H") and int(k[1:]) > max_degree)}
        return self

    def with_coefficients(self, p):
        """Universal coefficients: dim H_n(F_p) = dim(H_n ⊗ F_p) + dim Tor(H_{n-1}, F_p)."""
        out = GradedReport(k_theory=self.k_theory, flags=list(self.flags),
                           provenance=dict(self.provenance), notes=list(self.notes),
                           coefficients="F{}".format(p))
        for n in sorted(self.homology):
            here, below = self.homology[n], self.homology.get(n - 1)
            dim = _tensor_rank(here, p)
            if n > 0:
                tor = _tor_rank(below, p)
                dim = None if dim is None or tor is None else dim + tor
            out.homology[n] = FpSpace(p, dim)
        return out

    def to_json(self):
        doc = {
            "coefficients": self.coefficients,
            "homology": {str(n): render_entry(self.homology[n]) for n in sorted(self.homology)},
            "k_theory": None if self.k_theory is None else self.k_theory.to_json(),
            "flags": list(self.flags),
            "provenance": {k: self.provenance[k] for k in _provenance_order(self.provenance)},
            "notes": list(self.notes),
        }
        return doc

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        k = doc.get("k_theory")
        k_theory = None
        if k is not None:
            unit = k.get("unit_class")
            k_theory = KTheory(parse_entry(k["K0"]), parse_entry(k["K1"]),
                               None if unit is None else UnitClass.parse(unit))
        return cls(
            homology={int(n): parse_entry(v) for n, v in doc.get("homology", {}).items()},
            k_theory=k_theory,
            flags=list(doc.get("flags", [])),
            provenance=dict(doc.get("provenance", {})),
            notes=list(doc.get("notes", [])),
            coefficients=doc.get("coefficients", "Z"),
        )

    def to_table(self):
        lines = []
        for n in sorted(self.homology):
            tag = self.provenance.get("H{}".format(n), "")
            lines.append("H_{:<3d} = {:<40s} {}".format(n, render_entry(self.homology[n]), tag).rstrip())
        if self.k_theory is not None:
            tag = self.provenance.get("K", "")
            lines.append("K_0    = {:<40s} {}".format(render_entry(self.k_theory.K0), tag).rstrip())
            lines.append("K_1    = {}".format(render_entry(self.k_theory.K1)))
            if self.k_theory.unit_class is not None:
                lines.append("[1]_0  = {}".format(self.k_theory.unit_class))
        for flag in self.flags:
            lines.append("flag: {}".format(flag))
        for note in self.notes:
            lines.append("note: {}".format(note))
        return "\n".join(lines) + "\n"


def _provenance_order(provenance):
    degrees = sorted(int(k[1:]) for k in provenance if k.startswith("H") and k[1:].isdigit())
    rest = sorted(k for k in provenance if not (k.startswith("H") and k[1:].isdigit()))
    return ["H{}".format(n) for n in degrees] + rest


def _tensor_rank(entry, p):
    if isinstance(entry, FinGenAbGroup):
        return entry.tensor_rank(p)
    if isinstance(entry, ExtensionResult):
        if entry.resolved is not None:
            return entry.resolved.tensor_rank(p)
        return None
    return None


def _tor_rank(entry, p):
    if entry is None:
        return 0
    if isinstance(entry, FinGenAbGroup):
        return entry.tor_rank(p)
    if isinstance(entry, ExtensionResult) and entry.resolved is not None:
        return entry.resolved.tor_rank(p)
    return None
