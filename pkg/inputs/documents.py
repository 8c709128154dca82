"""
Input documents: JSON (or YAML) files with a "kind" key, read through OmegaConf
and turned into the typed inputs the engines consume.
"""
import json
import os
from dataclasses import dataclass
from typing import Optional, Tuple

from omegaconf import OmegaConf

from algebra.abgroup import AbPresentation
from algebra.linalg import IntMatrix, RatMatrix
from algebra.selfsim import (ASSUMPTIONS, Abelianization, Generator, GroupWord,
                             SelfSimilarAction)
from util.errors import InputError

SCHEMA_VERSION = 1
KINDS = ("automaton", "graph", "katsura", "free_abelian", "multispinal")


@dataclass(frozen=True)
class GraphInput:
    """A_{vw} = number of edges w -> v; ``regular`` lists the regular vertices."""
    adjacency: IntMatrix
    regular: Tuple[int, ...]

    def __post_init__(self):
        A = self.adjacency
        if not A.is_square():
            raise InputError("adjacency matrix must be square")
        if any(x < 0 for x in A.entries):
            raise InputError("adjacency entries must be >= 0")
        for v in self.regular:
            if not 0 <= v < A.rows:
                raise InputError("regular vertex {} out of range".format(v))
            if all(A[v, w] == 0 for w in range(A.cols)):
                raise InputError("vertex {} receives no edges and cannot be regular".format(v))

    @classmethod
    def with_default_regular(cls, adjacency):
        regular = tuple(v for v in range(adjacency.rows) if any(adjacency[v, w] for w in range(adjacency.cols)))
        return cls(adjacency, regular)


@dataclass(frozen=True)
class KatsuraInput:
    A: IntMatrix
    B: IntMatrix

    def __post_init__(self):
        if self.A.shape != self.B.shape or not self.A.is_square():
            raise InputError("Katsura matrices A and B must be square of the same size")
        if any(x < 0 for x in self.A.entries):
            raise InputError("Katsura matrix A must have entries >= 0")


@dataclass(frozen=True)
class FreeAbelianInput:
    """A is the matrix of σ_x ⊗ Q, d the alphabet size."""
    A: RatMatrix
    d: int

    def __post_init__(self):
        if not self.A.is_square():
            raise InputError("virtual endomorphism matrix must be square")
        if self.d < 2:
            raise InputError("alphabet size d must be >= 2")


@dataclass(frozen=True)
class PhiEntry:
    kind: str  # "aut" (k x k over Z/m) or "hom" (1 x k into Z/d)
    matrix: IntMatrix


@dataclass(frozen=True)
class MultispinalInput:
    d: int
    m: int
    k: int
    phi: Tuple[PhiEntry, ...]
    separating: Optional[bool] = None

    def __post_init__(self):
        if self.d < 2 or self.m < 2 or self.k < 1:
            raise InputError("multispinal data needs d >= 2, m >= 2, k >= 1")
        if len(self.phi) != self.d:
            raise InputError("phi must have one entry per element of Z/{}".format(self.d))
        for a, entry in enumerate(self.phi):
            if entry.kind == "aut" and entry.matrix.shape != (self.k, self.k):
                raise InputError("phi[{}] must be a {}x{} automorphism matrix".format(a, self.k, self.k))
            if entry.kind == "hom" and entry.matrix.shape != (1, self.k):
                raise InputError("phi[{}] must be a 1x{} homomorphism row".format(a, self.k))
            if entry.kind not in ("aut", "hom"):
                raise InputError("phi[{}] has unknown kind {!r}".format(a, entry.kind))
        if not self.A0:
            raise InputError("at least one phi entry must be an automorphism")

    @property
    def A0(self):
        return tuple(a for a, e in enumerate(self.phi) if e.kind == "aut")


@dataclass(frozen=True)
class Document:
    kind: str
    payload: object
    family: Optional[dict]
    name: str


def read_document(path):
    if not os.path.exists(path):
        raise InputError("Cannot find {}".format(path))
    try:
        raw = OmegaConf.to_container(OmegaConf.load(path), resolve=True)
    except Exception as exc:
        raise InputError("cannot read {}: {}".format(path, exc))
    if not isinstance(raw, dict):
        raise InputError("{} does not hold a JSON object".format(path))
    raw.setdefault("name", os.path.splitext(os.path.basename(path))[0])
    return parse_document(raw)


def parse_document(raw):
    version = raw.get("version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError("unsupported schema version {}".format(version))
    kind = raw.get("kind")
    if kind not in KINDS:
        raise InputError("unknown document kind {!r}; expected one of {}".format(kind, ", ".join(KINDS)))
    parser = {
        "automaton": parse_automaton,
        "graph": parse_graph,
        "katsura": parse_katsura,
        "free_abelian": parse_free_abelian,
        "multispinal": parse_multispinal,
    }[kind]
    try:
        payload = parser(raw)
    except InputError:
        raise
    except (TypeError, ValueError, AttributeError, KeyError) as exc:
        raise InputError("malformed {} document: {}".format(kind, exc)) from exc
    return Document(kind, payload, raw.get("family"), raw.get("name", kind))


def _require(raw, key):
    if not isinstance(raw, dict):
        raise InputError("expected an object holding {!r}, got {!r}".format(key, raw))
    if key not in raw:
        raise InputError("document is missing {!r}".format(key))
    return raw[key]


def _int(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise InputError("{} must be an integer, got {!r}".format(what, value))
    try:
        return int(value)
    except ValueError:
        raise InputError("{} must be an integer, got {!r}".format(what, value))


def _matrix_rows(rows, what):
    if not isinstance(rows, list) or any(not isinstance(r, list) for r in rows):
        raise InputError("{} must be an array of arrays".format(what))
    return rows


def _int_matrix(rows, what, cols=None):
    return IntMatrix.from_rows(_matrix_rows(rows, what), cols=cols)


def parse_automaton(raw):
    k = _int(_require(raw, "alphabet"), "alphabet")
    gens_raw = _require(raw, "generators")
    if not isinstance(gens_raw, dict) or not gens_raw:
        raise InputError("'generators' must be a non-empty object")
    names = list(gens_raw)
    involutions = frozenset(n for n, g in gens_raw.items() if g.get("involution", False))
    generators = {}
    for name, g in gens_raw.items():
        perm = tuple(_int(x, "perm of {}".format(name)) for x in _require(g, "perm"))
        sections = tuple(GroupWord.parse(str(w), names, involutions) for w in _require(g, "sections"))
        generators[name] = Generator(perm, sections, name in involutions)

    abelianization = None
    if raw.get("abelianization") is not None:
        ab = raw["abelianization"]
        pres = AbPresentation.from_invariants(_require(ab, "invariants"))
        images = {}
        for name in names:
            vec = tuple(_int(x, "image of {}".format(name)) for x in _require(_require(ab, "images"), name))
            if len(vec) != pres.generators:
                raise InputError("image of {!r} has length {}, expected {}".format(name, len(vec), pres.generators))
            images[name] = vec
        abelianization = Abelianization(pres, images)

    assume = raw.get("assume") or {}
    if isinstance(assume, dict):
        flags = frozenset(f for f, on in assume.items() if on)
    else:
        flags = frozenset(assume)
    unknown = flags - set(ASSUMPTIONS)
    if unknown:
        raise InputError("unknown assumption(s) {}".format(sorted(unknown)))
    return SelfSimilarAction(k, generators, abelianization, flags)


def parse_graph(raw):
    A = _int_matrix(_require(raw, "adjacency"), "adjacency")
    if raw.get("regular") is None:
        return GraphInput.with_default_regular(A)
    return GraphInput(A, tuple(_int(v, "regular vertex") for v in raw["regular"]))


def parse_katsura(raw):
    return KatsuraInput(_int_matrix(_require(raw, "A"), "A"), _int_matrix(_require(raw, "B"), "B"))


def parse_free_abelian(raw):
    rows = _require(raw, "A")
    return FreeAbelianInput(RatMatrix.from_rows(_matrix_rows(rows, "A")), _int(_require(raw, "d"), "d"))


def parse_multispinal(raw):
    B = _require(raw, "B")
    m, k = _int(_require(B, "m"), "B.m"), _int(B.get("k", 1), "B.k")
    phi = []
    for a, entry in enumerate(_require(raw, "phi")):
        if "aut" in entry:
            phi.append(PhiEntry("aut", _int_matrix(entry["aut"], "phi[{}].aut".format(a))))
        elif "hom" in entry:
            phi.append(PhiEntry("hom", _int_matrix([entry["hom"]], "phi[{}].hom".format(a))))
        else:
            raise InputError("phi[{}] needs an 'aut' or 'hom' key".format(a))
    return MultispinalInput(_int(_require(raw, "d"), "d"), m, k, tuple(phi), raw.get("separating"))


def load_matrix(path):
    """Matrix exchange format: array of arrays of integers or "p/q" strings."""
    if not os.path.exists(path):
        raise InputError("Cannot find {}".format(path))
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise InputError("cannot parse {}: {}".format(path, exc))
    cols = None
    if isinstance(doc, dict):
        cols = doc.get("cols")
        doc = doc.get("matrix")
    if not isinstance(doc, list):
        raise InputError("{} must hold an array of arrays".format(path))
    M = RatMatrix.from_rows(_matrix_rows(doc, path), cols=cols)
    if M.is_integral():
        return IntMatrix(M.rows, M.cols, M.entries)
    return M


def matrix_to_json(M):
    return [[x if isinstance(x, int) else str(x) for x in row] for row in M.tolist()]
