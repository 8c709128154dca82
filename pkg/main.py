import argparse, os, sys, datetime
import functools
import json
from dataclasses import dataclass, field
from typing import List, Optional

from omegaconf import OmegaConf
from sympy import isprime

import util.misc as utils
from algebra.linalg import cokernel, exterior_power, kernel_basis, kernel_rank, smith_normal_form
from algebra.selfsim import section_closure, sigma_surjective
from engine import matrix_order_mod_p, run_engine, spectral_radius_probe, sunic_orbit_count
from inputs.documents import load_matrix, matrix_to_json, read_document
from reference import FamilySpec, closed_form
from util.errors import InputError, SelfSimError

COMMANDS = ("analyze", "homology", "ktheory", "builtin", "linalg", "check")
LINALG_OPS = ("snf", "coker", "ker", "extpow")
COEFFICIENTS = ("Z", "F2", "Fp")
FORMATS = ("table", "json")


@dataclass
class RunConfig:
    command: str = "homology"
    args: List[str] = field(default_factory=list)
    max_degree: int = 10
    coefficients: str = "Z"
    p: Optional[int] = None
    format: str = "table"
    out: Optional[str] = None
    matrix: Optional[str] = None
    q: int = 1
    check: bool = False
    workers: int = 0
    seed: int = 23
    quiet: bool = False
    verbose: bool = False


def get_parser(**parser_kwargs):
    parser = argparse.ArgumentParser(**parser_kwargs)
    parser.add_argument(
        "command",
        choices=COMMANDS,
        help="what to compute",
    )
    parser.add_argument(
        "args",
        nargs="*",
        help="input document, or family and parameters for `builtin`, or operation for `linalg`. "
        "Items of the form `section.key=value` override the config.",
    )
    parser.add_argument(
        "-b",
        "--base",
        nargs="*",
        metavar="base_config.yaml",
        help="paths to base configs. Loaded from left-to-right. "
        "Parameters can be overwritten or added with command-line options of the form `section.key=value`.",
        default=["configs/default.yaml"],
    )
    parser.add_argument("-m", "--max-degree", dest="max_degree", type=int, default=None,
                        help="largest homology degree to report")
    parser.add_argument("-c", "--coefficients", choices=COEFFICIENTS, default=None,
                        help="Z (integral) or F2 / Fp via universal coefficients")
    parser.add_argument("-p", "--p", type=int, default=None, help="prime for --coefficients Fp")
    parser.add_argument("-f", "--format", choices=FORMATS, default=None, help="output format")
    parser.add_argument("-o", "--out", type=str, default=None, help="write the report here instead of stdout")
    parser.add_argument("-i", "--in", dest="matrix", type=str, default=None,
                        help="matrix file for `linalg`")
    parser.add_argument("-e", "--degree", dest="q", type=int, default=None,
                        help="exterior power degree for `linalg extpow`")
    parser.add_argument("--check", action="store_true", default=None,
                        help="also run every cross-validation applicable to the input")
    parser.add_argument("-w", "--workers", type=int, default=None, help="worker processes for per-degree work")
    parser.add_argument("-s", "--seed", type=int, default=None, help="seed for the randomized check suites")
    parser.add_argument("-q", "--quiet", action="store_true", default=None, help="no progress output")
    parser.add_argument("-v", "--verbose", action="store_true", default=None, help="per-degree timing output")
    parser.add_argument("--save-config", dest="save_config", type=str, default=None,
                        help="save the merged config to this path")
    return parser


def _is_override(item):
    key = item.split("=", 1)[0]
    return "=" in item and "." in key and not os.path.exists(item)


def load_config(opt, unknown=()):
    """Structured defaults < base yaml files < command-line flags < dotlist overrides."""
    base = OmegaConf.create({"run": OmegaConf.structured(RunConfig), "engines": {}, "check": {}})
    configs = [OmegaConf.load(cfg) for cfg in (opt.base or [])]
    positional = [a for a in opt.args if not _is_override(a)]
    dotlist = [a for a in opt.args if _is_override(a)] + [u.lstrip("-") for u in unknown if "=" in u]
    flags = {k: getattr(opt, k) for k in ("max_degree", "coefficients", "p", "format", "out", "matrix",
                                          "q", "check", "workers", "seed", "quiet", "verbose")
             if getattr(opt, k) is not None}
    flags.update(command=opt.command, args=positional)
    cfg = OmegaConf.merge(base, *configs, {"run": flags}, OmegaConf.from_dotlist(dotlist))
    if cfg.run.workers and "multispinal" in cfg.engines:
        cfg.engines.multispinal.params.workers = cfg.run.workers
    return cfg


def validate(rc):
    if rc.command not in COMMANDS:
        raise InputError("unknown command {!r}".format(rc.command))
    if rc.max_degree < 0:
        raise InputError("--max-degree must be >= 0")
    if rc.coefficients not in COEFFICIENTS:
        raise InputError("--coefficients must be one of {}".format(", ".join(COEFFICIENTS)))
    if rc.coefficients == "Fp" and (rc.p is None or not isprime(rc.p)):
        raise InputError("--coefficients Fp needs a prime --p, got {}".format(rc.p))
    if rc.format not in FORMATS:
        raise InputError("--format must be table or json")


def _coefficient_prime(rc):
    if rc.coefficients == "F2":
        return 2
    if rc.coefficients == "Fp":
        return rc.p
    return None


def render(report, rc):
    p = _coefficient_prime(rc)
    if p is not None:
        report = report.with_coefficients(p)
    if rc.format == "json":
        return report.dumps()
    return report.to_table()


def _input_path(rc):
    if not rc.args:
        raise InputError("`{}` needs an input document".format(rc.command))
    return rc.args[0]


def _attach_checks(report, doc, cfg):
    # test imports main
    from test import check_document
    results = check_document(doc, cfg)
    for r in results:
        report.flag("check {}: {}".format(r.name, "passed" if r.ok else "FAILED ({})".format(r.detail)))
    return 0 if all(r.ok for r in results) else 1


def cmd_homology(cfg, keep_homology=True, keep_k=True):
    rc = cfg.run
    doc = read_document(_input_path(rc))
    report = run_engine(doc, rc.max_degree, cfg.engines).truncate(rc.max_degree)
    if not keep_k:
        report.k_theory = None
        report.provenance.pop("K", None)
    if not keep_homology:
        report.homology = {}
        report.provenance = {k: v for k, v in report.provenance.items() if k == "K"}
    code = _attach_checks(report, doc, cfg) if rc.check else 0
    return render(report, rc), code


def cmd_ktheory(cfg):
    return cmd_homology(cfg, keep_homology=False)


def cmd_builtin(cfg):
    rc = cfg.run
    if not rc.args:
        raise InputError("`builtin` needs a family name")
    args = list(rc.args)
    spec = FamilySpec.parse(args[0], args[1:])
    return render(closed_form(spec, rc.max_degree), rc), 0


def analyze_document(doc, cfg):
    out = {"kind": doc.kind, "name": doc.name}
    payload = doc.payload
    if doc.kind == "automaton":
        out["alphabet"] = payload.alphabet_size
        out["generators"] = payload.names
        out["assumptions"] = sorted(payload.assumptions)
        out["orbits"] = [list(o) for o in payload.orbits()]
        out["transitive"] = payload.is_transitive()
        closure = section_closure(payload, payload.names, cfg.check.closure_bound)
        out["section_closure"] = None if closure is None else [str(w) for w in closure]
        out["contracting_probe"] = ("closed under sections" if closure is not None
                                    else "bound {} exceeded".format(cfg.check.closure_bound))
        st = payload.stabilizer(0)
        out["stabilizer_index"] = len(st.transversal)
        out["schreier_generators"] = [str(w) for w in st.schreier_generators]
        out["sigma_images"] = [str(w) for w in st.sigma_images]
        if payload.abelianization is not None:
            out["sigma_surjective"] = sigma_surjective(payload)
    elif doc.kind == "graph":
        A = payload.adjacency
        out["vertices"] = A.rows
        out["regular"] = list(payload.regular)
        out["singular"] = [v for v in range(A.rows) if v not in payload.regular]
    elif doc.kind == "katsura":
        n = payload.A.rows
        out["vertices"] = n
        out["zero_rows"] = [v for v in range(n) if all(payload.A[v, w] == 0 for w in range(n))]
    elif doc.kind == "free_abelian":
        out["rank"] = payload.A.rows
        out["d"] = payload.d
        out["A"] = payload.A.to_json()
        out["spectral_radius_probe"] = round(spectral_radius_probe(payload.A), 9)
    elif doc.kind == "multispinal":
        out.update(d=payload.d, m=payload.m, k=payload.k, A0=list(payload.A0), separating=payload.separating)
        if len(payload.A0) == 1:
            out["orbits_on_nonzero_B"] = sunic_orbit_count(payload)
            if payload.m == payload.d and isprime(payload.m):
                C = payload.phi[payload.A0[0]].matrix
                out["order_of_automorphism"] = matrix_order_mod_p(C, payload.m)
    return out


def cmd_analyze(cfg):
    rc = cfg.run
    doc = read_document(_input_path(rc))
    out = analyze_document(doc, cfg)
    if rc.format == "json":
        return json.dumps(out, indent=2, ensure_ascii=False) + "\n", 0
    return "".join("{:<22s} {}\n".format(k, v) for k, v in out.items()), 0


def cmd_linalg(cfg):
    rc = cfg.run
    if not rc.args or rc.args[0] not in LINALG_OPS:
        raise InputError("`linalg` needs one of {}".format(", ".join(LINALG_OPS)))
    if rc.matrix is None:
        raise InputError("`linalg` needs --in MATRIX.json")
    op, M = rc.args[0], load_matrix(rc.matrix)
    if op == "snf":
        snf = smith_normal_form(M)
        out = {"diag": list(snf.diag), "U": snf.U.tolist(), "D": snf.D.tolist(), "V": snf.V.tolist()}
    elif op == "coker":
        out = {"cokernel": str(cokernel(M))}
    elif op == "ker":
        out = {"rank": kernel_rank(M), "basis": [[str(x) for x in v] for v in kernel_basis(M)]}
    else:
        out = {"q": rc.q, "matrix": matrix_to_json(exterior_power(M, rc.q))}
    if rc.format == "json":
        return json.dumps(out, indent=2) + "\n", 0
    return "".join("{}: {}\n".format(k, v) for k, v in out.items()), 0


def cmd_check(cfg):
    # test imports main
    from test import run_checks
    results = run_checks(cfg)
    lines = ["{:<48s} {}".format(r.name, "ok" if r.ok else "FAILED: {}".format(r.detail)) for r in results]
    failed = sum(1 for r in results if not r.ok)
    lines.append("{} checks, {} failed".format(len(results), failed))
    return "\n".join(lines) + "\n", 0 if failed == 0 else 1


COMMAND_FNS = {
    "analyze": cmd_analyze,
    "homology": functools.partial(cmd_homology, keep_k=False),
    "ktheory": cmd_ktheory,
    "builtin": cmd_builtin,
    "linalg": cmd_linalg,
    "check": cmd_check,
}


def emit(text, out):
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w") as f:
        f.write(text)
    utils.log("report written to {}".format(out))


def run(cfg):
    """Run one command; returns the process exit code."""
    rc = cfg.run
    utils.set_quiet(rc.quiet)
    utils.set_verbose(rc.verbose)
    try:
        validate(rc)
        utils.seed_everything(rc.seed)
        text, code = COMMAND_FNS[rc.command](cfg)
    except SelfSimError as exc:
        utils.log("error: {}".format(exc))
        return exc.exit_code
    except KeyError as exc:
        utils.log("error: missing key {}".format(exc))
        return InputError.exit_code
    emit(text, rc.out)
    return code


def main(argv=None):
    parser = get_parser()
    opt, unknown = parser.parse_known_args(argv)
    cfg = load_config(opt, unknown)
    if opt.save_config:
        OmegaConf.save(cfg, opt.save_config)
    if cfg.run.verbose and not cfg.run.quiet:
        utils.log("{} {}".format(datetime.datetime.now().strftime("%Y-%m-%dT%H-%M-%S"), cfg.run.command))
        utils.log(OmegaConf.to_yaml(cfg.run))
    return run(cfg)


if __name__ == "__main__":
    sys.path.append(os.getcwd())
    sys.exit(main())
