"""Command-line front end: ``coarse-lp <command> [options]``.

Reports are JSON on stdout (sorted keys, no timestamps), embedding the
resolved configuration. Artifacts (graph files, CSVs, Folner sequences) go to
``--out``. Options may also come from ``--config FILE`` with flat
``key = value`` lines; command-line flags win over the file.

Exit codes: 0 success, 2 validation error, 3 budget exceeded, 4 non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import cocycle, dirichlet, folner, graph, hyperbolic
from .dirichlet import TailDescriptor
from .errors import BudgetExceededError, NonConvergenceError
from .experiments import DATA_KINDS, liouville_profile
from .groups import DEFAULT_BUDGET, GroupSpec

EXIT_OK, EXIT_VALIDATION, EXIT_BUDGET, EXIT_NONCONVERGENCE = 0, 2, 3, 4


class ValidationError(ValueError):
    pass


def _positive_int(text) -> int:
    v = int(text)
    if v < 1:
        raise ValueError(f"expected a positive integer, got {text}")
    return v


def _nonneg_int(text) -> int:
    v = int(text)
    if v < 0:
        raise ValueError(f"expected a non-negative integer, got {text}")
    return v


def _exponent(text) -> float:
    v = float(text)
    if not v > 1 or math.isinf(v):
        raise ValueError(f"p must be a finite number > 1, got {text}")
    return v


def _positive_float(text) -> float:
    v = float(text)
    if not v > 0:
        raise ValueError(f"expected a positive number, got {text}")
    return v


def _int_list(text) -> list[int]:
    out = [_positive_int(t) for t in str(text).split(",") if t.strip()]
    if not out:
        raise ValueError("empty list")
    return out


# name -> (converter, default, help)
OPTIONS = {
    "group": (str, None, "Z^d, lamplighter or F<k>"),
    "radius": (_nonneg_int, None, "ball radius"),
    "radii": (_int_list, None, "comma-separated radii (liouville)"),
    "depth": (_positive_int, None, "tree depth"),
    "p": (_exponent, None, "exponent p > 1"),
    "tol": (_positive_float, None, "solver tolerance (default depends on p)"),
    "seed": (int, None, "random seed (required for sampled estimators)"),
    "samples": (_positive_int, 1000, "number of sampled quadruples"),
    "budget": (_positive_int, DEFAULT_BUDGET, "vertex budget"),
    "out": (str, None, "artifact output path"),
    "graph": (str, None, "graph file"),
    "boundary": (str, None, "boundary CSV (vertex,value)"),
    "data": (str, "default", "boundary data: default or constant"),
    "n": (_positive_int, None, "length N of the Folner sequence / profile"),
    "C": (Fraction, None, "control constant to certify (default: smallest)"),
    "function": (str, "delta", "delta or sqrt"),
}

COMMANDS = {
    "cayley": (["group", "radius", "budget", "out"], "build and serialise a Cayley ball"),
    "harmonic": (["graph", "boundary", "p", "tol", "out"], "solve the p-harmonic Dirichlet problem"),
    "liouville": (["group", "radii", "p", "tol", "data", "budget"], "oscillation of p-harmonic extensions"),
    "folner": (["group", "n", "C", "budget", "out"], "build and certify a controlled Folner sequence"),
    "sublinearity": (["group", "function", "n", "p", "budget", "out"], "sublinearity profile of a coboundary"),
    "certificate": (["depth", "p", "budget", "out"], "non-vanishing certificate on a tree ball"),
    "hyperbolicity": (["group", "graph", "radius", "samples", "seed", "budget"], "sampled four-point delta"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarse-lp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (opts, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="flat key=value file; flags override it")
        for opt in opts:
            # everything is read as a string and validated in resolve()
            sp.add_argument(f"--{opt}", dest=opt, default=None, help=OPTIONS[opt][2])
    return parser


def read_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValidationError(f"{path}:{lineno}: expected key = value")
            out[key.strip().lstrip("-")] = value.strip()
    return out


def resolve(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < flags, validating every value."""
    opts = COMMANDS[args.command][0]
    file_cfg = read_config(args.config) if args.config else {}
    unknown = set(file_cfg) - set(opts)
    if unknown:
        raise ValidationError(f"config keys not used by {args.command}: {sorted(unknown)}")
    cfg = {}
    for opt in opts:
        conv, default, _ = OPTIONS[opt]
        raw = getattr(args, opt)
        if raw is None:
            raw = file_cfg.get(opt)
        if raw is None:
            cfg[opt] = default
            continue
        try:
            cfg[opt] = conv(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"--{opt}: {exc}") from None
    return cfg


def _require(cfg, *names):
    missing = [n for n in names if cfg.get(n) is None]
    if missing:
        raise ValidationError("missing required option(s): " + ", ".join("--" + m for m in missing))


def _group(cfg) -> GroupSpec:
    try:
        return GroupSpec.parse(cfg["group"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _jsonable(cfg: dict) -> dict:
    out = {}
    for k, v in cfg.items():
        if isinstance(v, Fraction):
            v = str(v)
        out[k] = v
    return out


# -- commands ----------------------------------------------------------------


def cmd_cayley(cfg):
    _require(cfg, "group", "radius", "out")
    spec = _group(cfg)
    g = graph.build_cayley_ball(spec, cfg["radius"], budget=cfg["budget"])
    graph.write_graph(g, cfg["out"])
    return {"group": str(spec), "num_vertices": g.num_vertices, "num_edges": g.num_edges}


def cmd_harmonic(cfg):
    _require(cfg, "graph", "boundary", "p", "out")
    g = graph.read_graph(cfg["graph"])
    boundary = dirichlet.read_vertex_function(cfg["boundary"], g.num_vertices)
    f, report = dirichlet.solve_p_harmonic(g, boundary, cfg["p"], tol=cfg["tol"])
    dirichlet.write_vertex_function(f, cfg["out"])
    return json.loads(report.to_json())


def cmd_liouville(cfg):
    _require(cfg, "group", "radii", "p")
    if cfg["data"] not in DATA_KINDS:
        raise ValidationError(f"--data must be one of {DATA_KINDS}")
    space = "tree" if cfg["group"].strip().lower() == "tree" else _group(cfg)
    rows = liouville_profile(space, cfg["radii"], cfg["p"], cfg["data"], cfg["tol"], cfg["budget"])
    return {"space": str(space), "rows": rows}


def cmd_folner(cfg):
    _require(cfg, "group", "n")
    spec = _group(cfg)
    if spec.kind == "zd":
        F = folner.folner_zd(spec.rank, cfg["n"], budget=cfg["budget"])
    elif spec.kind == "lamplighter":
        F = folner.folner_lamplighter(cfg["n"], budget=cfg["budget"])
    else:
        raise ValidationError(f"{spec} is not amenable; no Folner sequence exists")
    C = folner.smallest_constant(F) if cfg["C"] is None else cfg["C"]
    cert = folner.verify_controlled(F, C)
    if cfg["out"]:
        folner.write_folner_sequence(F, cfg["out"])
    return json.loads(cert.to_json())


def _sqrt_tail() -> TailDescriptor:
    # |sqrt(a) - sqrt(a - 1)| <= a^(-1/2) for a >= 1
    return TailDescriptor(lambda x: np.sign(x[:, 0]) * np.sqrt(np.abs(x[:, 0])), 1.0, 0.5)


def cmd_sublinearity(cfg):
    _require(cfg, "group", "n", "p")
    spec = _group(cfg)
    if cfg["function"] == "delta":
        b = cocycle.CocycleHandle.coboundary_of(spec, {spec.identity: 1})
    elif cfg["function"] == "sqrt":
        if spec != GroupSpec.zd(1):
            raise ValidationError("--function sqrt is defined on Z only")
        b = cocycle.CocycleHandle.coboundary_of(spec, _sqrt_tail())
    else:
        raise ValidationError("--function must be delta or sqrt")
    N = cfg["n"]
    ns = sorted({1, *[2**k for k in range(N.bit_length()) if 2**k <= N], N})
    try:
        prof = cocycle.sublinearity_profile(b, N, cfg["p"], ns=ns, budget=cfg["budget"])
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    if cfg["out"]:
        prof.write_csv(cfg["out"])
    return {
        "n": list(prof.n),
        "max_norm": list(prof.max_norm),
        "ratio": list(prof.ratio),
        "tail_bound": list(prof.tail_bound),
    }


def cmd_certificate(cfg):
    _require(cfg, "depth", "p")
    t = hyperbolic.build_tree_ball(cfg["depth"], budget=cfg["budget"])
    cert = hyperbolic.nonvanishing_certificate(t, cfg["p"])
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(cert.to_json() + "\n")
    return json.loads(cert.to_json())


def cmd_hyperbolicity(cfg):
    _require(cfg, "seed")
    if (cfg["graph"] is None) == (cfg["group"] is None):
        raise ValidationError("give exactly one of --graph or --group")
    if cfg["graph"] is not None:
        g = graph.read_graph(cfg["graph"])
    else:
        _require(cfg, "radius")
        g = graph.build_cayley_ball(_group(cfg), cfg["radius"], budget=cfg["budget"])
    delta = graph.estimate_hyperbolicity(g, cfg["samples"], cfg["seed"])
    return {"delta": float(delta), "delta_exact": str(delta), "num_vertices": g.num_vertices}


HANDLERS = {
    "cayley": cmd_cayley,
    "harmonic": cmd_harmonic,
    "liouville": cmd_liouville,
    "folner": cmd_folner,
    "sublinearity": cmd_sublinearity,
    "certificate": cmd_certificate,
    "hyperbolicity": cmd_hyperbolicity,
}


def run(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        result = HANDLERS[args.command](cfg)
    except BudgetExceededError as exc:
        print(f"coarse-lp: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except NonConvergenceError as exc:
        print(f"coarse-lp: {exc} (residual {exc.residual:.3e} after {exc.iterations} sweeps)", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (ValueError, OSError) as exc:
        print(f"coarse-lp: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = {"command": args.command, "config": _jsonable(cfg), "result": result}
    stdout.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
