"""Command-line interface: ``psn <command> ...``.

Exit codes: 0 success, 1 validation or verification failure, 2 parse or
usage error. Failures print a JSON object with an ``error`` key on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .core import Schedule, ValidationError, enumerate_updates, validate_psn
from .expr import ParseError
from .fileformat import (emit_psn_spec, load_psn, parse_maps, parse_probabilities, parse_psn_spec,
                         parse_relations, parse_series, parse_table)
from .morphism import (MorphismError, check_psn_morphism, equilibrium_distance, maps_from_document)
from .reveng import PipelineError, TimeSeriesFamily, decompose_sequential, run_pipeline
from .statespace import (ConvergenceError, TransitionSystem, attractors, build_state_space, matrix_power,
                         steady_state_of, transition_matrix)


class CommandError(Exception):
    def __init__(self, code: int, payload: dict):
        super().__init__(payload.get("message", ""))
        self.code = code
        self.payload = payload


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise CommandError(2, {"error": "io", "message": str(e), "path": path}) from None


def _load(path: str):
    return validate_psn(parse_psn_spec(_read(path)))


def _emit_json(obj) -> None:
    json.dump(obj, sys.stdout, indent=2)
    sys.stdout.write("\n")


def _schedule(text: str, name: str = "alpha") -> Schedule:
    try:
        return Schedule(name, tuple(int(t) for t in text.replace(",", " ").split()))
    except ValueError as e:
        raise CommandError(2, {"error": "usage", "message": f"bad schedule {text!r}: {e}"}) from None


# --- DOT ---------------------------------------------------------------------------

def state_label(state) -> str:
    return "(" + ",".join(map(str, state)) + ")"


def emit_dot(ts: TransitionSystem, name: str = "statespace") -> str:
    """Nodes labelled by state tuples, edges by probability to 6 decimals."""
    dom = ts.domain
    lines = [f"digraph {name} {{", "  node [shape=box];"]
    for i in range(dom.size):
        lines.append(f'  s{i} [label="{state_label(dom.decode(i))}"];')
    for u, v, p in ts.edge_items():
        lines.append(f'  s{u} -> s{v} [label="{p:.6f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- commands ------------------------------------------------------------------------

def cmd_validate(args) -> int:
    psn = _load(args.spec)
    _emit_json({"valid": True, "vertices": psn.n, "states": psn.domain.size,
                "updates": list(psn.update_names)})
    return 0


def _update_json(psn, u) -> dict:
    dom = psn.domain
    out = {"name": u.name, "probability": u.probability,
           "table": [[list(dom.decode(i)), list(dom.decode(j))] for i, j in enumerate(u.table)]}
    if u.has_provenance:
        out["schedule"] = u.schedule.name
        out["selection"] = list(u.selection)
    return out


def cmd_expand(args) -> int:
    psn = _load(args.spec)
    updates = enumerate_updates(psn, dedupe=args.dedupe) if args.full else psn.updates
    _emit_json({"updates": [_update_json(psn, u) for u in updates]})
    return 0


def cmd_statespace(args) -> int:
    ts = build_state_space(_load(args.spec))
    dot = emit_dot(ts)
    if args.dot and args.dot != "-":
        with open(args.dot, "w") as fh:
            fh.write(dot)
    else:
        sys.stdout.write(dot)
    return 0


def cmd_matrix(args) -> int:
    T = transition_matrix(build_state_space(_load(args.spec)))
    if args.power != 1:
        if args.power < 1:
            raise CommandError(2, {"error": "usage", "message": "--power must be a positive integer"})
        T = matrix_power(T, args.power)
    for row in T.dense():
        sys.stdout.write(" ".join(f"{v:.12g}" for v in row) + "\n")
    return 0


def cmd_steady(args) -> int:
    report = steady_state_of(_load(args.spec), tol=args.tol, max_iter=args.max_iter)
    _emit_json(report.to_json())
    return 0


def cmd_attractors(args) -> int:
    _emit_json(attractors(_load(args.spec)).to_json())
    return 0


def _certificate(args):
    D1, D2 = _load(args.spec_a), _load(args.spec_b)
    gm, vm, mu = maps_from_document(parse_maps(_read(args.maps)), D1, D2)
    return check_psn_morphism(D1, D2, gm, vm, mu, strict=getattr(args, "strict", False))


def cmd_morphism(args) -> int:
    cert = _certificate(args)
    _emit_json(cert.to_json())
    return 0 if cert.valid else 1


def cmd_equilibrium(args) -> int:
    cert = _certificate(args)
    if not cert.valid:
        raise CommandError(1, {"error": "verification", "message": "the maps do not define a morphism",
                               "certificate": cert.to_json()})
    report = equilibrium_distance(cert, args.mmax, args.tol)
    _emit_json(report.to_json())
    return 0


def cmd_reveng(args) -> int:
    rel, cards = parse_relations(_read(args.relations))
    series = [TimeSeriesFamily(name, states) for name, states in parse_series(_read(args.series))]
    probs = parse_probabilities(_read(args.probs))
    schedules = [_schedule(s, f"s{k}") for k, s in enumerate(args.schedule, start=1)] if args.schedule else None
    result = run_pipeline(rel, cards, series, probs, schedules, mode=args.mode, fill=args.fill,
                          threshold=args.threshold, top=args.top)
    spec = emit_psn_spec(result.psn)
    report = json.dumps(result.to_json(), indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(spec)
    else:
        sys.stdout.write(spec)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report)
    elif args.out:
        sys.stdout.write(report)
    return 0


def cmd_decompose(args) -> int:
    text = _read(args.source)
    if args.source.endswith(".psn"):
        psn = validate_psn(parse_psn_spec(text))
        u = psn.update(args.update) if args.update else psn.updates[0]
        domain, table, label = psn.domain, u.table, u.name
    else:
        domain, table = parse_table(text)
        label = None
    result = decompose_sequential(table, domain, _schedule(args.schedule))
    out = result.to_json(domain)
    if label is not None:
        out["update"] = label
    _emit_json(out)
    return 0


# --- entry point -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="psn", description="Probabilistic sequential networks")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check a .psn spec")
    s.add_argument("spec")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("expand", help="print update-function tables")
    s.add_argument("spec")
    s.add_argument("--full", action="store_true", help="every selection x schedule, uniform weights")
    s.add_argument("--dedupe", action="store_true", help="with --full, merge equal tables")
    s.set_defaults(func=cmd_expand)

    s = sub.add_parser("statespace", help="weighted state space as DOT")
    s.add_argument("spec")
    s.add_argument("--dot", metavar="OUT", help="output file (default stdout)")
    s.set_defaults(func=cmd_statespace)

    s = sub.add_parser("matrix", help="dense transition matrix, row-major")
    s.add_argument("spec")
    s.add_argument("--power", type=int, default=1)
    s.set_defaults(func=cmd_matrix)

    s = sub.add_parser("steady", help="stationary distributions per recurrent class")
    s.add_argument("spec")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--max-iter", type=int, default=10 ** 6)
    s.set_defaults(func=cmd_steady)

    s = sub.add_parser("attractors", help="fixed points, cycles and basins")
    s.add_argument("spec")
    s.set_defaults(func=cmd_attractors)

    s = sub.add_parser("morphism", help="morphism verification")
    msub = s.add_subparsers(dest="action", required=True)
    c = msub.add_parser("check", help="verify or search a morphism D1 -> D2")
    c.add_argument("spec_a")
    c.add_argument("spec_b")
    c.add_argument("maps")
    c.add_argument("--strict", action="store_true", help="check every block order within components")
    c.set_defaults(func=cmd_morphism)

    s = sub.add_parser("equilibrium", help="compare powers of the two transition matrices")
    s.add_argument("spec_a")
    s.add_argument("spec_b")
    s.add_argument("maps")
    s.add_argument("--mmax", type=int, default=200)
    s.add_argument("--tol", type=float, default=1e-8)
    s.set_defaults(func=cmd_equilibrium)

    s = sub.add_parser("reveng", help="infer a PSN from relations and time series")
    s.add_argument("relations")
    s.add_argument("series")
    s.add_argument("probs")
    s.add_argument("--schedule", action="append", help="candidate schedule, e.g. '1 2 3' (repeatable)")
    s.add_argument("--fill", choices=("auto", "identity", "zero", "enumerate"), default="auto")
    s.add_argument("--mode", choices=("updates", "families"), default="updates")
    s.add_argument("--threshold", type=float, default=0.0)
    s.add_argument("--top", type=int)
    s.add_argument("--out", help="write the spec here instead of stdout")
    s.add_argument("--report", help="write the JSON fit report here")
    s.set_defaults(func=cmd_reveng)

    s = sub.add_parser("decompose", help="sequential decomposition of a map")
    s.add_argument("source", help=".psn spec or table file")
    s.add_argument("--schedule", required=True)
    s.add_argument("--update", help="update function of the spec (default: the first)")
    s.set_defaults(func=cmd_decompose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) and 2
    try:
        return args.func(args)
    except CommandError as e:
        err = e.payload
        code = e.code
    except ParseError as e:
        err, code = {"error": "parse", "message": e.message, "line": e.line, "column": e.column}, 2
    except ValidationError as e:
        err, code = {"error": "validation", "message": str(e).splitlines()[0],
                     "violations": [v.to_json() for v in e.violations]}, 1
    except (MorphismError, PipelineError, ConvergenceError) as e:
        err, code = {"error": "verification", "message": str(e)}, 1
    except (KeyError, ValueError) as e:
        err, code = {"error": "usage", "message": str(e).strip("'\"")}, 2
    json.dump(err, sys.stderr)
    sys.stderr.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
