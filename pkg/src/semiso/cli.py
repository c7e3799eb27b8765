"""Command line front end.

Exit codes: 0 when every check passes, 1 when checks fail or the search
finds no model, 2 for unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys

from .algebra import (
    AlgebraError,
    check_proposition,
    compose_labels,
    extract_algebra,
    is_closed,
    monoid_closure,
    parse_algebra,
    serialize_algebra,
    to_dot,
)
from .structure import StructureError, parse_structure, serialize_structure, structure_to_dict
from .synth import (
    DEFAULT_BUDGET,
    SynthError,
    SynthSpec,
    roundtrip,
    synthesize,
    validate_spec,
    verify_model,
)

OK, FAILED, INPUT_ERROR = 0, 1, 2


class InputError(Exception):
    pass


def _read(path):
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")


def _write(path, text):
    try:
        with open(path, "w") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}")


def _emit(payload, as_json, lines):
    if as_json:
        print(json.dumps(payload, indent=1, sort_keys=True))
    else:
        for line in lines:
            print(line)


def cmd_extract(args):
    m = parse_structure(_read(args.model))
    alg = extract_algebra(m)
    if args.out:
        _write(args.out, serialize_algebra(alg))
    if args.dot:
        _write(args.dot, to_dot(alg))
    pairs = [{"src": p, "dst": q, "atoms": len(alg.atoms_between(p, q)),
              "labels": 2 ** len(alg.atoms_between(p, q))} for p, q in alg.type_pairs()]
    payload = {
        "types": [{"id": t.id, "size": t.size, "color": t.color} for t in alg.types],
        "atoms": len(alg.atoms),
        "pairs": pairs,
        "labels": sum(x["labels"] for x in pairs),
        "group_order": alg.group_order,
        "split_colors": alg.split_colors,
    }
    lines = [f"types: {len(alg.types)} (" + ", ".join(f"{t.id}: {t.size}" for t in alg.types) + ")",
             f"automorphism group order: {alg.group_order}",
             f"atoms: {len(alg.atoms)}"]
    lines += [f"  ({x['src']},{x['dst']}): {x['atoms']} atoms, {x['labels']} labels" for x in pairs]
    for color, ids in alg.split_colors.items():
        lines.append(f"note: color {color!r} splits into types {', '.join(ids)}")
    _emit(payload, args.json, lines)
    return OK


def cmd_check(args):
    alg = parse_algebra(_read(args.algebra))
    report = check_proposition(alg)
    lines = [f"labels checked: {len(report.labels)}",
             "classification: " + ", ".join(f"{k} {v}" for k, v in report.counts.items())]
    lines += [f"  ({p},{q}): {c} labels (2^k = {e})" for (p, q), (c, e) in report.label_counts.items()]
    lines += [f"FAIL {f}" for f in report.findings]
    lines.append("all checks pass" if report.ok else f"{len(report.findings)} findings")
    _emit(report.to_dict(), args.json, lines)
    return OK if report.ok else FAILED


def _parse_sizes(items):
    sizes = {}
    for item in items or ():
        name, sep, value = item.rpartition("=")
        if not sep or not name:
            raise InputError(f"--size expects name=n, got {item!r}")
        try:
            sizes[name] = int(value)
        except ValueError:
            raise InputError(f"--size expects an integer, got {item!r}")
    return sizes


def cmd_synth(args):
    spec = SynthSpec(parse_algebra(_read(args.spec)))
    problems = validate_spec(spec)
    if not problems.ok:
        raise InputError("invalid spec:\n" + str(problems))
    result = synthesize(spec, _parse_sizes(args.size), args.ext_level, args.seed, args.budget)
    payload = {"status": result.status, "seed": result.seed, "nodes": result.nodes,
               "sizes": result.sizes, "verify": None, "model": None}
    if result.model is None:
        reason = ("no model exists at these sizes (exhaustive search)" if result.status == "unsat"
                  else f"node budget {args.budget} exhausted")
        _emit(payload, args.json, [f"{result.status.upper()}: {reason}"])
        return FAILED
    report = verify_model(result.model, spec, args.ext_level)
    payload["verify"] = report.to_dict()
    doc = serialize_structure(result.model.structure)
    if args.out:
        _write(args.out, doc)
    elif not args.json:
        sys.stdout.write(doc)
    if args.json:
        payload["model"] = structure_to_dict(result.model.structure)
    summary = [f"model found (seed {result.seed}, {result.nodes} nodes, "
               f"{result.model.structure.n} elements)",
               "verify: " + ("ok" if report.ok else "FAILED"),
               "coverage: " + ", ".join(f"level {k} {v:.3f}" for k, v in sorted(report.coverage.items()))]
    summary += [f"FAIL {f}" for f in report.findings]
    if args.json:
        _emit(payload, True, [])
    else:
        print("\n".join(summary), file=sys.stdout if args.out else sys.stderr)
    return OK if report.ok else FAILED


def cmd_roundtrip(args):
    m = parse_structure(_read(args.model))
    rep = roundtrip(m, args.ext_level, args.seed, args.budget)
    lines = [f"status: {rep.status}",
             f"model found and verified: {'yes' if rep.verified else 'no'}",
             f"algebras isomorphic: {'yes' if rep.isomorphic else 'no'}",
             f"atoms: {len(rep.first.atoms)} before, "
             f"{'-' if rep.second is None else len(rep.second.atoms)} after"]
    _emit(rep.to_dict(), args.json, lines)
    return OK if rep.status == "verified-isomorphic" else FAILED


def _parse_label(alg, text):
    body = text.strip().strip("{}").strip()
    if not body:
        raise InputError(f"empty label spec {text!r}; list at least one atom id")
    try:
        ids = [int(x) for x in body.split(",")]
    except ValueError:
        raise InputError(f"label spec must be comma-separated atom ids, got {text!r}")
    return alg.label_from_atoms(ids)


def cmd_compose(args):
    alg = parse_algebra(_read(args.algebra))
    if args.closure is not None:
        if args.closure not in alg.type_ids():
            raise InputError(f"unknown type {args.closure!r}")
        closure = monoid_closure(alg, args.closure)
        closed = is_closed(alg, closure)
        k = len(alg.atoms_between(args.closure, args.closure))
        payload = {"type": args.closure, "size": len(closure), "closed": closed,
                   "full": len(closure) == 2 ** k,
                   "labels": sorted(sorted(u.atoms) for u in closure)}
        _emit(payload, args.json,
              [f"{len(closure)} elements, {'closed' if closed else 'NOT closed'}"])
        return OK if closed else FAILED
    u, w = (_parse_label(alg, x) for x in args.pair)
    if u.dst != w.src:
        raise InputError(f"cannot compose a ({u.src},{u.dst}) label with a ({w.src},{w.dst}) label")
    result = compose_labels(alg, u, w)
    _emit({"src": result.src, "dst": result.dst, "atoms": sorted(result.atoms)}, args.json,
          [str(result)])
    return OK


def build_parser():
    parser = argparse.ArgumentParser(prog="semiso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="compute the label algebra of a structure")
    p.add_argument("model")
    p.add_argument("--out", help="write the algebra document here")
    p.add_argument("--dot", help="write a Graphviz rendering here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("check", help="check complement, finiteness and table laws")
    p.add_argument("algebra")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("synth", help="search for a finite model of a spec")
    p.add_argument("spec")
    p.add_argument("--size", action="append", metavar="TYPE=N")
    p.add_argument("--ext-level", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--out", help="write the model document here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("roundtrip", help="extract, synthesize, re-extract and compare")
    p.add_argument("model")
    p.add_argument("--ext-level", type=int, default=1, choices=(0, 1, 2))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("compose", help="compose labels or close a type under composition")
    p.add_argument("algebra")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--closure", metavar="TYPE")
    group.add_argument("--pair", nargs=2, metavar=("U", "W"))
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_compose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    try:
        return args.func(args)
    except (InputError, StructureError, AlgebraError, SynthError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
