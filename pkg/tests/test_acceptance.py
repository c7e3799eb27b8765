"""Exit criteria.  Every check is exact; run with ``pytest -s`` to see the
PASS/FAIL line printed for each criterion, or run this file directly."""

import dataclasses
import os
import subprocess
import sys
import time

import pytest

from semiso.algebra import (
    check_proposition,
    complement_label,
    compose_labels,
    extract_algebra,
    is_closed,
    iter_bits,
    monoid_closure,
    serialize_algebra,
)
from semiso.cli import main
from semiso.corpus import fixture_path, load_spec, load_structure
from semiso.orbits import automorphisms_bruteforce, find_automorphisms
from semiso.structure import relation_compose
from semiso.synth import SynthSpec, roundtrip, synthesize, validate_spec, verify_model

FIXTURES = ["point", "p3", "c5", "dicycle3", "petersen"]


def _line(number, title, ok, detail=""):
    print(f"[{'PASS' if ok else 'FAIL'}] AC{number} {title}" + (f": {detail}" if detail else ""))
    return ok


def criterion_1(tmp_path):
    worst = 0.0
    failures = []
    for name in FIXTURES:
        start = time.perf_counter()
        alg = extract_algebra(load_structure(name))
        report = check_proposition(alg)
        worst = max(worst, time.perf_counter() - start)
        kinds = {c.kind for c in report.labels}
        if not report.ok or not kinds <= {"bottom", "zero", "positive"}:
            failures.append(name)
        for c in report.labels:
            ubar = complement_label(alg, c.label)
            top = alg.top(c.label.src, c.label.dst)
            if c.label.mask & ubar.mask or c.label.mask | ubar.mask != top.mask:
                failures.append(name)
    ok = not failures and worst < 1.0
    return _line(1, "proposition suite", ok, f"failures={failures} slowest={worst:.3f}s")


def criterion_2(tmp_path):
    bad = []
    for name in FIXTURES + ["paley9"]:
        alg = extract_algebra(load_structure(name))
        for p, q in alg.type_pairs():
            k = len(alg.atoms_between(p, q))
            if len(set(alg.labels(p, q))) != 2 ** k:
                bad.append((name, p, q))
    return _line(2, "finite label families of size 2^#atoms", not bad, f"bad={bad}")


def _bruteforce_closure(alg, p):
    """Fixpoint over concrete pair sets; labels are recovered only at the end."""
    rels = {alg.relation_of(u) for u in alg.labels(p, p)}
    while True:
        new = {relation_compose(r, s) for r in rels for s in rels} - rels
        if not new:
            break
        rels |= new
    return {alg.label_of_relation(r, p, p) for r in rels}


def criterion_3(tmp_path):
    bad = []
    for name in FIXTURES + ["paley9"]:
        alg = extract_algebra(load_structure(name))
        for p in alg.type_ids():
            closure = monoid_closure(alg, p)
            full = set(alg.labels(p, p))
            if not (is_closed(alg, closure) and closure <= full
                    and closure == _bruteforce_closure(alg, p)):
                bad.append((name, p))
    sizes = {name: len(monoid_closure(extract_algebra(load_structure(name)), "p"))
             for name in ("c5", "dicycle3")}
    ok = not bad and sizes == {"c5": 8, "dicycle3": 8}
    return _line(3, "monoid generated by the Boolean algebra", ok, f"bad={bad} sizes={sizes}")


def criterion_4(tmp_path):
    mismatches = 0
    checked = 0
    for name in FIXTURES:
        alg = extract_algebra(load_structure(name))
        for p, q in alg.type_pairs():
            for r in alg.type_ids():
                for u in alg.labels(p, q):
                    for w in alg.labels(q, r):
                        checked += 1
                        lhs = alg.relation_of(compose_labels(alg, u, w))
                        rhs = relation_compose(alg.relation_of(u), alg.relation_of(w))
                        mismatches += lhs != rhs
    return _line(4, "comp table agrees with brute-force composition", mismatches == 0,
                 f"{checked} label pairs, {mismatches} mismatches")


def criterion_5(tmp_path):
    start = time.perf_counter()
    bad = []
    for name in FIXTURES + ["paley9"]:
        m = load_structure(name)
        if m.n > 8:
            continue
        g = find_automorphisms(m)
        brute = automorphisms_bruteforce(m)
        if g.order != len(brute) or g.elements() != brute:
            bad.append(name)
    elapsed = time.perf_counter() - start
    return _line(5, "automorphisms equal full enumeration", not bad and elapsed < 10,
                 f"bad={bad} {elapsed:.2f}s")


def _synth(name, size, seed=0):
    spec = SynthSpec(extract_algebra(load_structure(name)))
    start = time.perf_counter()
    result = synthesize(spec, {"p": size}, ext_level=1, seed=seed)
    return spec, result, time.perf_counter() - start


def criterion_6(tmp_path):
    details = []
    ok = True
    for name, size in (("c5", 5), ("dicycle3", 3)):
        spec, result, elapsed = _synth(name, size)
        report = verify_model(result.model, spec, 1) if result.model else None
        good = (result.status == "model" and report.ok and report.coverage[1] == 1.0
                and elapsed < 10)
        ok &= good
        details.append(f"{name}:{result.status}/{elapsed:.2f}s")
    start = time.perf_counter()
    rep = roundtrip(load_structure("dicycle3"))
    elapsed = time.perf_counter() - start
    ok &= rep.status == "verified-isomorphic" and elapsed < 10
    details.append(f"dicycle3 roundtrip:{rep.status}")
    return _line(6, "theorem construction", ok, ", ".join(details))


def _complement_split(spec, model):
    alg = spec.algebra
    s = model.structure
    for a in range(s.n):
        p = model.element_types[a]
        for t in spec.types:
            col = s.colors[f"Col:{t.id}"]
            for u in alg.labels(p, t.id):
                ubar = complement_label(alg, u)

                def fiber(label):
                    out = set()
                    for i in iter_bits(label.mask):
                        if alg.atoms[i].is_equality:
                            out.add(a)
                        else:
                            out |= s.relations[spec.theta_name(i)].image(a)
                    return out

                left, right = fiber(u), fiber(ubar)
                if left & right or left | right != col:
                    return False
    return True


def criterion_7(tmp_path):
    runs = [_synth("c5", 5), _synth("dicycle3", 3), _synth("petersen", 10), _synth("paley9", 9)]
    rg = load_spec("random_graph_spec")
    runs.append((rg, synthesize(rg, {"p": 8}, seed=0), 0))
    bad = [k for k, (spec, result, _) in enumerate(runs)
           if result.model is None or not _complement_split(spec, result.model)]
    return _line(7, "theta_u and theta_ubar split every Col_q fiber", not bad,
                 f"{len(runs)} models, bad={bad}")


def criterion_8(tmp_path):
    spec = SynthSpec(extract_algebra(load_structure("c5")))
    unsat = synthesize(spec, {"p": 2}, ext_level=1).status == "unsat"
    comp = dict(spec.algebra.comp)
    comp[(0, 1)] = 0b110
    corrupted = dataclasses.replace(spec.algebra, comp=comp)
    rejected = not validate_spec(SynthSpec(corrupted)).ok
    path = tmp_path / "corrupt.json"
    path.write_text(serialize_algebra(corrupted))
    code = main(["check", str(path)])
    ok = unsat and rejected and code == 1
    return _line(8, "negative controls", ok, f"unsat={unsat} validate_rejects={rejected} check_exit={code}")


def _cli(args, hashseed):
    env = dict(os.environ, PYTHONHASHSEED=str(hashseed))
    subprocess.run([sys.executable, "-m", "semiso", *args], check=True, env=env,
                   stdout=subprocess.DEVNULL)


def criterion_9(tmp_path):
    outputs = []
    for hashseed in (1, 2):
        alg = tmp_path / f"alg{hashseed}.json"
        model = tmp_path / f"model{hashseed}.json"
        _cli(["extract", str(fixture_path("paley9")), "--out", str(alg)], hashseed)
        _cli(["synth", str(fixture_path("random_graph_spec")), "--size", "p=9", "--seed", "42",
              "--out", str(model)], hashseed)
        outputs.append((alg.read_bytes(), model.read_bytes()))
    ok = outputs[0] == outputs[1]
    return _line(9, "determinism across processes", ok)


@pytest.mark.parametrize("number", range(1, 10))
def test_acceptance(number, tmp_path):
    fn = globals()[f"criterion_{number}"]
    assert fn(tmp_path)


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    results = []
    for number in range(1, 10):
        fn = globals()[f"criterion_{number}"]
        with tempfile.TemporaryDirectory() as d:
            results.append(fn(Path(d)))
    sys.exit(0 if all(results) else 1)
