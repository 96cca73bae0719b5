"""Command-line front end.

Verdicts map to exit codes so shell pipelines can branch on mathematical
outcomes: 0 for success / true, 1 for false verdicts (not supported, not
equal, failed cover), 2 for usage errors.  --json emits machine-readable
results with a stable schema.
"""

from __future__ import annotations

import argparse
import json
import random
import sys

from . import autos, defsets, forcing, transfer, universe
from .atoms import (
    CutSpec, EqualitySpec, QuadRat, SortMismatchError, atom_key, format_atom,
    parse_atom, parse_spec, parse_value, tuple_type,
)
from .formulas import ParseError, eval_formula, parse_formula, parse_set_builder, pretty
from .universe import collapse, f_map, parse_hf, pure_sets_of_rank


def _parse_atoms(text: str, spec):
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    if not text:
        return ()
    return tuple(parse_atom(t, spec) for t in _split_top(text))


def _split_top(text: str):
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        out.append("".join(cur))
    return [t for t in (s.strip() for s in out) if t]


def _emit(args, payload, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _defset_from(args, spec):
    params = _parse_atoms(args.params, spec) if args.params else ()
    return defsets.defset(spec, args.set, params)


def cmd_eval(args) -> int:
    spec = parse_spec(args.spec)
    text = args.set if args.set is not None else sys.stdin.read()
    if text.strip().startswith("{"):
        S = defsets.defset(spec, text,
                           _parse_atoms(args.params, spec) if args.params else ())
        if args.assign is None:
            raise _Usage("membership needs --assign with one atom per coordinate")
        tup = _parse_atoms(args.assign, spec)
        verdict = defsets.member(S, tup)
    else:
        f = parse_formula(text, spec)
        xs = _parse_atoms(args.assign, spec) if args.assign else ()
        ps = _parse_atoms(args.params, spec) if args.params else ()
        verdict = eval_formula(spec, f, xs, ps)
    _emit(args, {"verdict": verdict}, "true" if verdict else "false")
    return 0 if verdict else 1


def cmd_support(args) -> int:
    spec = parse_spec(args.spec)
    S = _defset_from(args, spec)
    if args.check is not None:
        base = _parse_atoms(args.check, spec)
        ok = defsets.support_check(S, base)
        payload = {"supports": ok,
                   "tuple": [format_atom(a) for a in base]}
        if not ok:
            w = defsets.split_witness(S, base)
            payload["split"] = {
                "member": [format_atom(a) for a in w[0]],
                "non_member": [format_atom(a) for a in w[1]]}
            _emit(args, payload,
                  f"not a support: {tuple(map(format_atom, w[0]))} is in the set, "
                  f"{tuple(map(format_atom, w[1]))} is not, same pattern")
        else:
            _emit(args, payload, "supports the set")
        return 0 if ok else 1
    support, cert = defsets.minimal_support(S)
    names = [format_atom(a) for a in sorted(support, key=atom_key)]
    payload = {"minimal_support": names, "orbits": len(cert.patterns)}
    _emit(args, payload, "{" + ", ".join(names) + "}")
    return 0


def cmd_orbits(args) -> int:
    spec = parse_spec(args.spec)
    if args.set is not None:
        S = _defset_from(args, spec)
        support, cert = defsets.minimal_support(S)
        payload = {"orbits": len(cert.patterns),
                   "support": [format_atom(a) for a in cert.support]}
        _emit(args, payload, str(len(cert.patterns)))
        return 0
    n = args.arity
    count = defsets.orbit_count(spec, n)
    _emit(args, {"arity": n, "orbits": count}, str(count))
    return 0


def cmd_typeof(args) -> int:
    spec = parse_spec(args.spec)
    t1 = _parse_atoms(args.tuples[0], spec)
    p1 = tuple_type(spec, t1)
    if len(args.tuples) == 1:
        _emit(args, {"pattern": repr(p1)}, repr(p1))
        return 0
    t2 = _parse_atoms(args.tuples[1], spec)
    p2 = tuple_type(spec, t2)
    same = p1 == p2
    _emit(args, {"equal": same}, "equal" if same else "different")
    return 0 if same else 1


def cmd_extend(args) -> int:
    spec = parse_spec(args.spec)
    src = _parse_atoms(args.src, spec)
    dst = _parse_atoms(args.dst, spec)
    try:
        pi = autos.extend_partial(spec, src, dst)
    except autos.TypeMismatchError as exc:
        _emit(args, {"error": str(exc)}, f"type mismatch: {exc}")
        return 1
    payload = {"map": pi.to_json()}
    if args.probe:
        probes = _parse_atoms(args.probe, spec)
        payload["probes"] = [[format_atom(a), format_atom(pi.apply_atom(a))]
                             for a in probes]
    _emit(args, payload, str(pi))
    return 0


def cmd_absorb(args) -> int:
    spec = parse_spec(args.spec)
    fix = _parse_atoms(args.fix, spec) if args.fix else ()
    move = _parse_atoms(args.move, spec)
    pi = autos.absorb(spec, fix, move)
    images = [[format_atom(a), format_atom(pi.apply_atom(a))] for a in move]
    ok = all(pi.apply_atom(a) == a for a in fix)
    payload = {"map": pi.to_json(), "images": images, "fixes": ok}
    _emit(args, payload,
          "; ".join(f"{a} -> {b}" for a, b in images)
          + (f"; fixes {args.fix}" if args.fix else ""))
    return 0


def cmd_mutual_symmetry(args) -> int:
    a = parse_spec(args.spec_a)
    b = parse_spec(args.spec_b)
    v = defsets.mutual_symmetry(a, b)
    payload = {"verdict": v.verdict,
               "support_ab": None if v.support_ab is None
               else [format_atom(x) for x in v.support_ab],
               "support_ba": None if v.support_ba is None
               else [format_atom(x) for x in v.support_ba]}
    human = v.verdict
    if v.verdict == "mutually-symmetric":
        human += (f" with supports ({', '.join(map(format_atom, v.support_ab))})"
                  f" and ({', '.join(map(format_atom, v.support_ba))})")
    _emit(args, payload, human)
    return 0 if v.verdict == "mutually-symmetric" else 1


def _parse_dense(spec_text: str, scenario):
    kind, _, rest = spec_text.partition(":")
    if kind == "dom":
        return forcing.DomainAt(int(rest))
    if kind == "ran":
        return forcing.RangeAt(parse_atom(rest, scenario.spec))
    raise _Usage(f"dense sets are dom:<index> or ran:<atom>, got {spec_text!r}")


def cmd_forcing(args) -> int:
    scenario = _load_scenario(args.scenario)
    rng = random.Random(args.seed)
    dense = [_parse_dense(d, scenario) for d in args.dense or []]
    frag = forcing.build_generic(forcing.empty_condition(scenario), dense)
    trace = {"scenario": scenario.name, "fragment": frag.to_json(),
             "f": {str(k): format_atom(v)
                   for k, v in sorted(forcing.eval_name_f(frag).items())},
             "homogeneity": None}
    if args.pairs:
        ok = 0
        for _ in range(args.pairs):
            p = _random_condition(scenario, rng)
            q = _random_condition(scenario, rng)
            sigma = forcing.almost_homog_witness(p, q)
            if forcing.compatible(sigma.apply_condition(p), q):
                ok += 1
        trace["homogeneity"] = {"pairs": args.pairs, "verified": ok}
    human = [f"fragment union: {frag.union}"]
    if trace["homogeneity"]:
        human.append(f"homogeneity witnesses verified: "
                     f"{trace['homogeneity']['verified']}/{args.pairs}")
    _emit(args, trace, "\n".join(human))
    if args.pairs and trace["homogeneity"]["verified"] != args.pairs:
        return 1
    return 0


def _random_condition(scenario, rng, max_n: int = 3):
    p = forcing.empty_condition(scenario)
    for i in sorted(rng.sample(range(8), rng.randint(0, max_n))):
        cands = forcing._slot_candidates(p, i, 4)
        if cands:
            p = forcing.condition(scenario, {**p.mapping(), i: rng.choice(cands)})
    return p


def _load_scenario(name_or_file: str):
    import os
    if os.path.exists(name_or_file):
        with open(name_or_file) as fh:
            return transfer.scenario_from_config(json.load(fh))
    return transfer.get_scenario(name_or_file)


def cmd_cover_check(args) -> int:
    scenario = _load_scenario(args.scenario)
    report = transfer.check_cover(scenario, args.budget, args.seed)
    human = [f"{report.scenario}: {'PASS' if report.passed else 'FAIL'}"]
    for rep in (report.a, report.b, report.c):
        line = f"  {rep.name}: {'pass' if rep.passed else 'FAIL'}"
        if rep.trials:
            line += f" ({rep.witnesses}/{rep.trials} witnesses)"
        if rep.counterexample:
            line += f" counterexample: {rep.counterexample}"
        human.append(line)
    _emit(args, report.to_json(), "\n".join(human))
    return 0 if report.passed else 1


def cmd_vstar(args) -> int:
    spec = parse_spec(args.spec) if args.spec else None
    x = parse_hf(args.hf, spec)
    if not universe.is_pure(x):
        _emit(args, {"error": "not a pure set"}, "not a pure set")
        return 1
    v = f_map(x)
    back = collapse(v, {})
    ok = back == x
    _emit(args, {"roundtrip": ok, "input": str(x), "back": str(back)},
          f"roundtrip {'ok' if ok else 'FAILED'}: {x}")
    return 0 if ok else 1


def cmd_selftest(args) -> int:
    rng = random.Random(args.seed)
    results = []

    def check(name, fn):
        try:
            fn()
            results.append((name, True, ""))
        except Exception as exc:  # noqa: BLE001 - report and continue
            results.append((name, False, f"{type(exc).__name__}: {exc}"))

    def orbit_counts():
        eq, dlo = EqualitySpec(), parse_spec("dlo")
        assert [defsets.orbit_count(eq, n) for n in range(1, 5)] == [1, 2, 5, 15]
        assert [defsets.orbit_count(dlo, n) for n in range(1, 5)] == [1, 3, 13, 75]

    def support_example():
        S = defsets.defset(parse_spec("dlo"), "{(x): 0<x & x<=5/2 | 3<=x}")
        support, _ = defsets.minimal_support(S)
        assert sorted(format_atom(a) for a in support) == ["0", "3", "5/2"]

    def interpolation():
        q2 = parse_spec("dloq2")
        pi = autos.extend_partial(
            q2, _parse_atoms("(1,3)", q2), _parse_atoms("(2,7)", q2))
        assert pi.apply_value(QuadRat.of(2)) == QuadRat.of(9) / QuadRat.of(2)
        sigma = autos.absorb(q2, _parse_atoms("(0)", q2), _parse_atoms("(sqrt2)", q2))
        img = sigma.apply_atom(parse_atom("sqrt2", q2))
        assert img.value.is_rational

    def vstar_roundtrip():
        for x in pure_sets_of_rank(4):
            assert collapse(f_map(x), {}) == x

    def forcing_lab():
        s = transfer.get_scenario("R_vs_Q")
        dense = [forcing.DomainAt(i) for i in range(4)]
        dense.append(forcing.RangeAt(parse_atom("sqrt2", s.spec)))
        frag = forcing.build_generic(forcing.empty_condition(s), dense)
        forcing.eval_name_f(frag)
        p, q = (_random_condition(s, rng) for _ in range(2))
        sigma = forcing.almost_homog_witness(p, q)
        assert forcing.compatible(sigma.apply_condition(p), q)

    def covers():
        for name in ("R_vs_Q", "FFM"):
            rep = transfer.check_cover(transfer.get_scenario(name),
                                       args.budget, args.seed)
            assert rep.passed, name
        rep = transfer.check_cover(transfer.get_scenario("Broken_bounded"),
                                   args.budget, args.seed)
        assert not rep.c.passed and rep.c.counterexample is not None

    check("orbit counts match the closed forms", orbit_counts)
    check("interval set has its three-point support", support_example)
    check("interpolation and absorption examples", interpolation)
    check("pure-set encoding round trip", vstar_roundtrip)
    check("forcing lab: generic fragment and homogeneity", forcing_lab)
    check("cover reports incl. designed failure", covers)

    payload = {"results": [{"name": n, "passed": p, "error": e}
                           for n, p, e in results]}
    lines = [f"[{'pass' if p else 'FAIL'}] {n}" + (f" -- {e}" if e else "")
             for n, p, e in results]
    _emit(args, payload, "\n".join(lines))
    return 0 if all(p for _, p, _ in results) else 1


class _Usage(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="orbitlab",
        description="decision procedures and a forcing lab for "
                    "finitely-supported sets over structured atoms")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, spec=True):
        if spec:
            p.add_argument("--spec", required=True,
                           help="structure literal, e.g. dlo, eq, dloq2, "
                                "qprime, dlo[c=0], sum(dloq2,star,dlo)")
        p.add_argument("--json", action="store_true")
        return p

    p = common(sub.add_parser("eval", help="evaluate a formula or membership"))
    p.add_argument("set", nargs="?", help="formula or {(x): ...}; stdin if omitted")
    p.add_argument("--params", help="parameter atoms, comma separated")
    p.add_argument("--assign", help="values for the variables")
    p.set_defaults(fn=cmd_eval)

    p = common(sub.add_parser("support", help="minimal support of a definable set"))
    p.add_argument("set")
    p.add_argument("--params")
    p.add_argument("--check", help="verify this tuple instead of minimizing")
    p.set_defaults(fn=cmd_support)

    p = common(sub.add_parser("orbits", help="orbit counts"))
    p.add_argument("set", nargs="?")
    p.add_argument("--params")
    p.add_argument("--arity", type=int)
    p.set_defaults(fn=cmd_orbits)

    p = common(sub.add_parser("typeof", help="compare tuple types"))
    p.add_argument("tuples", nargs="+")
    p.set_defaults(fn=cmd_typeof)

    p = common(sub.add_parser("extend", help="map one tuple onto another"))
    p.add_argument("--src", required=True)
    p.add_argument("--dst", required=True)
    p.add_argument("--probe")
    p.set_defaults(fn=cmd_extend)

    p = common(sub.add_parser("absorb", help="move atoms into the rationals"))
    p.add_argument("--fix")
    p.add_argument("--move", required=True)
    p.set_defaults(fn=cmd_absorb)

    p = common(sub.add_parser("mutual-symmetry",
                              help="do two structures generate the same "
                                   "symmetric universe"), spec=False)
    p.add_argument("spec_a")
    p.add_argument("spec_b")
    p.set_defaults(fn=cmd_mutual_symmetry)

    p = common(sub.add_parser("forcing", help="run the forcing lab"), spec=False)
    p.add_argument("--scenario", required=True)
    p.add_argument("--dense", action="append",
                   help="dom:<index> or ran:<atom>; repeatable")
    p.add_argument("--pairs", type=int, default=0,
                   help="almost-homogeneity trials")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_forcing)

    p = common(sub.add_parser("cover-check", help="verify cover conditions"),
               spec=False)
    p.add_argument("--scenario", required=True, help="catalogue name or config file")
    p.add_argument("--budget", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_cover_check)

    p = common(sub.add_parser("vstar", help="pure-set encoding round trip"),
               spec=False)
    p.add_argument("hf", help="HF literal, e.g. {{},{{}}}")
    p.add_argument("--spec")
    p.set_defaults(fn=cmd_vstar)

    p = common(sub.add_parser("selftest", help="run the built-in checks"),
               spec=False)
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(fn=cmd_selftest)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except _Usage as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, SortMismatchError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
