"""Command-line interface: ``qam <command> FILE ...``.

FILE is a path to a protocol file or the name of a bundled protocol
(``teleport``, ``swap-net``, ...).  Reports go to stdout as JSON; errors go to
stderr with exit status 2.  ``check`` and ``refine`` exit 1 on a negative
verdict.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

from . import protocols
from .circuit import compile_config
from .emit import emit_dot, emit_json, state_hash
from .engine import Budget, explore, run
from .netext import Policy, extended_successors, path_success_rate
from .safety import check_well_formed, monitor_no_cloning, verify_non_relocation
from .simulate import parse_inputs, region_state, simulate
from .syntax import load
from .terms import QamError, Rated, label_key, show_label
from .traces import likeliness_refines, trace_refines


def _load(name: str):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if os.path.exists(name):
            pf = load(name)
        elif name.removesuffix(".qam") in protocols.NAMES:
            pf = protocols.load(name)
        else:
            raise QamError(f"no such protocol file: {name}")
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    return pf


def _budget(args) -> Budget:
    return Budget(max_depth=args.depth, max_replications=getattr(args, "max_repl", 2),
                  decohere=getattr(args, "decohere", False), split=getattr(args, "split", False))


def _successors(pf, budget):
    return extended_successors(pf.network, budget) if pf.network is not None else None


def cmd_run(args) -> int:
    pf = _load(args.file)
    budget = _budget(args)
    for t in run(pf.config, budget, _successors(pf, budget)):
        print(json.dumps({"rule": t.rule.name, "label": show_label(t.label),
                          "source": state_hash(t.source), "target": state_hash(t.target)},
                         sort_keys=True))
    return 0


def cmd_explore(args) -> int:
    pf = _load(args.file)
    budget = _budget(args)
    g = explore(pf.config, budget, _successors(pf, budget))
    with open(args.dot, "w", encoding="utf-8") as fh:
        fh.write(emit_dot(g))
    print(emit_json({"states": len(g.states), "edges": len(g.edges),
                     "terminal": len(g.terminal_states()), "truncated": g.truncated}))
    return 0


def cmd_check(args) -> int:
    pf = _load(args.file)
    every = not (args.no_cloning or args.non_relocation or args.well_formed)
    budget = _budget(args)
    report, ok = {}, True
    if every or args.well_formed:
        wf = check_well_formed(pf.config)
        report["well_formed"] = {"ok": wf.ok, "violations": wf.violations}
        ok &= wf.ok
    if every or args.no_cloning or args.non_relocation:
        g = explore(pf.config, budget, _successors(pf, budget))
        report["states"], report["truncated"] = len(g.states), g.truncated
    if every or args.no_cloning:
        bad = []
        for src, dst, t in g.edges:
            for term, before, after in monitor_no_cloning(t).violations:
                bad.append({"edge": [src, dst], "term": term, "before": before, "after": after})
        report["no_cloning"] = {"ok": not bad, "transitions": len(g.edges), "violations": bad}
        ok &= not bad
    if every or args.non_relocation:
        witnesses, violations, failures = [], [], []
        for s in range(len(g.states)):
            r = verify_non_relocation(g.path_to(s))
            witnesses += [w for w in r.witnesses if w not in witnesses]
            violations += [v for v in r.violations if v not in violations]
            failures += [f for f in r.reconstruction_failures if f not in failures]
        report["non_relocation"] = {"ok": not violations, "witnesses": witnesses,
                                    "violations": violations,
                                    "reconstruction_failures": failures}
        ok &= not violations
    report["ok"] = ok
    print(emit_json(report))
    return 0 if ok else 1


def cmd_routes(args) -> int:
    pf = _load(args.file)
    if pf.network is None:
        raise QamError(f"{args.file} has no network block")
    spec = pf.network.with_policy(Policy(args.policy, args.agg))
    budget = _budget(args)
    g = explore(pf.config, budget, extended_successors(spec, budget))
    rated = {t.label for _, _, t in g.edges if isinstance(t.label, Rated)}
    paths = []
    for s in g.terminal_states():
        labels = [t.label for t in g.path_to(s) if isinstance(t.label, Rated)]
        paths.append({"labels": labels, "success_rate": path_success_rate(labels)})
    print(emit_json({"policy": args.policy, "aggregation": args.agg,
                     "transitions": sorted(rated, key=label_key), "paths": paths,
                     "states": len(g.states)}))
    return 0


def cmd_refine(args) -> int:
    pf1, pf2 = _load(args.file1), _load(args.file2)
    budget = _budget(args)
    if args.likeliness:
        net1 = pf1.network or pf2.network
        net2 = pf2.network or pf1.network
        if net1 is None:
            raise QamError("likeliness refinement needs a network block")
        spec1 = net1.with_policy(Policy(args.policy1 or net1.policy.kind, args.agg1))
        spec2 = net2.with_policy(Policy(args.policy2 or net2.policy.kind, args.agg2))
        r = likeliness_refines(spec1, pf1.config, spec2, pf2.config, budget)
    else:
        r = trace_refines(pf1.config, pf2.config, budget,
                          _successors(pf1, budget), _successors(pf2, budget))
    print(emit_json({"refines": r.holds, "witness": r.witness, "depth": r.depth,
                     "bounded": True, "complete": r.complete}))
    return 0 if r.holds else 1


def cmd_compile(args) -> int:
    pf = _load(args.file)
    prog = compile_config(pf.config, bandwidth=args.bandwidth,
                          strict_paper_gates=args.strict_paper_gates, layout=pf.layout)
    text = prog.to_text()
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _amps(vec):
    return [[round(float(z.real), 12) + 0.0, round(float(z.imag), 12) + 0.0] for z in vec]


def cmd_simulate(args) -> int:
    pf = _load(args.file)
    prog = compile_config(pf.config, bandwidth=args.bandwidth,
                          strict_paper_gates=args.strict_paper_gates, layout=pf.layout)
    branches = simulate(prog, parse_inputs(args.input))
    out = []
    for b in branches:
        regions = {}
        for key, (start, length) in sorted(prog.layout.regions.items()):
            vec = region_state(b.state, prog.total_qubits, range(start, start + length))
            regions[key] = None if vec is None else _amps(vec)
        out.append({"probability": round(b.prob, 12),
                    "bits": {k: "".join(map(str, v)) for k, v in sorted(b.bits.items())},
                    "transcript": [list(e) for e in b.transcript], "regions": regions})
    print(emit_json({"qubits": prog.total_qubits, "branches": out}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qam", description="Quantum abstract machine toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def budget_flags(sp, depth=12):
        sp.add_argument("--depth", type=int, default=depth)
        sp.add_argument("--max-repl", dest="max_repl", type=int, default=2)

    sp = sub.add_parser("run", help="deterministic run, one JSON line per transition")
    sp.add_argument("file")
    budget_flags(sp)
    sp.add_argument("--decohere", action="store_true")
    sp.add_argument("--split", action="store_true")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("explore", help="reachable LTS as DOT")
    sp.add_argument("file")
    sp.add_argument("--dot", required=True)
    budget_flags(sp)
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("check", help="well-formedness and safety monitors")
    sp.add_argument("file")
    sp.add_argument("--no-cloning", dest="no_cloning", action="store_true")
    sp.add_argument("--non-relocation", dest="non_relocation", action="store_true")
    sp.add_argument("--well-formed", dest="well_formed", action="store_true")
    budget_flags(sp, depth=10)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("routes", help="rated transitions under a routing policy")
    sp.add_argument("file")
    sp.add_argument("--policy", choices=("always", "qpass", "qcast"), required=True)
    sp.add_argument("--agg", choices=("sum", "product"), default="sum")
    budget_flags(sp)
    sp.set_defaults(func=cmd_routes)

    sp = sub.add_parser("refine", help="bounded (likeliness) trace refinement")
    sp.add_argument("file1")
    sp.add_argument("file2")
    sp.add_argument("--likeliness", action="store_true")
    sp.add_argument("--policy1", choices=("always", "qpass", "qcast"))
    sp.add_argument("--policy2", choices=("always", "qpass", "qcast"))
    sp.add_argument("--agg1", choices=("sum", "product"), default="sum")
    sp.add_argument("--agg2", choices=("sum", "product"), default="sum")
    budget_flags(sp, depth=8)
    sp.set_defaults(func=cmd_refine)

    for name, func, helptext in (("compile", cmd_compile, "circuit IR text"),
                                 ("simulate", cmd_simulate, "statevector oracle run")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("file")
        sp.add_argument("--bandwidth", type=int, default=1)
        sp.add_argument("--strict-paper-gates", dest="strict_paper_gates", action="store_true")
        if name == "compile":
            sp.add_argument("-o", "--output")
        else:
            sp.add_argument("--input", required=True, help="JSON object or a path to one")
        sp.set_defaults(func=func)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (QamError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
