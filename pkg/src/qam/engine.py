"""Labelled transition system of the abstract machine.

:func:`enumerate_transitions` lists every rule instance applicable to a
canonical configuration; :func:`explore` computes the bounded reachable
graph.  Airlocks are never materialised as states: the decode rule forms the
airlock content while matching and dissolves it in its output.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .meet import meet, normalize
from .terms import (
    Blank, Chan, ChanMsg, ChannelName, Channeled, Choice, Classical, ClassicalResidue,
    Configuration, Decode, Encode, Kind, Membrane, Message, NewChannel,
    QamError, QuantumResidue, Receive, Repl, SendClassical, Seq, SILENT,
    canonical, canonical_with_map, is_classical, is_quantum,
    substitute, substitute_classical, substitute_quantum_once,
)


class ContractViolation(QamError):
    pass


class Rule(enum.IntEnum):
    COHERE = 0
    QLOCAL = 1
    CLOCAL = 2
    ENCODE = 3
    DECODE = 4
    COM = 5
    SPLIT = 6
    CHOICE_L = 7
    CHOICE_R = 8
    REPL_SPAWN = 9
    REPL_DROP = 10
    DECOHERE = 11


SILENT_RULES = frozenset(
    {Rule.QLOCAL, Rule.CLOCAL, Rule.ENCODE, Rule.SPLIT, Rule.CHOICE_L, Rule.CHOICE_R,
     Rule.REPL_SPAWN, Rule.REPL_DROP, Rule.DECOHERE})


@dataclass(frozen=True)
class Budget:
    """Bounds on exploration; the underlying system is unbounded."""
    max_depth: int = 12
    max_replications: int = 2
    decohere: bool = False
    split: bool = False
    max_states: int = 200_000

    def __post_init__(self):
        for name in ("max_depth", "max_replications", "max_states"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class Transition:
    rule: Rule
    label: object
    source: Configuration
    target: Configuration
    touched: frozenset = frozenset()
    # source membrane index -> target membrane index (None when it vanished)
    membrane_map: tuple = ()
    # membrane indices in role order (decoder first for Decode, sender first for Com)
    parties: tuple = ()

    @property
    def observable(self) -> bool:
        return self.label != SILENT


def settle(alpha: ChannelName, value: Message) -> Message:
    """Resource left behind by an encode whose content normalised to ``value``.

    A value that is already a resource (blank or channelled) stands on its
    own; anything else stays labelled by the encoding channel.
    """
    if isinstance(value, (Blank, Channeled)):
        return value
    return Channeled(alpha, value)


def encode_result(alpha: ChannelName, payload: Message, content: Message) -> Message:
    merged = meet(payload, content).value
    return settle(alpha, normalize(Channeled(alpha, merged)).value)


class _Builder:
    """Edits on a configuration's membranes, producing a canonical target."""

    def __init__(self, config: Configuration):
        self.config = config
        self.mols = [list(m.molecules) for m in config.membranes]
        self.locs = [m.location for m in config.membranes]
        self.touched = set()

    def replace(self, mi, pi, *new):
        self.touched.add((mi, pi))
        self.mols[mi][pi] = list(new)

    def remove(self, mi, pi):
        self.replace(mi, pi)

    def add(self, mi, mol):
        self.mols[mi].append([mol])

    def split_off(self, mi, pi):
        self.touched.add((mi, pi))
        mol = self.mols[mi][pi]
        self.mols[mi][pi] = []
        self.mols.append(mol if isinstance(mol, list) else [mol])
        self.locs.append(self.locs[mi])

    def build(self):
        membranes = []
        for mols, loc in zip(self.mols, self.locs):
            flat = []
            for m in mols:
                flat.extend(m if isinstance(m, list) else [m])
            membranes.append(Membrane(tuple(flat), loc))
        target, index_map = canonical_with_map(membranes)
        n = len(self.config.membranes)
        return target, tuple(index_map[:n]), tuple(index_map[n:])


def _make(rule, label, builder, parties=()):
    target, mmap, _ = builder.build()
    return Transition(rule, label, builder.config, target,
                      frozenset(builder.touched), mmap, tuple(parties))


def _heads(config):
    for mi, m in enumerate(config.membranes):
        for pi, mol in enumerate(m.molecules):
            if isinstance(mol, Seq):
                yield mi, pi, mol


def _resources(membrane):
    for ri, mol in enumerate(membrane.molecules):
        if isinstance(mol, Message):
            yield ri, mol


def _parties(membrane, channel):
    for ri, r in _resources(membrane):
        if isinstance(r, Channeled) and r.channel == channel:
            yield ri, r


def _labels_resource(config, channel):
    return any(True for m in config.membranes for _ in _parties(m, channel))


def _cohere(config):
    by_channel: dict = {}
    for mi, pi, proc in _heads(config):
        act = proc.action
        if isinstance(act, NewChannel) and isinstance(act.channel, ChannelName):
            by_channel.setdefault(act.channel, {}).setdefault(mi, pi)
    out = []
    for c in sorted(by_channel, key=lambda ch: (ch.base, ch.intention or -1)):
        members = by_channel[c]
        if len(members) != 2 or _labels_resource(config, c):
            continue
        (i, pi), (j, pj) = sorted(members.items())
        bi = next((ri for ri, r in _resources(config.membranes[i]) if isinstance(r, Blank)), None)
        bj = next((ri for ri, r in _resources(config.membranes[j]) if isinstance(r, Blank)), None)
        if bi is None or bj is None:
            continue
        b = _Builder(config)
        b.replace(i, pi, config.membranes[i].molecules[pi].cont)
        b.replace(j, pj, config.membranes[j].molecules[pj].cont)
        b.replace(i, bi, Channeled(c, Blank()))
        b.replace(j, bj, Channeled(c, Blank()))
        out.append(_make(Rule.COHERE, Chan(c), b, (i, j)))
    return out


def _qlocal(config):
    out = []
    for mi, pi, proc in _heads(config):
        act = proc.action
        if not (isinstance(act, Encode) and isinstance(act.channel, ChannelName)
                and isinstance(act.payload, ChannelName)):
            continue
        for ri, r in _parties(config.membranes[mi], act.payload):
            if not is_quantum(r):
                continue
            b = _Builder(config)
            b.replace(mi, pi, substitute_quantum_once(proc, act.payload, r))
            b.remove(mi, ri)
            out.append(_make(Rule.QLOCAL, SILENT, b, (mi,)))
    return out


def _clocal(config):
    out = []
    for mi, pi, proc in _heads(config):
        act = proc.action
        if not (isinstance(act, Receive) and isinstance(act.channel, ChannelName)
                and act.channel.kind is Kind.PROJECTIVE):
            continue
        for ri, r in _parties(config.membranes[mi], act.channel):
            if not is_classical(r):
                continue
            b = _Builder(config)
            b.replace(mi, pi, substitute_classical(proc.cont, act.var, r.payload))
            b.remove(mi, ri)
            out.append(_make(Rule.CLOCAL, SILENT, b, (mi,)))
    return out


def _encode(config):
    out = []
    for mi, pi, proc in _heads(config):
        act = proc.action
        if not (isinstance(act, Encode) and isinstance(act.channel, ChannelName)
                and act.channel.kind is not Kind.CLASSICAL
                and isinstance(act.payload, Message)):
            continue
        for ri, r in _parties(config.membranes[mi], act.channel):
            b = _Builder(config)
            b.replace(mi, pi, proc.cont)
            b.replace(mi, ri, encode_result(act.channel, act.payload, r.payload))
            out.append(_make(Rule.ENCODE, SILENT, b, (mi,)))
    return out


def _decode(config):
    out = []
    heads = list(_heads(config))
    for i, pi, dproc in heads:
        act = dproc.action
        if not (isinstance(act, Decode) and isinstance(act.channel, ChannelName)
                and act.channel.kind is Kind.QUANTUM):
            continue
        c = act.channel
        for j, pj, rproc in heads:
            ract = rproc.action
            if j == i or not (isinstance(ract, Receive) and ract.channel == c):
                continue
            for ri, r1 in _parties(config.membranes[i], c):
                for rj, r2 in _parties(config.membranes[j], c):
                    mu = meet(r1.payload, r2.payload).value
                    bar = c.bar()
                    b = _Builder(config)
                    b.replace(i, pi, substitute_classical(
                        dproc.cont, act.var, Channeled(bar, ClassicalResidue(mu))))
                    b.replace(j, pj, substitute(rproc.cont, ract.var, bar))
                    b.remove(i, ri)
                    b.replace(j, rj, Channeled(bar, QuantumResidue(mu)))
                    out.append(_make(Rule.DECODE, ChanMsg(c, mu), b, (i, j)))
    return out


def _com(config):
    out = []
    heads = list(_heads(config))
    for i, pi, sproc in heads:
        act = sproc.action
        if not (isinstance(act, SendClassical) and isinstance(act.channel, ChannelName)
                and act.channel.kind is Kind.CLASSICAL and is_classical(act.payload)):
            continue
        for j, pj, rproc in heads:
            ract = rproc.action
            if j == i or not (isinstance(ract, Receive) and ract.channel == act.channel):
                continue
            b = _Builder(config)
            b.replace(i, pi, sproc.cont)
            b.replace(j, pj, substitute_classical(rproc.cont, ract.var, act.payload))
            out.append(_make(Rule.COM, Classical(act.channel, act.payload), b, (i, j)))
    return out


def _split(config):
    out = []
    for mi, m in enumerate(config.membranes):
        if len(m.molecules) < 2:
            continue
        for pi in range(len(m.molecules)):
            b = _Builder(config)
            b.split_off(mi, pi)
            out.append(_make(Rule.SPLIT, SILENT, b, (mi,)))
    return out


def _structural(config, budget):
    choice, spawn, drop, decohere = [], [], [], []
    for mi, m in enumerate(config.membranes):
        for pi, mol in enumerate(m.molecules):
            if isinstance(mol, Choice):
                for rule, branch in ((Rule.CHOICE_L, mol.left), (Rule.CHOICE_R, mol.right)):
                    b = _Builder(config)
                    b.replace(mi, pi, branch)
                    choice.append(_make(rule, SILENT, b, (mi,)))
            elif isinstance(mol, Repl):
                if mol.spawned < budget.max_replications:
                    b = _Builder(config)
                    b.replace(mi, pi, mol.body, Repl(mol.body, mol.spawned + 1))
                    spawn.append(_make(Rule.REPL_SPAWN, SILENT, b, (mi,)))
                b = _Builder(config)
                b.remove(mi, pi)
                drop.append(_make(Rule.REPL_DROP, SILENT, b, (mi,)))
            elif isinstance(mol, Message) and budget.decohere:
                b = _Builder(config)
                b.remove(mi, pi)
                decohere.append(_make(Rule.DECOHERE, SILENT, b, (mi,)))
    return choice, spawn, drop, decohere


def enumerate_transitions(config: Configuration, budget: Budget = Budget()) -> list:
    """Every rule instance applicable to a canonical configuration."""
    if config.airlock is not None or canonical(config) != config:
        raise ContractViolation("enumerate_transitions expects a canonical configuration")
    choice, spawn, drop, decohere = _structural(config, budget)
    found = (_cohere(config) + _qlocal(config) + _clocal(config) + _encode(config)
             + _decode(config) + _com(config)
             + (_split(config) if budget.split else [])
             + choice + spawn + drop + decohere)
    out, seen = [], set()
    for t in sorted(found, key=lambda t: t.rule):  # stable: keeps match order per rule
        key = (t.rule, t.label, t.target)
        if key not in seen:
            seen.add(key)
            out.append(t)
    return out


def apply(config: Configuration, t: Transition) -> Configuration:
    if t.source != config:
        raise ContractViolation("stale transition: source does not match configuration")
    return t.target


Successors = Callable[[Configuration], list]


@dataclass
class LtsGraph:
    states: list
    edges: list  # (src index, dst index, Transition)
    initial: int = 0
    truncated: bool = False
    depth: dict = field(default_factory=dict)
    parent: dict = field(default_factory=dict)  # state -> edge index reaching it first

    def index(self, config: Configuration) -> Optional[int]:
        try:
            return self.states.index(config)
        except ValueError:
            return None

    def out_edges(self, s: int) -> list:
        return [e for e in self.edges if e[0] == s]

    def terminal_states(self) -> list:
        has_out = {e[0] for e in self.edges}
        return [i for i in range(len(self.states)) if i not in has_out]

    def path_to(self, s: int) -> list:
        """Transitions along the breadth-first spanning tree to state ``s``."""
        path = []
        while s != self.initial:
            e = self.edges[self.parent[s]]
            path.append(e[2])
            s = e[0]
        return list(reversed(path))

    def find(self, predicate) -> Optional[int]:
        return next((i for i, c in enumerate(self.states) if predicate(c)), None)


def explore(config: Configuration, budget: Budget = Budget(),
            successors: Optional[Successors] = None) -> LtsGraph:
    """Breadth-first reachable graph from ``canonical(config)`` within the budget."""
    if successors is None:
        def successors(c):
            return enumerate_transitions(c, budget)
    start = canonical(config)
    graph = LtsGraph([start], [], 0, False, {0: 0}, {})
    index = {start: 0}
    queue = deque([0])
    while queue:
        s = queue.popleft()
        ts = successors(graph.states[s])
        if graph.depth[s] >= budget.max_depth:
            if ts:
                graph.truncated = True
            continue
        for t in ts:
            dst = index.get(t.target)
            if dst is None:
                if len(graph.states) >= budget.max_states:
                    graph.truncated = True
                    continue
                dst = len(graph.states)
                index[t.target] = dst
                graph.states.append(t.target)
                graph.depth[dst] = graph.depth[s] + 1
                graph.parent[dst] = len(graph.edges)
                queue.append(dst)
            graph.edges.append((s, dst, t))
    return graph


def run(config: Configuration, budget: Budget = Budget(),
        successors: Optional[Successors] = None) -> list:
    """Deterministic run taking the first enumerated transition at every step."""
    if successors is None:
        def successors(c):
            return enumerate_transitions(c, budget)
    state, path = canonical(config), []
    for _ in range(budget.max_depth):
        ts = successors(state)
        if not ts:
            break
        path.append(ts[0])
        state = ts[0].target
    return path

