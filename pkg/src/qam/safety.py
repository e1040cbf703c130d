"""Well-formedness and the two executable safety monitors.

Monitors audit transitions the engine already produced.  The no-cloning
monitor compares occurrence counts of quantum resource terms across one
transition.  The non-relocation check follows membranes along a path and
demands that a channel only reaches a new membrane through a decode at a
former holder followed by an encode at the new one.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .engine import Rule, Transition
from .terms import (
    Action, ChannelName, Channeled, Choice, ClassicalResidue, Configuration, Encode,
    Kind, NewChannel, Nil, OpaqueMix, QamError, QuantumResidue, Repl, SendClassical,
    Seq, is_quantum, show, subterms,
)


class PathError(QamError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    channel: str
    locations: tuple = ()
    detail: str = ""


@dataclass
class WellFormedness:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _where(config, i):
    loc = config.membranes[i].location
    return loc if loc is not None else f"#{i}"


def visible_subterms(t, quantum_residues: bool = False):
    """Subterms of ``t`` that are not below a residue constructor.

    With ``quantum_residues`` the walk does enter quantum residues, which
    carry the quantum half of a decoded content until it is recovered.
    """
    yield t
    if isinstance(t, ClassicalResidue):
        return
    if isinstance(t, QuantumResidue):
        if quantum_residues:
            yield from visible_subterms(t.inner, quantum_residues)
        return
    parts = ()
    if isinstance(t, Channeled):
        parts = (t.channel, t.payload)
    elif isinstance(t, (OpaqueMix, Choice)):
        parts = (t.left, t.right)
    elif isinstance(t, Repl):
        parts = (t.body,)
    elif isinstance(t, Seq):
        parts = (t.action, t.cont)
    elif isinstance(t, (Encode, SendClassical)):
        parts = (t.channel, t.payload)
    elif isinstance(t, Action):
        parts = (t.channel,)
    for part in parts:
        yield from visible_subterms(part, quantum_residues)


def held_channels(molecule) -> set:
    """Quantum and projective channels labelling visible parts of a molecule."""
    return {t.channel for t in visible_subterms(molecule)
            if isinstance(t, Channeled) and t.channel.kind is not Kind.CLASSICAL}


def creation_count(p, c: ChannelName) -> int:
    """Channel creations of ``c`` along any single run of ``p``."""
    if isinstance(p, Nil):
        return 0
    if isinstance(p, Choice):
        return max(creation_count(p.left, c), creation_count(p.right, c))
    if isinstance(p, Repl):
        return creation_count(p.body, c)
    hit = isinstance(p.action, NewChannel) and p.action.channel == c
    return int(hit) + creation_count(p.cont, c)


def check_well_formed(config: Configuration) -> WellFormedness:
    out = WellFormedness()
    counts: Counter = Counter()
    where: dict = {}
    for i, m in enumerate(config.membranes):
        for r in m.resources():
            for t in visible_subterms(r):
                if isinstance(t, Channeled) and t.channel.kind is not Kind.CLASSICAL:
                    counts[t.channel] += 1
                    where.setdefault(t.channel, []).append(_where(config, i))
    for ch in sorted(counts, key=lambda ch: (ch.base, ch.kind)):
        if counts[ch] > 2:
            out.violations.append(Violation("duplicate_resource_channel", show(ch),
                                            tuple(where[ch])))
    created: dict = {}
    for i, m in enumerate(config.membranes):
        for p in m.processes():
            for t in subterms(p):
                if isinstance(t, NewChannel) and isinstance(t.channel, ChannelName):
                    created.setdefault(t.channel, set()).add(i)
    resource_bases = {ch.base for ch in counts}
    for ch in sorted(created, key=lambda ch: ch.base):
        total = sum(creation_count(p, ch) for m in config.membranes for p in m.processes())
        locs = tuple(_where(config, i) for i in sorted(created[ch]))
        if total > 2:
            out.violations.append(Violation("non_unique_creation_pair", show(ch), locs,
                                            f"{total} creations"))
        elif ch.base in resource_bases:
            out.violations.append(Violation("non_unique_creation_pair", show(ch), locs,
                                            "name already labels a resource"))
    return out


# -- no-cloning ----------------------------------------------------------------

@dataclass
class CloningReport:
    violations: list = field(default_factory=list)  # (term, before, after)

    @property
    def ok(self) -> bool:
        return not self.violations


def occurrences(config: Configuration, q) -> int:
    """Copies of ``q`` anywhere in ``config``, including quantum residues.

    Classical residues are ignored: they are ordinary classical data and may
    be duplicated freely.
    """
    return sum(1 for m in config.membranes for mol in m.molecules
               for t in visible_subterms(mol, quantum_residues=True) if t == q)


def monitor_no_cloning(t: Transition) -> CloningReport:
    report = CloningReport()
    candidates = {r for m in t.source.membranes for r in m.resources() if is_quantum(r)}
    for q in sorted(candidates, key=show):
        before, after = occurrences(t.source, q), occurrences(t.target, q)
        if after > before:
            report.violations.append((q, before, after))
    return report


# -- non-relocation ----------------------------------------------------------------

@dataclass(frozen=True)
class Relocation:
    channel: ChannelName
    source: str
    target: str
    decode_step: Optional[int]
    encode_step: int


@dataclass
class RelocationReport:
    witnesses: list = field(default_factory=list)
    violations: list = field(default_factory=list)
    reconstruction_failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _check_connected(path):
    for k in range(len(path) - 1):
        if path[k].target != path[k + 1].source:
            raise PathError(f"path is disconnected between steps {k} and {k + 1}")


def membrane_ids(path) -> list:
    """Stable identities of membranes along a path, one list per state."""
    _check_connected(path)
    if not path:
        return []
    ids = [list(range(len(path[0].source.membranes)))]
    fresh = len(ids[0])
    for t in path:
        prev = ids[-1]
        nxt: list = [None] * len(t.target.membranes)
        for i, j in enumerate(t.membrane_map):
            if j is not None:
                nxt[j] = prev[i]
        for j in range(len(nxt)):
            if nxt[j] is None:
                nxt[j] = fresh
                fresh += 1
        ids.append(nxt)
    return ids


def _holding(config, ids) -> dict:
    """Channel -> membrane ids holding a visible party of it.

    Processes count: a party moved into a process by a local substitution is
    still inside the same membrane.
    """
    out: dict = {}
    for i, m in enumerate(config.membranes):
        for mol in m.molecules:
            for ch in held_channels(mol):
                out.setdefault(ch, set()).add(ids[i])
    return out


def _mentions(term, ch) -> bool:
    return any(isinstance(s, ChannelName) and s == ch for s in subterms(term))


def verify_non_relocation(path: list) -> RelocationReport:
    report = RelocationReport()
    if not path:
        return report
    ids = membrane_ids(path)
    states = [path[0].source] + [t.target for t in path]
    holding = [_holding(c, i) for c, i in zip(states, ids)]
    names = {}
    for c, i in zip(states, ids):
        for j, m in enumerate(c.membranes):
            names.setdefault(i[j], m.location if m.location is not None else f"#{i[j]}")
    ever: dict = {}
    for ch, who in holding[0].items():
        ever.setdefault(ch, set()).update(who)
    decodes = []  # (step, decoder id, content)
    for k, t in enumerate(path):
        if t.rule is Rule.DECODE:
            decodes.append((k, ids[k][t.parties[0]], t.label.content))
        for ch, who in sorted(holding[k + 1].items(), key=lambda kv: show(kv[0])):
            before = holding[k].get(ch, set())
            for q in sorted(who - before):
                former = ever.get(ch, set()) - {q}
                if not former:
                    continue
                actor = ids[k][t.parties[0]] if t.parties else None
                dec = next(((s, d) for s, d, content in reversed(decodes)
                            if d in former and _mentions(content, ch)), None)
                if t.rule is Rule.ENCODE and actor == q and dec is not None:
                    report.witnesses.append(Relocation(ch, names[dec[1]], names[q], dec[0], k))
                else:
                    report.violations.append(Violation(
                        "relocation_without_decode" if dec is None else "relocation_without_encode",
                        show(ch), (names[min(former)], names[q]), f"step {k}"))
        for ch, who in holding[k + 1].items():
            ever.setdefault(ch, set()).update(who)
        if t.rule is Rule.ENCODE:
            for m in t.target.membranes:
                for r in m.resources():
                    for s in subterms(r):
                        if isinstance(s, OpaqueMix):
                            for _, _, content in decodes:
                                for ch in {x for x in subterms(content) if isinstance(x, ChannelName)}:
                                    if _mentions(s, ch):
                                        report.reconstruction_failures.append((show(ch), k))
    return report


# -- party ledger -------------------------------------------------------------------

@dataclass
class Party:
    channel: ChannelName
    index: int
    membrane: int
    birth: Optional[int]  # None when present in the initial state
    death: Optional[int] = None


def resource_ledger(path: list) -> list:
    """Birth and death steps of every top-level quantum channel party."""
    ids = membrane_ids(path)
    if not path:
        return []
    states = [path[0].source] + [t.target for t in path]

    def parties(config, idmap):
        out = Counter()
        for i, m in enumerate(config.membranes):
            for r in m.resources():
                if isinstance(r, Channeled) and r.channel.kind is Kind.QUANTUM:
                    out[(r.channel, idmap[i])] += 1
        return out

    ledger, alive = [], {}
    counter = Counter()

    def born(key, step):
        ch, mid = key
        p = Party(ch, counter[ch], mid, step)
        counter[ch] += 1
        ledger.append(p)
        alive.setdefault(key, []).append(p)

    for key, n in parties(states[0], ids[0]).items():
        for _ in range(n):
            born(key, None)
    prev = parties(states[0], ids[0])
    for k in range(len(path)):
        now = parties(states[k + 1], ids[k + 1])
        for key in set(prev) | set(now):
            diff = now[key] - prev[key]
            for _ in range(max(diff, 0)):
                born(key, k)
            for _ in range(max(-diff, 0)):
                alive[key].pop(0).death = k
        prev = now
    return ledger
