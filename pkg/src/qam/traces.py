"""Bounded trace sets and trace refinement.

A trace is the sequence of observable labels along a run; silent steps leave
no symbol.  Everything here is bounded by ``Budget.max_depth`` counted in
transitions, so every verdict is a bounded verdict.  ``complete`` is false
when some run was cut off by the bound.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional

from .engine import Budget, enumerate_transitions
from .netext import NetworkError, NetworkSpec, extended_successors
from .terms import Rated, canonical, label_key, show_label


@dataclass(frozen=True)
class TraceSet:
    traces: frozenset
    depth: int
    complete: bool

    def __contains__(self, trace) -> bool:
        trace = tuple(trace)
        if all(isinstance(x, str) for x in trace):
            return trace in self.strings()
        return trace in self.traces

    def __len__(self):
        return len(self.traces)

    def strings(self) -> set:
        return {tuple(show_label(lab) for lab in t) for t in self.traces}

    def sorted(self) -> list:
        return sorted(self.traces, key=trace_key)


def trace_key(trace) -> tuple:
    return (len(trace), tuple(label_key(lab) for lab in trace))


def show_trace(trace) -> str:
    return "[" + ", ".join(show_label(lab) for lab in trace) + "]" if trace else "eps"


@dataclass(frozen=True)
class RefinementResult:
    holds: bool
    witness: Optional[tuple]
    depth: int
    complete: bool

    def __bool__(self):
        return self.holds


def _observe_all(t):
    return t.label if t.observable else None


def _observe_rated(include_classical: bool):
    def observe(t):
        if isinstance(t.label, Rated):
            return t.label
        if include_classical and t.observable:
            return t.label
        return None
    return observe


def _memo(successors):
    cache: dict = {}

    def succ(c):
        if c not in cache:
            cache[c] = successors(c)
        return cache[c]
    return succ


def _default_successors(budget):
    def successors(c):
        return enumerate_transitions(c, budget)
    return successors


def _collect(config, depth: int, successors: Callable, observe: Callable) -> TraceSet:
    succ = _memo(successors)
    cut = [False]

    @lru_cache(maxsize=None)
    def traces(c, remaining: int) -> frozenset:
        ts = succ(c)
        if remaining == 0:
            if ts:
                cut[0] = True
            return frozenset({()})
        out = {()}
        for t in ts:
            lab = observe(t)
            for rest in traces(t.target, remaining - 1):
                out.add(rest if lab is None else (lab,) + rest)
        return frozenset(out)

    result = traces(canonical(config), depth)
    return TraceSet(result, depth, not cut[0])


def trace_set(config, budget: Budget = Budget(), successors=None) -> TraceSet:
    """Observable label sequences of runs of at most ``budget.max_depth`` steps."""
    successors = successors or _default_successors(budget)
    return _collect(config, budget.max_depth, successors, _observe_all)


def likeliness_trace_set(config, spec: NetworkSpec, budget: Budget = Budget(),
                         include_classical: bool = False) -> TraceSet:
    """Trace set of the extended system keeping only rated labels."""
    return _collect(config, budget.max_depth, extended_successors(spec, budget),
                    _observe_rated(include_classical))


def trace_refines(c1, c2, budget: Budget = Budget(), successors1=None, successors2=None,
                  depth2: Optional[int] = None) -> RefinementResult:
    """Whether every bounded trace of ``c1`` is a bounded trace of ``c2``.

    Runs of ``c1`` are explored one state at a time against the set of
    ``c2`` states reachable on the same trace (closed under silent steps),
    in the manner of a refinement checker.  Breadth-first order makes the
    witness one with the fewest ``c1`` transitions.  ``c2`` runs are bounded
    by ``depth2``, which defaults to the same depth.
    """
    depth = budget.max_depth
    depth2 = depth if depth2 is None else depth2
    succ1 = _memo(successors1 or _default_successors(budget))
    succ2 = _memo(successors2 or _default_successors(budget))
    complete = True

    def close(frontier: dict) -> frozenset:
        nonlocal complete
        best = dict(frontier)
        stack = list(frontier.items())
        while stack:
            s, k = stack.pop()
            if best.get(s, k) < k:
                continue
            ts = succ2(s)
            if k == depth2:
                complete = complete and not ts
                continue
            for t in ts:
                if _observe_all(t) is None and best.get(t.target, depth2 + 1) > k + 1:
                    best[t.target] = k + 1
                    stack.append((t.target, k + 1))
        return frozenset(best.items())

    def after(macro: frozenset, lab) -> dict:
        out: dict = {}
        for s, k in macro:
            if k == depth2:
                continue
            for t in succ2(s):
                if _observe_all(t) == lab and out.get(t.target, depth2 + 1) > k + 1:
                    out[t.target] = k + 1
        return out

    start = (canonical(c1), 0, close({canonical(c2): 0}))
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (s1, k1, macro), trace = queue.popleft()
        ts = succ1(s1)
        if k1 == depth:
            complete = complete and not ts
            continue
        for t in ts:
            lab = _observe_all(t)
            if lab is None:
                nxt, ntrace = (t.target, k1 + 1, macro), trace
            else:
                ntrace = trace + (lab,)
                frontier = after(macro, lab)
                if not frontier:
                    return RefinementResult(False, ntrace, depth, complete)
                nxt = (t.target, k1 + 1, close(frontier))
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, ntrace))
    return RefinementResult(True, None, depth, complete)


def likeliness_order(s1, s2) -> bool:
    """Pointwise rate domination with identical endpoints and equal length.

    Labels other than rated ones (present only when classical labels are
    kept) must match exactly.
    """
    if len(s1) != len(s2):
        return False
    for a, b in zip(s1, s2):
        if isinstance(a, Rated) and isinstance(b, Rated):
            if (a.src, a.dst) != (b.src, b.dst) or a.rate > b.rate:
                return False
        elif a != b:
            return False
    return True


def _skeleton(trace) -> tuple:
    return tuple((lab.src, lab.dst) if isinstance(lab, Rated) else lab for lab in trace)


def likeliness_refines(spec1: NetworkSpec, c1, spec2: NetworkSpec, c2,
                       budget: Budget = Budget(),
                       include_classical: bool = False) -> RefinementResult:
    """Every likeliness trace of system 1 is dominated by one of system 2."""
    if spec1.theta != spec2.theta or spec1.intentions != spec2.intentions:
        raise NetworkError("likeliness refinement needs the same rate graph and intention map")
    s1 = likeliness_trace_set(c1, spec1, budget, include_classical)
    s2 = likeliness_trace_set(c2, spec2, budget, include_classical)
    groups: dict = {}
    for trace in s2.traces:
        groups.setdefault(_skeleton(trace), []).append(trace)
    complete = s1.complete and s2.complete
    for trace in s1.sorted():
        if not any(likeliness_order(trace, other) for other in groups.get(_skeleton(trace), ())):
            return RefinementResult(False, trace, budget.max_depth, complete)
    return RefinementResult(True, None, budget.max_depth, complete)
