"""Located membranes, success-rate graphs and routing policies.

The extended system wraps the plain transition relation.  Transitions whose
label carries no quantum channel pass through unchanged.  Channel creation
is relabelled with the edge's success rate, and a decode that hands a
channel party to a third membrane (an entanglement swap) is relabelled with
rate 1 and the endpoints of the prolonged channel.  A policy may veto either
kind; vetoed transitions are dropped.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

from .engine import Budget, Rule, Transition, enumerate_transitions
from .terms import (
    ChannelName, Channeled, Configuration, Kind, QamError, OpaqueMix, Rated,
)


class NetworkError(QamError):
    pass


class DuplicateEdgeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class RateGraph:
    """Undirected graph of locations with channel-creation success rates."""
    edges: tuple = ()  # ((g, h, rate), ...) in insertion order

    @classmethod
    def from_edges(cls, edges, warn: bool = True) -> "RateGraph":
        seen, kept = set(), []
        for g, h, p in edges:
            p = Fraction(p)
            if g == h:
                raise NetworkError(f"self-loop at {g}")
            if not 0 <= p <= 1:
                raise NetworkError(f"rate {p} for {g}<->{h} outside [0, 1]")
            key = frozenset((g, h))
            if key in seen:
                if warn:
                    warnings.warn(f"duplicate edge {g} <-> {h}; keeping the first rate",
                                  DuplicateEdgeWarning, stacklevel=2)
                continue
            seen.add(key)
            kept.append((g, h, p))
        return cls(tuple(kept))

    @property
    def nodes(self) -> list:
        return sorted({n for g, h, _ in self.edges for n in (g, h)})

    def rate(self, g, h) -> Optional[Fraction]:
        for a, b, p in self.edges:
            if {a, b} == {g, h}:
                return p
        return None

    def neighbours(self, g) -> list:
        out = [b for a, b, _ in self.edges if a == g] + [a for a, b, _ in self.edges if b == g]
        return sorted(out)

    def with_rates(self, rates) -> "RateGraph":
        """Same topology, rates taken positionally from ``rates``."""
        return RateGraph(tuple((g, h, Fraction(p)) for (g, h, _), p in zip(self.edges, rates)))


def hop_distances(theta: RateGraph, src) -> dict:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        n = queue.popleft()
        for m in theta.neighbours(n):
            if m not in dist:
                dist[m] = dist[n] + 1
                queue.append(m)
    return dist


def shortest_path(theta: RateGraph, src, dst) -> Optional[list]:
    """Minimum-hop path; ties go to the lexicographically smallest node sequence."""
    if src == dst:
        return [src]
    to_dst = hop_distances(theta, dst)
    if src not in to_dst:
        return None
    path = [src]
    while path[-1] != dst:
        here = path[-1]
        path.append(min(n for n in theta.neighbours(here) if to_dst.get(n) == to_dst[here] - 1))
    return path


def simple_paths(theta: RateGraph, src, dst):
    stack = [(src, [src])]
    while stack:
        node, path = stack.pop()
        if node == dst:
            yield path
            continue
        for n in theta.neighbours(node):
            if n not in path:
                stack.append((n, path + [n]))


def path_score(theta: RateGraph, path, aggregation: str) -> Fraction:
    rates = [theta.rate(a, b) for a, b in zip(path, path[1:])]
    if aggregation == "sum":
        return sum(rates, Fraction(0))
    if aggregation == "product":
        out = Fraction(1)
        for p in rates:
            out *= p
        return out
    raise NetworkError(f"unknown aggregation {aggregation!r}")


def max_rate_path(theta: RateGraph, src, dst, aggregation: str = "sum") -> Optional[list]:
    """Simple path maximising the aggregated rate; ties: shorter, then lexicographic."""
    best, best_key = None, None
    for path in simple_paths(theta, src, dst):
        key = (-path_score(theta, path, aggregation), len(path), path)
        if best_key is None or key < best_key:
            best, best_key = path, key
    return best


@dataclass(frozen=True)
class Policy:
    kind: str = "always"  # always | qpass | qcast
    aggregation: str = "sum"  # qcast only: sum | product

    def __post_init__(self):
        if self.kind not in ("always", "qpass", "qcast"):
            raise NetworkError(f"unknown policy {self.kind!r}")
        if self.aggregation not in ("sum", "product"):
            raise NetworkError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class NetworkSpec:
    theta: RateGraph = field(default_factory=RateGraph)
    xi: tuple = ()  # ((n, (g, h)), ...) sorted by n
    policy: Policy = field(default_factory=Policy)
    bindings: tuple = ()  # ((base, n), ...) sorted by base

    @property
    def intentions(self) -> dict:
        return dict(self.xi)

    def with_policy(self, policy: Policy) -> "NetworkSpec":
        return replace(self, policy=policy)

    def with_theta(self, theta: RateGraph) -> "NetworkSpec":
        return replace(self, theta=theta)


def intention(xi: dict, channel: ChannelName):
    if channel.intention is None:
        raise NetworkError(f"channel {channel.base} carries no intention ID")
    if channel.intention not in xi:
        raise NetworkError(f"intention {channel.intention} missing from the intention map")
    return xi[channel.intention]


def route(policy: Policy, theta: RateGraph, src, dst) -> Optional[list]:
    if policy.kind == "qpass":
        return shortest_path(theta, src, dst)
    return max_rate_path(theta, src, dst, policy.aggregation)


def policy_eval(policy: Policy, xi: dict, theta: RateGraph, g, h,
                channel: ChannelName, via=None) -> bool:
    """Whether a creation (``via`` None) or prolongation through ``via`` is valid.

    A creation is valid when ``(g, h)`` is an edge of the policy's path for
    the channel's intention.  A prolongation joins two channel segments that
    meet at ``via``; it is valid when ``g``, ``via`` and ``h`` all lie on the
    path with ``via`` between the two endpoints.
    """
    src, dst = intention(xi, channel)
    if policy.kind == "always":
        return via is not None or theta.rate(g, h) is not None
    path = route(policy, theta, src, dst)
    if path is None:
        return False
    if via is None:
        return any({a, b} == {g, h} for a, b in zip(path, path[1:]))
    if not all(n in path for n in (g, h, via)):
        return False
    lo, hi = sorted((path.index(g), path.index(h)))
    return lo < path.index(via) < hi


def orient(theta: RateGraph, xi: dict, channel: ChannelName, g, h) -> tuple:
    """Order endpoints so the one nearer the intention's source comes first."""
    src, _ = intention(xi, channel)
    dist = hop_distances(theta, src)
    far = len(theta.nodes) + 1
    return tuple(sorted((g, h), key=lambda n: (dist.get(n, far), n)))


def carried_channel(mu) -> Optional[ChannelName]:
    """First quantum channel labelling ``mu`` or a channelled part of it."""
    if isinstance(mu, Channeled):
        if mu.channel.kind is Kind.QUANTUM:
            return mu.channel
        return carried_channel(mu.payload)
    if isinstance(mu, OpaqueMix):
        return carried_channel(mu.left) or carried_channel(mu.right)
    return None


def _location(config: Configuration, index: int):
    loc = config.membranes[index].location
    if loc is None:
        raise NetworkError("extended mode requires every membrane to carry a location")
    return loc


def _holders(config: Configuration, channel: ChannelName) -> list:
    return [i for i, m in enumerate(config.membranes)
            if any(isinstance(r, Channeled) and r.channel == channel for r in m.resources())]


def lift(t: Transition, spec: NetworkSpec) -> Optional[Transition]:
    """The extended-system counterpart of ``t``, or None if it is vetoed."""
    xi, theta, policy = spec.intentions, spec.theta, spec.policy
    src = t.source
    if t.rule is Rule.COHERE:
        c = t.label.channel
        g, h = (_location(src, i) for i in t.parties)
        rate = theta.rate(g, h)
        if rate is None or not policy_eval(policy, xi, theta, g, h, c):
            return None
        g, h = orient(theta, xi, c, g, h)
        return replace(t, label=Rated(rate, g, h))
    if t.rule is Rule.DECODE:
        carried = carried_channel(t.label.content)
        if carried is None:
            return t
        decoder, receiver = t.parties
        others = [i for i in _holders(src, carried) if i != decoder]
        if not others:
            return None
        g, h = _location(src, others[0]), _location(src, receiver)
        via = _location(src, decoder)
        if not policy_eval(policy, xi, theta, g, h, carried, via=via):
            return None
        g, h = orient(theta, xi, carried, g, h)
        return replace(t, label=Rated(Fraction(1), g, h))
    for i in t.parties:
        _location(src, i)
    return t


def extended_enumerate(config: Configuration, spec: NetworkSpec,
                       budget: Budget = Budget()) -> list:
    for i in range(len(config.membranes)):
        _location(config, i)
    out = []
    for t in enumerate_transitions(config, budget):
        lifted = lift(t, spec)
        if lifted is not None:
            out.append(lifted)
    return out


def extended_successors(spec: NetworkSpec, budget: Budget = Budget()):
    def successors(config):
        return extended_enumerate(config, spec, budget)
    return successors


def path_success_rate(labels) -> Fraction:
    out = Fraction(1)
    for lab in labels:
        if isinstance(lab, Rated):
            out *= lab.rate
    return out
