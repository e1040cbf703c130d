"""Independent reference implementations used by the tests.

Each oracle is deliberately naive: exhaustive enumeration with no sharing,
so that it shares no clever code with the library it checks.
"""
import itertools
from fractions import Fraction

from qam.engine import Budget, Rule, Transition, enumerate_transitions
from qam.terms import (
    BLANK, Blank, Channeled, ClassicalResidue, Configuration, Encode, Kind, Membrane, Name,
    OpaqueMix, QuantumResidue, SILENT, Seq, NIL, canonical, is_classical, pchan, qchan,
    term_key,
)


# -- traces ------------------------------------------------------------------------

def naive_traces(config, depth, successors=None):
    """Every observable label sequence of every run of at most ``depth`` steps."""
    succ = successors or (lambda c: enumerate_transitions(c, Budget(max_depth=depth)))
    out = set()

    def walk(c, remaining, trace):
        out.add(trace)
        if remaining == 0:
            return
        for t in succ(c):
            walk(t.target, remaining - 1, trace + ((t.label,) if t.observable else ()))

    walk(canonical(config), depth, ())
    return out


# -- forged transitions ------------------------------------------------------------

def forged_cloning_transition():
    """Substitutes one quantum resource into two payload positions at once."""
    c, c2, d = qchan("c"), qchan("c2"), pchan("d")
    q = Channeled(d, Name("e"))
    proc = Seq(Encode(c, d), Seq(Encode(c2, d), NIL))
    copied = Seq(Encode(c, q), Seq(Encode(c2, q), NIL))
    src = canonical(Configuration((Membrane((proc, q), "Alice"),)))
    dst = canonical(Configuration((Membrane((copied,), "Alice"),)))
    return Transition(Rule.QLOCAL, SILENT, src, dst, frozenset(), (0,), (0,))


def forged_relocation_path():
    """Alice's party of c turns up at Mike without any decode."""
    c = qchan("c")
    s0 = canonical(Configuration((Membrane((Channeled(c, BLANK),), "Alice"),
                                  Membrane((Channeled(c, BLANK),), "Bob"),
                                  Membrane((BLANK,), "Mike"))))
    s1 = canonical(Configuration((Membrane((BLANK,), "Alice"),
                                  Membrane((Channeled(c, BLANK),), "Bob"),
                                  Membrane((Channeled(c, BLANK),), "Mike"))))
    return [Transition(Rule.ENCODE, SILENT, s0, s1, frozenset(), (0, 1, 2), (0,))]


# -- meet rewriting ----------------------------------------------------------------

def _sorted_mix(t):
    """Commutativity-normal form: every mix has its operands in term order."""
    if isinstance(t, OpaqueMix):
        a, b = _sorted_mix(t.left), _sorted_mix(t.right)
        return OpaqueMix(*sorted((a, b), key=term_key))
    if isinstance(t, Channeled):
        return Channeled(t.channel, _sorted_mix(t.payload))
    if isinstance(t, ClassicalResidue):
        return ClassicalResidue(_sorted_mix(t.inner))
    if isinstance(t, QuantumResidue):
        return QuantumResidue(_sorted_mix(t.inner))
    return t


def _root_steps(t):
    """Left-to-right instances of the equations at the root of ``t``."""
    if isinstance(t, OpaqueMix):
        a, b = t.left, t.right
        if isinstance(a, Blank):
            yield b
        if isinstance(b, Blank):
            yield a
        for x, y in ((a, b), (b, a)):
            if (isinstance(x, Channeled) and isinstance(y, Channeled) and x.channel == y.channel
                    and x.channel.kind is Kind.PROJECTIVE
                    and isinstance(x.payload, ClassicalResidue)
                    and isinstance(y.payload, QuantumResidue)
                    and _sorted_mix(x.payload.inner) == _sorted_mix(y.payload.inner)):
                yield x.payload.inner
        if _sorted_mix(a) == _sorted_mix(b) and is_classical(a):
            yield BLANK
    if (isinstance(t, Channeled) and t.channel.kind is Kind.PROJECTIVE
            and isinstance(t.payload, OpaqueMix) and not list(steps(t.payload))):
        ops = sorted((t.payload.left, t.payload.right), key=lambda x: term_key(_sorted_mix(x)))
        for k, x in enumerate(ops):
            if isinstance(x, Channeled) and x.channel == t.channel and is_classical(x.payload):
                yield OpaqueMix(x, Channeled(t.channel, ops[1 - k]))
                break


def steps(t):
    """All one-step rewrites of ``t`` at any position."""
    yield from _root_steps(t)
    if isinstance(t, OpaqueMix):
        for x in steps(t.left):
            yield OpaqueMix(x, t.right)
        for x in steps(t.right):
            yield OpaqueMix(t.left, x)
    elif isinstance(t, Channeled):
        for x in steps(t.payload):
            yield Channeled(t.channel, x)
    elif isinstance(t, ClassicalResidue):
        for x in steps(t.inner):
            yield ClassicalResidue(x)
    elif isinstance(t, QuantumResidue):
        for x in steps(t.inner):
            yield QuantumResidue(x)


def all_normal_forms(t, limit=20000):
    """Irreducible terms reachable from ``t`` by any rewrite order."""
    seen, stack, normal = set(), [t], set()
    while stack:
        u = stack.pop()
        key = _sorted_mix(u)
        if key in seen:
            continue
        seen.add(key)
        if len(seen) > limit:
            raise RuntimeError("rewrite search too large")
        nxt = list(steps(u))
        if not nxt:
            normal.add(key)
        stack.extend(nxt)
    return normal


# -- graphs ------------------------------------------------------------------------

def all_simple_paths(edges, src, dst):
    nodes = sorted({n for g, h, _ in edges for n in (g, h)} - {src, dst})
    adj = {frozenset((g, h)) for g, h, _ in edges}
    for k in range(len(nodes) + 1):
        for mid in itertools.permutations(nodes, k):
            path = [src, *mid, dst]
            if all(frozenset(p) in adj for p in zip(path, path[1:])):
                yield path


def rate_of(edges, path, aggregation):
    rates = {frozenset((g, h)): Fraction(p) for g, h, p in edges}
    vals = [rates[frozenset(p)] for p in zip(path, path[1:])]
    if aggregation == "sum":
        return sum(vals, Fraction(0))
    out = Fraction(1)
    for v in vals:
        out *= v
    return out
