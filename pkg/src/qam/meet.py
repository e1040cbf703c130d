"""The meet operation on channel contents and its normal forms.

Equations are oriented left to right and applied innermost first.
Commutativity is handled by keeping the two operands of an irreducible meet
sorted by :func:`term_key`; the blank message is the identity.  The nested
projective rearrangement only fires on an already irreducible inner meet, and
picks the first classical operand in term order.  Both side conditions make
the system confluent; without them the equations admit distinct normal forms
(for example ``bar(c).mix(bar(c).i, bar(c).i)`` reduces either to
``bar(c).blank`` or to an irreducible mix).
"""
from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Blank, Channeled, ClassicalResidue, Kind, Message, OpaqueMix, QuantumResidue,
    is_classical, term_key,
)


@dataclass(frozen=True)
class MeetResult:
    value: Message
    reduced: bool


def _sorted_pair(a, b):
    return (a, b) if term_key(a) <= term_key(b) else (b, a)


def _recovers(a, b):
    """``bar(c).rbar(q)`` against ``bar(c).up(q)`` in either order."""
    for x, y in ((a, b), (b, a)):
        if (isinstance(x, Channeled) and isinstance(y, Channeled)
                and x.channel == y.channel and x.channel.kind is Kind.PROJECTIVE
                and isinstance(x.payload, ClassicalResidue)
                and isinstance(y.payload, QuantumResidue)
                and x.payload.inner == y.payload.inner):
            return x.payload.inner
    return None


def _meet_normal(a, b):
    """Meet of two normal messages; returns (value, reduced)."""
    if isinstance(a, Blank):
        return b, False
    if isinstance(b, Blank):
        return a, False
    q = _recovers(a, b)
    if q is not None:
        return q, True
    if a == b and is_classical(a):
        return Blank(), True
    a, b = _sorted_pair(a, b)
    return OpaqueMix(a, b), False


def _rearrange_operand(channel, mix):
    """The operand ``channel.iota`` that licenses the nested rearrangement."""
    if channel.kind is not Kind.PROJECTIVE or not isinstance(mix, OpaqueMix):
        return None
    for x, other in ((mix.left, mix.right), (mix.right, mix.left)):
        if isinstance(x, Channeled) and x.channel == channel and is_classical(x.payload):
            return x, other
    return None


def _normalize(m):
    if isinstance(m, Channeled):
        payload, red = _normalize(m.payload)
        hit = _rearrange_operand(m.channel, payload)
        if hit is None:
            return Channeled(m.channel, payload), red
        fixed, other = hit
        moved, _ = _normalize(Channeled(m.channel, other))
        value, _ = _meet_normal(fixed, moved)
        return value, True
    if isinstance(m, OpaqueMix):
        left, r1 = _normalize(m.left)
        right, r2 = _normalize(m.right)
        value, r3 = _meet_normal(left, right)
        return value, r1 or r2 or r3
    if isinstance(m, ClassicalResidue):
        inner, red = _normalize(m.inner)
        return ClassicalResidue(inner), red
    if isinstance(m, QuantumResidue):
        inner, red = _normalize(m.inner)
        return QuantumResidue(inner), red
    return m, False


def normalize(m: Message) -> MeetResult:
    """Normal form of a message containing meets."""
    value, red = _normalize(m)
    return MeetResult(value, red)


def meet(m1: Message, m2: Message) -> MeetResult:
    """Normal form of ``m1 (.) m2``."""
    a, r1 = _normalize(m1)
    b, r2 = _normalize(m2)
    value, r3 = _meet_normal(a, b)
    return MeetResult(value, r1 or r2 or r3)


def is_normal(m: Message) -> bool:
    """True iff no equation rewrites any subterm of ``m``."""
    if isinstance(m, Channeled):
        if not is_normal(m.payload):
            return False
        return _rearrange_operand(m.channel, m.payload) is None
    if isinstance(m, OpaqueMix):
        if not (is_normal(m.left) and is_normal(m.right)):
            return False
        if isinstance(m.left, Blank) or isinstance(m.right, Blank):
            return False
        if term_key(m.left) > term_key(m.right):
            return False
        if _recovers(m.left, m.right) is not None:
            return False
        return not (m.left == m.right and is_classical(m.left))
    if isinstance(m, (ClassicalResidue, QuantumResidue)):
        return is_normal(m.inner)
    return True
