import itertools

import pytest
from hypothesis import given, strategies as st

from qam.terms import (
    BLANK, NIL, Channeled, Choice, ClassicalResidue, ClassificationError, Configuration, Decode,
    Encode, Membrane, MsgClass, Name, NewChannel, NotApplicable, OpaqueMix, QuantumResidue,
    Receive, SendClassical, Seq, SubstitutionError, Var, canonical, cchan, count_payload,
    message_class, pchan, qchan, show, show_config, show_rate, substitute_classical,
    substitute_quantum_once,
)
from fractions import Fraction

c, d, a = qchan("c"), qchan("d"), cchan("a")
cb, db = pchan("c"), pchan("d")
e = Name("e")


def bit_commitment(order=(0, 1), flip=False):
    alice = [Seq(NewChannel(c), Seq(Decode(c, "x"), NIL)), BLANK]
    bob = [Seq(NewChannel(c), Seq(Receive(c, "y"), NIL)), BLANK]
    if flip:
        alice.reverse()
    ms = [Membrane(tuple(alice), "Alice"), Membrane(tuple(bob), "Bob")]
    return Configuration(tuple(ms[i] for i in order))


# -- canonical ------------------------------------------------------------------

def test_canonical_drops_nil():
    got = canonical(Configuration((Membrane((NIL, BLANK)),)))
    assert got == Configuration((Membrane((BLANK,)),))


def test_canonical_drops_empty_membrane():
    p = Membrane((BLANK,))
    assert canonical(Configuration((Membrane(()), p))) == Configuration((p,))
    assert canonical(Configuration((Membrane((NIL,)), p))) == Configuration((p,))


def test_canonical_ignores_order():
    base = canonical(bit_commitment())
    assert canonical(bit_commitment((1, 0))) == base
    assert canonical(bit_commitment((1, 0), flip=True)) == base


def test_canonical_idempotent_on_protocols():
    from qam import protocols
    for name in protocols.NAMES:
        cfg = protocols.load(name).config
        assert canonical(cfg) == cfg
        assert canonical(canonical(cfg)) == canonical(cfg)


@given(st.permutations(range(4)), st.permutations(range(3)))
def test_canonical_permutation_invariance(outer, inner):
    mols = [BLANK, Channeled(c, BLANK), Seq(Decode(c, "x"), NIL)]
    ms = [Membrane(tuple(mols[i] for i in inner), f"L{k}") for k in range(3)]
    ms.append(Membrane((Channeled(db, e),)))
    cfg = Configuration(tuple(ms[i] for i in outer))
    ref = canonical(Configuration(tuple(ms)))
    assert canonical(cfg) == ref


# -- classification -------------------------------------------------------------

def test_class_examples():
    assert message_class(BLANK) is MsgClass.QUANTUM
    assert message_class(ClassicalResidue(Channeled(db, e))) is MsgClass.CLASSICAL
    assert message_class(Channeled(cb, QuantumResidue(Channeled(db, e)))) is MsgClass.QUANTUM


def test_class_refuses_mix():
    with pytest.raises(ClassificationError):
        message_class(OpaqueMix(BLANK, e))


def grammar(depth):
    """Quantum and classical messages of height <= depth, built from the grammar."""
    qs, cls = {BLANK, e}, set()
    for _ in range(depth):
        ms = qs | cls
        qs, cls = (
            qs | {Channeled(c, m) for m in ms} | {Channeled(cb, q) for q in qs}
            | {QuantumResidue(q) for q in qs},
            cls | {ClassicalResidue(q) for q in qs} | {Channeled(a, i) for i in cls}
            | {Channeled(cb, i) for i in cls} | {QuantumResidue(i) for i in cls},
        )
    return qs, cls


def test_class_matches_grammar_membership():
    qs, cls = grammar(3)
    assert not qs & cls
    assert len(qs) > 50 and len(cls) > 50
    for m in qs:
        assert message_class(m) is MsgClass.QUANTUM, show(m)
    for m in cls:
        assert message_class(m) is MsgClass.CLASSICAL, show(m)


# -- substitution ---------------------------------------------------------------

def test_substitute_classical_single():
    iota = ClassicalResidue(e)
    p = Seq(SendClassical(a, Var("x")), NIL)
    assert substitute_classical(p, "x", iota) == Seq(SendClassical(a, iota), NIL)


def test_substitute_classical_copies_into_both_branches():
    iota = ClassicalResidue(e)
    b = cchan("b")
    p = Choice(Seq(SendClassical(a, Var("x")), NIL), Seq(SendClassical(b, Var("x")), NIL))
    assert substitute_classical(p, "x", iota) == Choice(
        Seq(SendClassical(a, iota), NIL), Seq(SendClassical(b, iota), NIL))


def test_substitute_classical_refuses_quantum():
    with pytest.raises(SubstitutionError):
        substitute_classical(Seq(SendClassical(a, Var("x")), NIL), "x",
                             QuantumResidue(Channeled(c, BLANK)))


def test_substitute_respects_shadowing():
    p = Seq(Receive(a, "x"), Seq(SendClassical(a, Var("x")), NIL))
    assert substitute_classical(p, "x", ClassicalResidue(e)) == p


def test_substitute_quantum_once_examples():
    rest = Seq(Decode(c, "x"), NIL)
    got = substitute_quantum_once(Seq(Encode(c, db), rest), db, Channeled(db, e))
    assert got == Seq(Encode(c, Channeled(db, e)), rest)
    got = substitute_quantum_once(Seq(Encode(d, c), rest), c, Channeled(c, BLANK))
    assert got == Seq(Encode(d, Channeled(c, BLANK)), rest)


def test_substitute_quantum_once_replaces_only_first():
    p = Seq(Encode(c, db), Seq(Encode(d, db), NIL))
    res = Channeled(db, e)
    assert count_payload(p, db) == 2 and count_payload(p, res) == 0
    out = substitute_quantum_once(p, db, res)
    assert count_payload(out, db) == 1 and count_payload(out, res) == 1
    assert out.action.payload == res


def test_substitute_quantum_once_not_applicable():
    with pytest.raises(NotApplicable):
        substitute_quantum_once(Seq(Encode(c, e), NIL), db, Channeled(db, e))
    with pytest.raises(SubstitutionError):
        substitute_quantum_once(Seq(Encode(c, db), NIL), db, Channeled(cb, e))


# -- printing -------------------------------------------------------------------

def test_show_surface_syntax():
    assert show(Channeled(cb, ClassicalResidue(Channeled(db, e)))) == "bar(c).rbar(bar(d).e)"
    assert show(Seq(Decode(c, "x"), Seq(SendClassical(a, Var("x")), NIL))) == \
        "dec(c, x); send(a, x); 0"
    assert show_config(canonical(bit_commitment())) == \
        "[[blank, new(c); dec(c, x); 0]]@Alice || [[blank, new(c); recv(c, y); 0]]@Bob"


@pytest.mark.parametrize("rate, text", [
    (Fraction(1), "1"), (Fraction(1, 2), "0.5"), (Fraction(3, 10), "0.3"),
    (Fraction(1, 4), "0.25"), (Fraction(1, 3), "1/3"),
])
def test_show_rate(rate, text):
    assert show_rate(rate) == text


def test_term_order_is_total_on_small_messages():
    from qam.terms import term_key
    qs, cls = grammar(2)
    terms = sorted(qs | cls, key=term_key)
    for x, y in itertools.pairwise(terms):
        assert term_key(x) < term_key(y)
