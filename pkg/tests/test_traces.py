from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from qam import protocols
from qam.engine import Budget
from qam.netext import NetworkError, Policy, RateGraph
from qam.syntax import parse
from qam.terms import Rated
from qam.traces import (
    likeliness_order, likeliness_refines, likeliness_trace_set, show_trace, trace_refines,
    trace_set,
)

from oracles import naive_traces

BIT = protocols.load("bit-commitment").config
CHOICE = parse("""
    quantum c
    classical a
    config {
      membrane @Alice { proc: new(c); choice{dec(c, x); 0}{send(a, c); 0}  res: blank }
      membrane @Bob { proc: new(c); choice{recv(c, y); 0}{recv(a, z); 0}  res: blank }
    }""").config


def test_depth_zero_is_epsilon():
    ts = trace_set(BIT, Budget(max_depth=0))
    assert ts.traces == frozenset({()})
    assert not ts.complete


def test_bit_commitment_traces():
    ts = trace_set(BIT, Budget(max_depth=4))
    assert ("c",) in ts
    assert ("c", "c.blank") in ts
    assert ts.complete
    assert ts.traces == naive_traces(BIT, 4)


def test_teleport_trace():
    ts = trace_set(protocols.load("teleport").config, Budget(max_depth=12))
    assert ("c", "c.bar(d).e", "a.bar(c).rbar(bar(d).e)") in ts


@pytest.mark.parametrize("name", ["bit-commitment", "teleport", "superdense", "swap"])
def test_prefix_closed(name):
    ts = trace_set(protocols.load(name).config, Budget(max_depth=10))
    for t in ts.traces:
        for k in range(len(t)):
            assert t[:k] in ts.traces


def test_reflexive():
    assert trace_refines(BIT, BIT, Budget(max_depth=6))


def test_extra_choice_branch():
    budget = Budget(max_depth=6)
    forward = trace_refines(BIT, CHOICE, budget)
    assert forward.holds and forward.witness is None
    back = trace_refines(CHOICE, BIT, budget)
    assert not back.holds
    assert back.witness in naive_traces(CHOICE, 6)
    assert back.witness not in naive_traces(BIT, 6)
    assert show_trace(back.witness).startswith("[c, ")


def test_transitivity_on_chain():
    budget = Budget(max_depth=6)
    small = protocols.load("bit-commitment").config
    assert trace_refines(small, CHOICE, budget)
    assert trace_refines(CHOICE, CHOICE, budget)
    assert trace_refines(small, CHOICE, budget, depth2=8)


def test_show_trace():
    assert show_trace(()) == "eps"
    assert show_trace((Rated(Fraction(1, 2), "A", "B"),)) == "[0.5(A,B)]"


# -- likeliness -----------------------------------------------------------------

def rated(*items):
    return tuple(Rated(Fraction(p), g, h) for p, g, h in items)


def test_likeliness_order_examples():
    assert likeliness_order(rated(("0.3", "A", "B")), rated(("0.5", "A", "B")))
    assert likeliness_order((), ())
    assert not likeliness_order(rated(("0.5", "A", "B")), rated(("0.5", "B", "A")))
    assert not likeliness_order(rated(("0.5", "A", "B")), rated(("0.3", "A", "B")))
    assert not likeliness_order(rated(("0.3", "A", "B")), ())


rates = st.sampled_from(["0", "0.25", "0.5", "0.75", "1"])
ends = st.sampled_from([("A", "B"), ("B", "C")])


@st.composite
def rated_traces(draw, shape):
    return tuple(Rated(Fraction(draw(rates)), g, h) for g, h in shape)


@given(st.lists(ends, max_size=4).flatmap(
    lambda shape: st.tuples(rated_traces(shape), rated_traces(shape), rated_traces(shape))))
def test_likeliness_order_is_a_partial_order(triple):
    a, b, c = triple
    assert likeliness_order(a, a)
    if likeliness_order(a, b) and likeliness_order(b, a):
        assert a == b
    if likeliness_order(a, b) and likeliness_order(b, c):
        assert likeliness_order(a, c)


def test_likeliness_traces_of_swap():
    pf = protocols.load("swap-net")
    ts = likeliness_trace_set(pf.config, pf.network, Budget(max_depth=12))
    assert ("0.5(A,R)", "0.5(R,B)", "1(A,B)") in ts
    assert likeliness_trace_set(pf.config, pf.network, Budget(max_depth=0)).traces == {()}


def test_likeliness_traces_of_qpass():
    pf = protocols.load("qpass")
    theta = pf.network.theta
    expected = rated((theta.rate("Ann", "Ra"), "Ann", "Ra"), (theta.rate("Ra", "Bob"), "Ra", "Bob"),
                     (1, "Ann", "Bob"))
    assert expected in likeliness_trace_set(pf.config, pf.network, Budget(max_depth=12))


def test_likeliness_reflexive():
    pf = protocols.load("swap-net")
    assert likeliness_refines(pf.network, pf.config, pf.network, pf.config, Budget(max_depth=12))


DETOUR = parse("""
    quantum c
    config {
      membrane @A { proc: new(c); 0  res: blank }
      membrane @X { proc: new(c); 0  res: blank }
    }
    network {
      edge A <-> B rate 0.5
      edge A <-> X rate 0.5
      edge X <-> Y rate 0.5
      edge Y <-> B rate 0.5
      intent 1 = (A, B)
      bind c -> 1
      policy always
    }""")


def test_always_does_not_refine_qpass_off_the_shortest_path():
    spec = DETOUR.network
    r = likeliness_refines(spec, DETOUR.config, spec.with_policy(Policy("qpass")), DETOUR.config,
                           Budget(max_depth=4))
    assert not r.holds
    assert r.witness == rated(("0.5", "A", "X"))
    # the reverse direction holds: qpass only removes behaviour here
    assert likeliness_refines(spec.with_policy(Policy("qpass")), DETOUR.config, spec,
                              DETOUR.config, Budget(max_depth=4))


def test_mismatched_theta_is_an_error():
    spec = DETOUR.network
    other = spec.with_theta(RateGraph.from_edges([("A", "X", 1)]))
    with pytest.raises(NetworkError):
        likeliness_refines(spec, DETOUR.config, other, DETOUR.config, Budget(max_depth=2))
