import pytest

from qam import protocols
from qam.engine import Budget, Rule, enumerate_transitions, explore, run
from qam.safety import (
    PathError, check_well_formed, creation_count, monitor_no_cloning, resource_ledger,
    verify_non_relocation,
)
from qam.syntax import parse
from qam.terms import Choice, NIL, NewChannel, Seq, qchan

from oracles import forged_cloning_transition, forged_relocation_path

BUNDLED = ("bit-commitment", "teleport", "superdense", "swap")
c = qchan("c")


def cfg(body, decls="quantum c d\nclassical a"):
    return parse(f"{decls}\nconfig {{\n{body}\n}}").config


def complete_paths(name, depth=12):
    g = explore(protocols.load(name).config, Budget(max_depth=depth))
    return [g.path_to(s) for s in g.terminal_states()]


# -- well-formedness ------------------------------------------------------------

def test_teleport_is_well_formed():
    assert check_well_formed(protocols.load("teleport").config).ok


def test_three_parties_are_ill_formed():
    wf = check_well_formed(cfg("""
        membrane @A { res: c.blank }
        membrane @B { res: c.blank }
        membrane @C { res: c.blank }"""))
    assert [v.kind for v in wf.violations] == ["duplicate_resource_channel"]


def test_two_creation_pairs_are_ill_formed():
    wf = check_well_formed(cfg("""
        membrane @A { proc: new(c); 0  res: blank }
        membrane @B { proc: new(c); 0  res: blank }
        membrane @C { proc: new(c); 0  res: blank }
        membrane @D { proc: new(c); 0  res: blank }"""))
    assert {v.kind for v in wf.violations} == {"non_unique_creation_pair"}


def test_creation_on_held_name_is_ill_formed():
    wf = check_well_formed(cfg("""
        membrane @A { proc: new(c); 0  res: c.blank }
        membrane @B { proc: new(c); 0  res: c.blank }"""))
    assert "non_unique_creation_pair" in {v.kind for v in wf.violations}


def test_creation_count_sums_sequences_and_maxes_choices():
    twice = Seq(NewChannel(c), Seq(NewChannel(c), NIL))
    assert creation_count(twice, c) == 2
    assert creation_count(Choice(Seq(NewChannel(c), NIL), twice), c) == 2


@pytest.mark.parametrize("name", BUNDLED)
def test_well_formedness_is_preserved(name):
    g = explore(protocols.load(name).config, Budget(max_depth=10))
    assert check_well_formed(g.states[0]).ok
    for s in g.states:
        assert check_well_formed(s).ok


# -- no-cloning -----------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_no_cloning_on_bundled(name):
    g = explore(protocols.load(name).config, Budget(max_depth=12))
    assert all(monitor_no_cloning(t).ok for _, _, t in g.edges)


def test_forged_copy_is_caught():
    report = monitor_no_cloning(forged_cloning_transition())
    assert not report.ok
    [(term, before, after)] = report.violations
    assert (before, after) == (1, 2)


def test_qlocal_moves_but_does_not_copy():
    start = protocols.load("teleport").config
    [coh] = [t for t in enumerate_transitions(start) if t.rule is Rule.COHERE]
    [ql] = [t for t in enumerate_transitions(coh.target) if t.rule is Rule.QLOCAL]
    assert monitor_no_cloning(ql).ok


# -- non-relocation -------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_non_relocation_on_complete_paths(name):
    paths = complete_paths(name)
    assert paths
    for path in paths:
        assert verify_non_relocation(path).ok


def test_classical_name_exchange_does_not_relocate():
    start = cfg("""
        membrane @Alice { proc: send(a, c); 0  res: c.blank }
        membrane @Bob { res: c.blank }
        membrane @Mike { proc: recv(a, x); 0 }""")
    path = run(start)
    assert [t.rule for t in path] == [Rule.COM]
    r = verify_non_relocation(path)
    assert r.ok and not r.witnesses
    final = path[-1].target
    assert not any(m.location == "Mike" and m.resources() for m in final.membranes)


def test_forged_relocation_is_caught():
    r = verify_non_relocation(forged_relocation_path())
    assert not r.ok
    assert r.violations[0].channel == "c"


def test_disconnected_path_is_an_error():
    a = run(protocols.load("teleport").config)
    with pytest.raises(PathError):
        verify_non_relocation([a[0], a[2]])


# -- ledger ---------------------------------------------------------------------

@pytest.mark.parametrize("name", BUNDLED)
def test_ledger_parties_never_move(name):
    for path in complete_paths(name):
        ledger = resource_ledger(path)
        for p in ledger:
            assert p.death is None or p.birth is None or p.birth <= p.death
        # identities are unique per channel
        keys = [(p.channel, p.index) for p in ledger]
        assert len(keys) == len(set(keys))


def test_ledger_bit_commitment():
    [path] = complete_paths("bit-commitment")
    ledger = resource_ledger(path)
    assert [(p.index, p.birth, p.death) for p in ledger] == [(0, 0, 1), (1, 0, 1)]
    assert {p.membrane for p in ledger} == {0, 1}
