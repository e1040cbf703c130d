"""Compare the routing policies on the bundled QPass network.

Run with ``python3 demos/routing_policies.py``.
"""
from fractions import Fraction

from qam import protocols
from qam.engine import Budget, explore
from qam.netext import Policy, extended_successors, max_rate_path, path_success_rate, shortest_path
from qam.terms import Rated, show_label
from qam.traces import likeliness_refines


def rated_runs(spec, config):
    g = explore(config, Budget(max_depth=12), extended_successors(spec, Budget()))
    for s in g.terminal_states():
        yield [t.label for t in g.path_to(s) if isinstance(t.label, Rated)]


def main():
    pf = protocols.load("qpass")
    theta = pf.network.theta
    print("shortest Ann -> Bob:", shortest_path(theta, "Ann", "Bob"))

    for policy in (Policy("always"), Policy("qpass"), Policy("qcast", "product")):
        spec = pf.network.with_policy(policy)
        for labels in rated_runs(spec, pf.config):
            shown = ", ".join(show_label(x) for x in labels) or "(everything vetoed)"
            print(f"{policy.kind:>6} {policy.aggregation:<7}  {shown}"
                  f"  success {path_success_rate(labels)}")

    hot = {frozenset(p) for p in (("Ann", "Ra"), ("Rb", "Rc"), ("Rc", "Bob"))}
    skewed = theta.with_rates([Fraction(1, 2) if frozenset((g, h)) in hot else Fraction(3, 10)
                               for g, h, _ in theta.edges])
    print("best by sum under skewed rates:", max_rate_path(skewed, "Ann", "Bob", "sum"))

    qpass = pf.network.with_policy(Policy("qpass"))
    qcast = pf.network.with_policy(Policy("qcast", "product"))
    r = likeliness_refines(qpass, pf.config, qcast, pf.config, Budget(max_depth=8))
    print("qpass likely-refines qcast(product):", r.holds)


if __name__ == "__main__":
    main()
