"""Walk through teleportation step by step and audit the run.

Run with ``python3 demos/teleport_walkthrough.py``.
"""
from qam import protocols
from qam.engine import Budget, explore
from qam.safety import check_well_formed, monitor_no_cloning, verify_non_relocation
from qam.terms import show_config, show_label


def main():
    pf = protocols.load("teleport")
    print("start:", show_config(pf.config))
    print("well-formed:", check_well_formed(pf.config).ok)

    g = explore(pf.config, Budget(max_depth=12))
    print(f"reachable states: {len(g.states)}, transitions: {len(g.edges)}")

    [end] = g.terminal_states()
    path = g.path_to(end)
    for step, t in enumerate(path):
        label = show_label(t.label) if t.observable else "(silent)"
        print(f"{step:2d}  {t.rule.name:<8} {label:<28} {show_config(t.target)}")

    cloned = [t for _, _, t in g.edges if not monitor_no_cloning(t).ok]
    print("no-cloning violations:", len(cloned))
    report = verify_non_relocation(path)
    for w in report.witnesses:
        print(f"{w.channel} handed from {w.source} to {w.target} "
              f"(decode at step {w.decode_step}, encode at step {w.encode_step})")


if __name__ == "__main__":
    main()
