"""Compile teleportation to the circuit IR and check it on every branch.

Run with ``python3 demos/compile_and_simulate.py``.
"""
import numpy as np

from qam import protocols
from qam.circuit import compile_config
from qam.simulate import region_state, simulate


def main():
    prog = compile_config(protocols.load("teleport").config)
    print(prog.to_text())
    message = np.array([0.6, 0.8])
    bob, _ = prog.layout["c.Bob"]
    for b in simulate(prog, {"bar(d).Alice": message}):
        vec = region_state(b.state, prog.total_qubits, [bob])
        fidelity = abs(np.vdot(vec, message)) ** 2
        print(f"p={b.prob:.2f} bits x={b.bits['x']} Bob holds {np.round(vec, 6)} "
              f"fidelity {fidelity:.6f}")


if __name__ == "__main__":
    main()
