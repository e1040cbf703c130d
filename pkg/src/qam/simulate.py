"""Statevector oracle for compiled circuit programs.

Small and exhaustive: every measurement forks the run, so the result is the
full list of branches with their probabilities.  Processes are scheduled
deterministically: the first process (in program order) that can make
progress runs until it blocks on a ``wait`` or finishes.  Qubit 0 is the most
significant bit of the basis index.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .circuit import CCX, CCZ, CX, CZ, CircuitProgram, H, Meas, Send, Wait
from .terms import QamError

MAX_QUBITS = 12
_EPS = 1e-12


class SimulationError(QamError):
    pass


class Deadlock(SimulationError):
    pass


class FailureState(SimulationError):
    """A value does not fit the qubits set aside for it."""


@dataclass
class Branch:
    prob: float
    state: np.ndarray
    bits: dict = field(default_factory=dict)  # register -> list of 0/1
    transcript: list = field(default_factory=list)  # (location, var, value)
    pcs: list = field(default_factory=list)
    queues: dict = field(default_factory=dict)

    def fork(self):
        return Branch(self.prob, self.state.copy(), {k: list(v) for k, v in self.bits.items()},
                      list(self.transcript), list(self.pcs),
                      {k: deque(v) for k, v in self.queues.items()})


def _apply_1q(state, n, q, gate):
    psi = state.reshape([2] * n)
    psi = np.moveaxis(np.tensordot(gate, psi, axes=([1], [q])), 0, q)
    return psi.reshape(-1)


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _controlled(state, n, c, t, gate):
    psi = state.reshape([2] * n).copy()
    idx = [slice(None)] * n
    idx[c] = 1
    sub = psi[tuple(idx)]
    axis = t if t < c else t - 1
    sub = np.moveaxis(np.tensordot(gate, sub, axes=([1], [axis])), 0, axis)
    psi[tuple(idx)] = sub
    return psi.reshape(-1)


def _measure(state, n, q):
    psi = state.reshape([2] * n)
    out = []
    for outcome in (0, 1):
        proj = np.zeros_like(psi)
        idx = [slice(None)] * n
        idx[q] = outcome
        proj[tuple(idx)] = psi[tuple(idx)]
        p = float(np.vdot(proj, proj).real)
        if p > _EPS:
            out.append((outcome, p, (proj / np.sqrt(p)).reshape(-1)))
    return out


def _amplitudes(values) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            out.append(complex(v[0], v[1]))
        else:
            out.append(complex(v))
    vec = np.array(out, dtype=complex)
    norm = np.linalg.norm(vec)
    if norm < _EPS:
        raise SimulationError("input amplitudes are all zero")
    return vec / norm


def initial_state(prog: CircuitProgram, inputs: dict):
    """Product state from region inputs plus the classical input registers."""
    n = prog.total_qubits
    if n > MAX_QUBITS:
        raise SimulationError(f"{n} qubits exceeds the simulator limit of {MAX_QUBITS}")
    factors = [np.array([1, 0], dtype=complex) for _ in range(n)]
    placed: dict = {}
    bits: dict = {}
    for key, value in sorted(inputs.items()):
        if isinstance(value, str):
            if any(ch not in "01" for ch in value):
                raise SimulationError(f"classical input {key} must be a bit string")
            bits[key] = [int(ch) for ch in value]
            continue
        start, length = prog.layout[key]
        vec = _amplitudes(value)
        if len(vec) > 2 ** length:
            raise FailureState(f"input for {key} needs {len(vec)} amplitudes, "
                               f"region holds {2 ** length}")
        vec = np.concatenate([vec, np.zeros(2 ** length - len(vec), dtype=complex)])
        placed[start] = (length, vec)
    state = np.array([1], dtype=complex)
    q = 0
    while q < n:
        if q in placed:
            length, vec = placed[q]
            state = np.kron(state, vec)
            q += length
        else:
            state = np.kron(state, factors[q])
            q += 1
    return state, bits


def _bit(branch, reg, index):
    if reg not in branch.bits or index >= len(branch.bits[reg]):
        raise SimulationError(f"classical bit {reg}[{index}] is not set")
    return branch.bits[reg][index]


def _step(branch: Branch, prog: CircuitProgram, pid: int):
    """Execute one instruction of process ``pid``; returns successor branches or None if blocked."""
    loc, body = prog.processes[pid]
    ins = body[branch.pcs[pid]]
    n = prog.total_qubits
    if isinstance(ins, Wait):
        queue = branch.queues.get(ins.chan)
        if not queue:
            return None
        value = queue.popleft()
        if isinstance(value, list):
            branch.bits[ins.var] = list(value)
            branch.transcript.append((loc, ins.var, "".join(map(str, value))))
        else:
            branch.transcript.append((loc, ins.var, value))
        branch.pcs[pid] += 1
        return [branch]
    branch.pcs[pid] += 1
    if isinstance(ins, H):
        branch.state = _apply_1q(branch.state, n, ins.q, _H)
    elif isinstance(ins, CX):
        branch.state = _controlled(branch.state, n, ins.control, ins.target, _X)
    elif isinstance(ins, CZ):
        branch.state = _controlled(branch.state, n, ins.control, ins.target, _Z)
    elif isinstance(ins, (CCX, CCZ)):
        if _bit(branch, ins.reg, ins.index):
            branch.state = _apply_1q(branch.state, n, ins.q, _X if isinstance(ins, CCX) else _Z)
    elif isinstance(ins, Send):
        value = list(branch.bits[ins.payload]) if ins.payload in branch.bits else ins.payload
        branch.queues.setdefault(ins.chan, deque()).append(value)
    elif isinstance(ins, Meas):
        out = []
        for outcome, p, state in _measure(branch.state, n, ins.q):
            b = branch.fork()
            b.prob *= p
            b.state = state
            reg = b.bits.setdefault(ins.reg, [])
            reg.extend([0] * (ins.index + 1 - len(reg)))
            reg[ins.index] = outcome
            out.append(b)
        return out
    return [branch]


def simulate(prog: CircuitProgram, inputs: dict | None = None) -> list:
    """All measurement branches of ``prog`` run to completion."""
    state, bits = initial_state(prog, inputs or {})
    start = Branch(1.0, state, bits, [], [0] * len(prog.processes), {})
    done, todo = [], [start]
    while todo:
        branch = todo.pop()
        while True:
            live = [i for i, (_, body) in enumerate(prog.processes) if branch.pcs[i] < len(body)]
            if not live:
                done.append(branch)
                break
            progressed = None
            for pid in live:
                progressed = _step(branch, prog, pid)
                if progressed is not None:
                    # run this process to its next block
                    while (len(progressed) == 1
                           and progressed[0].pcs[pid] < len(prog.processes[pid][1])):
                        nxt = _step(progressed[0], prog, pid)
                        if nxt is None:
                            break
                        progressed = nxt
                    break
            if progressed is None:
                stuck = [f"{prog.processes[i][0]}: {prog.processes[i][1][branch.pcs[i]]}"
                         for i in live]
                raise Deadlock("all processes blocked: " + "; ".join(stuck))
            if len(progressed) == 1:
                branch = progressed[0]
                continue
            todo.extend(reversed(progressed[1:]))
            branch = progressed[0]
    return done


def reduced_density(state: np.ndarray, n: int, qubits) -> np.ndarray:
    keep = list(qubits)
    rest = [q for q in range(n) if q not in keep]
    psi = state.reshape([2] * n).transpose(keep + rest).reshape(2 ** len(keep), -1)
    return psi @ psi.conj().T


def region_state(state: np.ndarray, n: int, qubits, tol: float = 1e-9):
    """Pure state of ``qubits`` with its first significant amplitude made real.

    Returns None when the qubits are entangled with the rest.
    """
    rho = reduced_density(state, n, qubits)
    vals, vecs = np.linalg.eigh(rho)
    if abs(vals[-1] - 1) > tol:
        return None
    vec = vecs[:, -1]
    k = int(np.argmax(np.abs(vec) > tol))
    return vec * (abs(vec[k]) / vec[k])


def same_up_to_phase(a, b, tol: float = 1e-9) -> bool:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    return abs(abs(np.vdot(a, b)) - np.linalg.norm(a) * np.linalg.norm(b)) <= tol


def parse_inputs(spec: str) -> dict:
    """Inputs from JSON text or a path to a JSON file."""
    text = spec
    if not spec.lstrip().startswith("{"):
        with open(spec, encoding="utf-8") as fh:
            text = fh.read()
    data = json.loads(text)
    if not isinstance(data, dict):
        raise SimulationError("simulation input must be a JSON object")
    return data
