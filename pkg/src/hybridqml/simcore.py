"""Dense statevector simulation for small parametrized circuits.

Conventions
-----------
* Wire 0 is the most significant bit of the basis index, so ``|10>`` on two
  qubits is amplitude index 2.
* ``RA(a) = exp(-i a A / 2)`` for ``A`` in ``{X, Y, Z}``.
* ``ROT(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi)`` (ZYZ), i.e. ``RZ(phi)``
  is applied first.

The kernels work on arrays whose last axis holds the ``2**n`` amplitudes and
whose leading axes are arbitrary batch dimensions. Angles broadcast against the
leading axes, which lets one call evolve a whole mini-batch (and every
parameter-shift branch, see :mod:`hybridqml.qgrad`) at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

MAX_QUBITS = 12

ROTATIONS = ("RX", "RY", "RZ")
GATE_ARITY = {"RX": 1, "RY": 1, "RZ": 1, "ROT": 3, "CNOT": 0}


@dataclass(frozen=True)
class Slot:
    """Where a gate angle comes from: a trainable parameter, an input feature or a constant."""

    kind: str
    index: int = 0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("param", "input", "const"):
            raise ValueError(f"unknown slot kind {self.kind!r}")


def param(index: int) -> Slot:
    return Slot("param", index)


def inp(index: int) -> Slot:
    return Slot("input", index)


def const(value: float) -> Slot:
    return Slot("const", value=float(value))


@dataclass(frozen=True)
class Gate:
    kind: str
    wires: tuple[int, ...]
    slots: tuple[Slot, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unsupported gate {self.kind!r}")
        object.__setattr__(self, "wires", tuple(int(w) for w in self.wires))
        object.__setattr__(self, "slots", tuple(self.slots))
        n_wires = 2 if self.kind == "CNOT" else 1
        if len(self.wires) != n_wires:
            raise ValueError(f"{self.kind} acts on {n_wires} wire(s), got {self.wires}")
        if len(set(self.wires)) != len(self.wires):
            raise ValueError(f"{self.kind} wires must be distinct, got {self.wires}")
        if self.slots and len(self.slots) != GATE_ARITY[self.kind]:
            raise ValueError(
                f"{self.kind} takes {GATE_ARITY[self.kind]} angle slot(s), got {len(self.slots)}"
            )


@dataclass(frozen=True)
class Op:
    """A primitive operation after ROT expansion."""

    kind: str
    wires: tuple[int, ...]
    slot: Slot | None = None


@dataclass
class CircuitSpec:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)
    n_params: int = 0
    n_inputs: int = 0

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        for g in self.gates:
            if any(w < 0 or w >= self.n_qubits for w in g.wires):
                raise ValueError(f"gate {g.kind} wires {g.wires} out of range for {self.n_qubits} qubits")
            if len(g.slots) != GATE_ARITY[g.kind]:
                raise ValueError(f"gate {g.kind} in a circuit needs {GATE_ARITY[g.kind]} bound slot(s)")
            for s in g.slots:
                if s.kind == "param" and not 0 <= s.index < self.n_params:
                    raise ValueError(f"parameter slot {s.index} out of range (n_params={self.n_params})")
                if s.kind == "input" and not 0 <= s.index < self.n_inputs:
                    raise ValueError(f"input slot {s.index} out of range (n_inputs={self.n_inputs})")

    @cached_property
    def ops(self) -> tuple[Op, ...]:
        out = []
        for g in self.gates:
            if g.kind == "CNOT":
                out.append(Op("CNOT", g.wires))
            elif g.kind == "ROT":
                phi, theta, omega = g.slots
                out += [Op("RZ", g.wires, phi), Op("RY", g.wires, theta), Op("RZ", g.wires, omega)]
            else:
                out.append(Op(g.kind, g.wires, g.slots[0]))
        return tuple(out)


@dataclass
class Statevector:
    n_qubits: int
    amps: np.ndarray

    def __post_init__(self):
        _check_n_qubits(self.n_qubits)
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (1 << self.n_qubits,):
            raise ValueError(f"expected {1 << self.n_qubits} amplitudes, got shape {self.amps.shape}")

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))


def _check_n_qubits(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n!r}")


# ---------------------------------------------------------------- kernels

def rotate(psi: np.ndarray, n: int, kind: str, wire: int, angle) -> None:
    """Apply RX/RY/RZ(angle) to ``wire`` of ``psi`` in place.

    ``angle`` is a scalar or an array broadcastable to ``psi.shape[:-1]``.
    """
    lead = psi.shape[:-1]
    v = psi.reshape(lead + (1 << wire, 2, 1 << (n - wire - 1)))
    half = np.asarray(angle, dtype=float) * 0.5
    c = np.cos(half)[..., None, None]
    s = np.sin(half)[..., None, None]
    a0 = v[..., 0, :]
    a1 = v[..., 1, :]
    if kind == "RX":
        n0 = c * a0 - 1j * s * a1
        a1 *= c
        a1 -= 1j * s * a0
        a0[...] = n0
    elif kind == "RY":
        n0 = c * a0 - s * a1
        a1 *= c
        a1 += s * a0
        a0[...] = n0
    elif kind == "RZ":
        a0 *= c - 1j * s
        a1 *= c + 1j * s
    else:
        raise ValueError(f"not a rotation: {kind!r}")


def cnot(psi: np.ndarray, n: int, control: int, target: int) -> None:
    """Apply CNOT in place: swap target amplitudes where the control bit is 1."""
    t = psi.reshape(psi.shape[:-1] + (2,) * n)
    i0 = [slice(None)] * n
    i0[control] = 1
    i1 = list(i0)
    i0[target] = 0
    i1[target] = 1
    i0 = (Ellipsis,) + tuple(i0)
    i1 = (Ellipsis,) + tuple(i1)
    tmp = t[i0].copy()
    t[i0] = t[i1]
    t[i1] = tmp


def z_signs(n: int) -> np.ndarray:
    """(2**n, n) matrix of Z eigenvalues: entry [k, w] = +1 if bit w of k is 0 else -1."""
    k = np.arange(1 << n)[:, None]
    bits = (k >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


def expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """Per-wire <Z> for every state in a batch; returns shape ``psi.shape[:-1] + (n,)``."""
    probs = psi.real ** 2 + psi.imag ** 2
    return probs @ z_signs(n)


def zero_states(n: int, batch: tuple[int, ...] = ()) -> np.ndarray:
    psi = np.zeros(tuple(batch) + (1 << n,), dtype=complex)
    psi[..., 0] = 1.0
    return psi


def resolve(slot: Slot, params: np.ndarray, inputs: np.ndarray):
    """Angle for ``slot``: a float for params/consts, a (batch,) column for inputs."""
    if slot.kind == "param":
        return params[slot.index]
    if slot.kind == "input":
        return inputs[..., slot.index]
    return slot.value


def apply_op(psi: np.ndarray, n: int, op: Op, angle=None) -> None:
    if op.kind == "CNOT":
        cnot(psi, n, op.wires[0], op.wires[1])
    else:
        rotate(psi, n, op.kind, op.wires[0], angle)


def _check_lengths(circuit: CircuitSpec, params, inputs) -> tuple[np.ndarray, np.ndarray]:
    params = np.asarray(params, dtype=float).reshape(-1)
    inputs = np.asarray(inputs, dtype=float)
    if params.shape[0] != circuit.n_params:
        raise ValueError(f"expected {circuit.n_params} params, got {params.shape[0]}")
    if inputs.shape[-1:] != (circuit.n_inputs,) and not (circuit.n_inputs == 0 and inputs.size == 0):
        raise ValueError(f"expected {circuit.n_inputs} inputs, got shape {inputs.shape}")
    return params, inputs


def run_batch(circuit: CircuitSpec, params, inputs) -> np.ndarray:
    """Per-wire <Z> for a batch of inputs of shape (batch, n_inputs) -> (batch, n_qubits)."""
    params, inputs = _check_lengths(circuit, params, inputs)
    if inputs.ndim != 2:
        raise ValueError("run_batch expects a 2-D input matrix")
    n = circuit.n_qubits
    psi = zero_states(n, (inputs.shape[0],))
    for op in circuit.ops:
        apply_op(psi, n, op, None if op.slot is None else resolve(op.slot, params, inputs))
    return expectations(psi, n)


# ---------------------------------------------------------------- single-state API

def init_state(n_qubits: int) -> Statevector:
    _check_n_qubits(n_qubits)
    return Statevector(n_qubits, zero_states(n_qubits))


def apply_gate(state: Statevector, gate: Gate, angles: Sequence[float] = ()) -> Statevector:
    """Return a new state with ``gate`` applied using already-resolved ``angles`` (radians)."""
    n = state.n_qubits
    if any(w < 0 or w >= n for w in gate.wires):
        raise ValueError(f"wires {gate.wires} out of range for {n} qubits")
    angles = [float(a) for a in np.atleast_1d(np.asarray(angles, dtype=float))] if len(angles) else []
    if len(angles) != GATE_ARITY[gate.kind]:
        raise ValueError(f"{gate.kind} needs {GATE_ARITY[gate.kind]} angle(s), got {len(angles)}")
    psi = state.amps.copy()
    if gate.kind == "CNOT":
        cnot(psi, n, *gate.wires)
    elif gate.kind == "ROT":
        phi, theta, omega = angles
        rotate(psi, n, "RZ", gate.wires[0], phi)
        rotate(psi, n, "RY", gate.wires[0], theta)
        rotate(psi, n, "RZ", gate.wires[0], omega)
    else:
        rotate(psi, n, gate.kind, gate.wires[0], angles[0])
    return Statevector(n, psi)


def expectation_z(state: Statevector, wire: int) -> float:
    if not 0 <= wire < state.n_qubits:
        raise ValueError(f"wire {wire} out of range for {state.n_qubits} qubits")
    return float(expectations(state.amps, state.n_qubits)[wire])


def run_circuit(circuit: CircuitSpec, params, inputs) -> np.ndarray:
    """Per-wire <Z> after running ``circuit`` on |0...0> for one input vector."""
    params, inputs = _check_lengths(circuit, params, inputs)
    if inputs.ndim != 1:
        raise ValueError("run_circuit expects a 1-D input vector")
    return run_batch(circuit, params, inputs[None, :])[0]
