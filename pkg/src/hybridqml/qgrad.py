"""Parameter-shift gradients of per-wire <Z> expectations.

Every rotation is generated by a Pauli with eigenvalues +-1/2, so for each
gate occurrence ``g`` bound to slot ``s``::

    d<Z_w>/ds += (E(angle_g + pi/2) - E(angle_g - pi/2)) / 2

and a slot used by several gates (re-uploaded inputs, ROT components) sums its
occurrences. Input slots get the same treatment, which is what lets a quantum
node pass gradients back into upstream classical layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .simcore import (
    CircuitSpec,
    _check_lengths,
    apply_op,
    expectations,
    resolve,
    run_circuit,
    zero_states,
)

SHIFT = np.pi / 2


@dataclass
class CircuitJacobian:
    d_params: np.ndarray  # (n_qubits, n_params)
    d_inputs: np.ndarray  # (n_qubits, n_inputs)


def _occurrences(circuit: CircuitSpec) -> list[int]:
    return [i for i, op in enumerate(circuit.ops) if op.slot is not None and op.slot.kind != "const"]


def batch_jacobian(circuit: CircuitSpec, params, inputs) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Expectations and parameter-shift Jacobians for a batch of inputs.

    Returns ``(E, d_params, d_inputs)`` with shapes ``(B, q)``, ``(B, q, n_params)``
    and ``(B, q, n_inputs)``.

    The unshifted state is evolved once. When it reaches a shiftable gate, two
    branches are forked from it with the angle moved by +-pi/2, and from then on
    every branch receives the same remaining gates as the main state. All
    branches live in one array so each gate is a single vectorised call.
    """
    params, inputs = _check_lengths(circuit, params, inputs)
    if inputs.ndim != 2:
        raise ValueError("batch_jacobian expects a 2-D input matrix")
    n = circuit.n_qubits
    batch = inputs.shape[0]
    ops = circuit.ops
    occ = _occurrences(circuit)
    psi = zero_states(n, (batch,))
    branches = np.empty((2 * len(occ), batch, 1 << n), dtype=complex)
    shifts = np.array([[SHIFT], [-SHIFT]])
    active = 0
    for op in ops:
        angle = None if op.slot is None else resolve(op.slot, params, inputs)
        if active:
            apply_op(branches[:active], n, op, angle)
        if op.slot is not None and op.slot.kind != "const":
            pair = branches[active:active + 2]
            pair[:] = psi
            apply_op(pair, n, op, np.broadcast_to(angle, (batch,))[None, :] + shifts)
            active += 2
        apply_op(psi, n, op, angle)

    E = expectations(psi, n)
    d_params = np.zeros((batch, n, circuit.n_params))
    d_inputs = np.zeros((batch, n, circuit.n_inputs))
    if occ:
        Eb = expectations(branches, n)
        diff = 0.5 * (Eb[0::2] - Eb[1::2])  # (n_occ, B, q)
        # accumulate in gate order so repeated runs are bitwise identical
        for k, i in enumerate(occ):
            slot = ops[i].slot
            target = d_params if slot.kind == "param" else d_inputs
            target[:, :, slot.index] += diff[k]
    return E, d_params, d_inputs


def circuit_jacobian(circuit: CircuitSpec, params, inputs) -> CircuitJacobian:
    params, inputs = _check_lengths(circuit, params, inputs)
    if inputs.ndim != 1:
        raise ValueError("circuit_jacobian expects a 1-D input vector")
    _, dp, di = batch_jacobian(circuit, params, inputs[None, :])
    return CircuitJacobian(dp[0], di[0])


def finite_diff_jacobian(circuit: CircuitSpec, params, inputs, h: float = 1e-5) -> CircuitJacobian:
    """Central finite differences of :func:`run_circuit`; a test oracle."""
    if not h > 0:
        raise ValueError("h must be positive")
    params, inputs = _check_lengths(circuit, params, inputs)
    n = circuit.n_qubits
    dp = np.zeros((n, circuit.n_params))
    di = np.zeros((n, circuit.n_inputs))
    for vec, out, which in ((params, dp, "p"), (inputs, di, "i")):
        for j in range(vec.shape[0]):
            up, down = vec.copy(), vec.copy()
            up[j] += h
            down[j] -= h
            if which == "p":
                e_up = run_circuit(circuit, up, inputs)
                e_down = run_circuit(circuit, down, inputs)
            else:
                e_up = run_circuit(circuit, params, up)
                e_down = run_circuit(circuit, params, down)
            out[:, j] = (e_up - e_down) / (2 * h)
    return CircuitJacobian(dp, di)
