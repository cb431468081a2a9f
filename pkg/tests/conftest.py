import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hybridqml.simcore import CircuitSpec, Gate, param, inp  # noqa: E402


def random_circuit(rng, n, n_gates, n_params=4, n_inputs=2):
    """Random circuit over the full gate set with random slot bindings."""
    gates = []
    for _ in range(n_gates):
        kind = rng.choice(["RX", "RY", "RZ", "ROT", "CNOT"] if n > 1 else ["RX", "RY", "RZ", "ROT"])
        if kind == "CNOT":
            c, t = rng.choice(n, size=2, replace=False)
            gates.append(Gate("CNOT", (int(c), int(t))))
            continue
        k = 3 if kind == "ROT" else 1
        slots = [param(int(rng.integers(n_params))) if rng.random() < 0.6 or n_inputs == 0
                 else inp(int(rng.integers(n_inputs))) for _ in range(k)]
        gates.append(Gate(str(kind), (int(rng.integers(n)),), slots))
    return CircuitSpec(n, gates, n_params, n_inputs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
