"""Dense statevector simulation of the policy's variational circuit.

The ansatz is hardware-efficient: RY angle encoding of the input vector,
``n_layers`` blocks of per-qubit RY+RZ rotations followed by a CNOT ring,
and per-qubit Pauli-Z expectation readout. Gradients use the exact
parameter-shift rule (two shifted evaluations per rotation angle).

Heavy lifting happens in :mod:`qfolio._kernels`; this module owns the
contracts (domains, normalization, shapes) and the chain factor pi that
links input values to encoding angles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import EncodingDomainError, InvariantError, ValidationError

ENCODING_SCALE = math.pi  # encoding angle = pi * x, mapping (-1,1) onto (-pi,pi)
_NORM_ATOL = 1e-8


@dataclass(frozen=True)
class QuantumState:
    """Complex amplitudes of a Q-qubit register (length 2^Q, unit norm)."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        n = amps.shape[0]
        if amps.ndim != 1 or n == 0 or n & (n - 1):
            raise ValidationError("amplitude vector length must be a power of two")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > _NORM_ATOL:
            raise InvariantError(f"state norm {norm} deviates from 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.shape[0]).bit_length() - 1


@dataclass(frozen=True)
class CircuitSpec:
    """Variational block: per layer, per qubit, one RY and one RZ angle."""

    n_qubits: int
    n_layers: int
    theta: np.ndarray  # (n_layers, n_qubits, 2)

    def __post_init__(self):
        if self.n_qubits < 1 or self.n_layers < 1:
            raise ValidationError("need n_qubits >= 1 and n_layers >= 1")
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.shape != (self.n_layers, self.n_qubits, 2):
            raise ValidationError(
                f"theta shape {theta.shape} != ({self.n_layers}, {self.n_qubits}, 2)"
            )
        if not np.all(np.isfinite(theta)):
            raise ValidationError("theta must be finite")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def n_parameters(self) -> int:
        return self.n_layers * self.n_qubits * 2


def _check_input(x: np.ndarray, n_qubits: int | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValidationError("input must be a 1-D vector")
    if n_qubits is not None and x.shape[0] != n_qubits:
        raise ValidationError(f"input length {x.shape[0]} != {n_qubits} qubits")
    if not np.all(np.isfinite(x)) or np.any(np.abs(x) >= 1.0):
        raise EncodingDomainError("encoding inputs must lie in the open interval (-1, 1)")
    return x


def encode(x: np.ndarray) -> QuantumState:
    """Prepare prod_q RY(pi * x_q)|0...0> for x in (-1, 1)^Q."""
    x = _check_input(x)
    amps = np.zeros(1 << x.shape[0], dtype=np.complex128)
    amps[0] = 1.0
    for q in range(x.shape[0]):
        _kernels.apply_ry(amps, q, ENCODING_SCALE * x[q])
    return QuantumState(amps)


def apply_variational(state: QuantumState, spec: CircuitSpec) -> QuantumState:
    """Run the RY/RZ + CNOT-ring layers; returns a new normalized state."""
    if state.n_qubits != spec.n_qubits:
        raise ValidationError(
            f"state has {state.n_qubits} qubits, spec expects {spec.n_qubits}"
        )
    amps = state.amplitudes.copy()
    for d in range(spec.n_layers):
        for q in range(spec.n_qubits):
            _kernels.apply_ry(amps, q, spec.theta[d, q, 0])
        for q in range(spec.n_qubits):
            _kernels.apply_rz(amps, q, spec.theta[d, q, 1])
        if spec.n_qubits > 1:
            for q in range(spec.n_qubits):
                _kernels.apply_cnot(amps, q, (q + 1) % spec.n_qubits)
    return QuantumState(amps)


def expectations_z(state: QuantumState) -> np.ndarray:
    """Per-qubit <Z_q>; +1 weight where bit q of the basis index is 0."""
    return _kernels.z_expectations(state.amplitudes, state.n_qubits)


def vqc_forward(x: np.ndarray, spec: CircuitSpec) -> np.ndarray:
    """encode -> variational layers -> Z readout, as one fused evaluation."""
    x = _check_input(x, spec.n_qubits)
    return _kernels.circuit_expectations(ENCODING_SCALE * x, spec.theta)


def vqc_gradients(x: np.ndarray, spec: CircuitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Exact gradients of the readout vector u.

    Returns ``(du_dtheta, du_dx)`` where ``du_dtheta[i, d, q, p]`` is
    d<u_i>/d theta[d,q,p] via the parameter-shift rule and ``du_dx[i, j]`` is
    d<u_i>/d x_j (shift on the encoding angle times the chain factor pi).
    """
    x = _check_input(x, spec.n_qubits)
    du_dangles, du_denc = _kernels.circuit_param_shift(ENCODING_SCALE * x, spec.theta)
    return du_dangles, ENCODING_SCALE * du_denc
