"""Hot numeric kernels: statevector circuit evaluation and k-means steps.

Two complete implementations live here. The default is a set of numba
@njit loops (the circuit evaluator and its parameter-shift sweep run as a
single compiled region, which is what makes training fast); the fallback is
vectorized numpy. Selection happens once at import time:

* ``QFOLIO_DISABLE_NUMBA=1`` forces the numpy path,
* a missing/broken numba install falls back to numpy automatically.

``IMPLEMENTATIONS`` always exposes every available backend so tests and the
benchmark can compare them regardless of the active default.

Statevector convention: qubit q is bit q of the basis index (little-endian),
so basis index b has qubit q in state ``(b >> q) & 1``.

Circuit family (fixed ansatz, data via ``enc`` angles):
    |0..0>  -->  RY(enc[q]) per qubit
            -->  per layer d: RY(angles[d,q,0]), RZ(angles[d,q,1]) per qubit,
                 then a CNOT ring q -> (q+1) mod Q (no entanglers for Q=1)
    readout: <Z_q> per qubit.
"""
from __future__ import annotations

import math
import os

import numpy as np

_TRUTHY = {"1", "true", "yes", "on"}

try:  # pragma: no cover - exercised implicitly by the import
    import numba
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("QFOLIO_DISABLE_NUMBA", "").lower() not in _TRUTHY

PARAM_SHIFT = math.pi / 2.0


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _np_apply_ry(amps: np.ndarray, qubit: int, angle: float) -> None:
    """In-place RY(angle) on one qubit of a 2^Q statevector."""
    c = math.cos(angle / 2.0)
    s = math.sin(angle / 2.0)
    step = 1 << qubit
    v = amps.reshape(-1, 2, step)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def _np_apply_rz(amps: np.ndarray, qubit: int, angle: float) -> None:
    """In-place RZ(angle): phase exp(∓i·angle/2) on the 0/1 subspaces."""
    half = angle / 2.0
    p0 = complex(math.cos(half), -math.sin(half))
    step = 1 << qubit
    v = amps.reshape(-1, 2, step)
    v[:, 0, :] *= p0
    v[:, 1, :] *= p0.conjugate()


def _np_apply_cnot(amps: np.ndarray, control: int, target: int) -> None:
    """In-place CNOT: swap target-bit pair on the control=1 subspace."""
    idx = np.arange(amps.shape[0])
    sel = ((idx >> control) & 1 == 1) & ((idx >> target) & 1 == 0)
    lo = idx[sel]
    hi = lo | (1 << target)
    amps[lo], amps[hi] = amps[hi], amps[lo].copy()


def _np_z_expectations(amps: np.ndarray, n_qubits: int) -> np.ndarray:
    """<Z_q> = sum of |amp|^2 with sign +1 where bit q is 0."""
    probs = np.abs(amps) ** 2
    idx = np.arange(amps.shape[0])
    out = np.empty(n_qubits)
    for q in range(n_qubits):
        sign = 1.0 - 2.0 * ((idx >> q) & 1)
        out[q] = float(np.dot(sign, probs))
    return out


def _np_circuit_state(enc: np.ndarray, angles: np.ndarray) -> np.ndarray:
    n_qubits = enc.shape[0]
    n_layers = angles.shape[0]
    amps = np.zeros(1 << n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    for q in range(n_qubits):
        _np_apply_ry(amps, q, enc[q])
    for d in range(n_layers):
        for q in range(n_qubits):
            _np_apply_ry(amps, q, angles[d, q, 0])
        for q in range(n_qubits):
            _np_apply_rz(amps, q, angles[d, q, 1])
        if n_qubits > 1:
            for q in range(n_qubits):
                _np_apply_cnot(amps, q, (q + 1) % n_qubits)
    return amps


def _np_circuit_expectations(enc: np.ndarray, angles: np.ndarray) -> np.ndarray:
    return _np_z_expectations(_np_circuit_state(enc, angles), enc.shape[0])


def _np_circuit_param_shift(enc: np.ndarray, angles: np.ndarray):
    """Parameter-shift sweep; returns (du/dangles, du/denc).

    du_dangles has shape (Q, D, Q, 2), du_denc has shape (Q, Q); both are
    derivatives of the Z expectations with respect to raw angles.
    """
    n_qubits = enc.shape[0]
    n_layers = angles.shape[0]
    du_dangles = np.empty((n_qubits, n_layers, n_qubits, 2))
    du_denc = np.empty((n_qubits, n_qubits))
    work = angles.copy()
    for d in range(n_layers):
        for q in range(n_qubits):
            for p in range(2):
                orig = work[d, q, p]
                work[d, q, p] = orig + PARAM_SHIFT
                up = _np_circuit_expectations(enc, work)
                work[d, q, p] = orig - PARAM_SHIFT
                dn = _np_circuit_expectations(enc, work)
                work[d, q, p] = orig
                du_dangles[:, d, q, p] = 0.5 * (up - dn)
    enc_work = enc.copy()
    for q in range(n_qubits):
        orig = enc_work[q]
        enc_work[q] = orig + PARAM_SHIFT
        up = _np_circuit_expectations(enc_work, angles)
        enc_work[q] = orig - PARAM_SHIFT
        dn = _np_circuit_expectations(enc_work, angles)
        enc_work[q] = orig
        du_denc[:, q] = 0.5 * (up - dn)
    return du_dangles, du_denc


def _np_nearest_centroids(points: np.ndarray, centroids: np.ndarray):
    """Labels (ties -> lowest id) and total within-cluster squared distance."""
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    labels = np.argmin(d2, axis=1).astype(np.int64)
    inertia = float(d2[np.arange(points.shape[0]), labels].sum())
    return labels, inertia


def _np_centroid_means(points: np.ndarray, labels: np.ndarray, k: int):
    """Per-cluster mean of member rows; counts returned alongside."""
    counts = np.bincount(labels, minlength=k).astype(np.int64)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    means = np.zeros_like(sums)
    nonzero = counts > 0
    means[nonzero] = sums[nonzero] / counts[nonzero, None]
    return means, counts


# ---------------------------------------------------------------------------
# numba implementations (compiled lazily on first call, cached on disk)
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True, nogil=True)
    def _nb_apply_ry(amps, qubit, angle):
        c = math.cos(angle / 2.0)
        s = math.sin(angle / 2.0)
        n = amps.shape[0]
        step = 1 << qubit
        for base in range(0, n, 2 * step):
            for low in range(step):
                i0 = base + low
                i1 = i0 + step
                a0 = amps[i0]
                a1 = amps[i1]
                amps[i0] = c * a0 - s * a1
                amps[i1] = s * a0 + c * a1

    @njit(cache=True, nogil=True)
    def _nb_apply_rz(amps, qubit, angle):
        half = angle / 2.0
        p0 = complex(math.cos(half), -math.sin(half))
        p1 = p0.conjugate()
        n = amps.shape[0]
        step = 1 << qubit
        for base in range(0, n, 2 * step):
            for low in range(step):
                i0 = base + low
                amps[i0] = p0 * amps[i0]
                amps[i0 + step] = p1 * amps[i0 + step]

    @njit(cache=True, nogil=True)
    def _nb_apply_cnot(amps, control, target):
        n = amps.shape[0]
        cbit = 1 << control
        tbit = 1 << target
        for i in range(n):
            if (i & cbit) != 0 and (i & tbit) == 0:
                j = i | tbit
                tmp = amps[i]
                amps[i] = amps[j]
                amps[j] = tmp

    @njit(cache=True, nogil=True)
    def _nb_z_expectations(amps, n_qubits):
        n = amps.shape[0]
        out = np.zeros(n_qubits)
        for b in range(n):
            p = amps[b].real ** 2 + amps[b].imag ** 2
            for q in range(n_qubits):
                if (b >> q) & 1:
                    out[q] -= p
                else:
                    out[q] += p
        return out

    @njit(cache=True, nogil=True)
    def _nb_circuit_state(enc, angles):
        n_qubits = enc.shape[0]
        n_layers = angles.shape[0]
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[0] = 1.0
        for q in range(n_qubits):
            _nb_apply_ry(amps, q, enc[q])
        for d in range(n_layers):
            for q in range(n_qubits):
                _nb_apply_ry(amps, q, angles[d, q, 0])
            for q in range(n_qubits):
                _nb_apply_rz(amps, q, angles[d, q, 1])
            if n_qubits > 1:
                for q in range(n_qubits):
                    _nb_apply_cnot(amps, q, (q + 1) % n_qubits)
        return amps

    @njit(cache=True, nogil=True)
    def _nb_circuit_expectations(enc, angles):
        return _nb_z_expectations(_nb_circuit_state(enc, angles), enc.shape[0])

    @njit(cache=True, nogil=True)
    def _nb_circuit_param_shift(enc, angles):
        n_qubits = enc.shape[0]
        n_layers = angles.shape[0]
        du_dangles = np.empty((n_qubits, n_layers, n_qubits, 2))
        du_denc = np.empty((n_qubits, n_qubits))
        work = angles.copy()
        for d in range(n_layers):
            for q in range(n_qubits):
                for p in range(2):
                    orig = work[d, q, p]
                    work[d, q, p] = orig + PARAM_SHIFT
                    up = _nb_circuit_expectations(enc, work)
                    work[d, q, p] = orig - PARAM_SHIFT
                    dn = _nb_circuit_expectations(enc, work)
                    work[d, q, p] = orig
                    for i in range(n_qubits):
                        du_dangles[i, d, q, p] = 0.5 * (up[i] - dn[i])
        enc_work = enc.copy()
        for q in range(n_qubits):
            orig = enc_work[q]
            enc_work[q] = orig + PARAM_SHIFT
            up = _nb_circuit_expectations(enc_work, angles)
            enc_work[q] = orig - PARAM_SHIFT
            dn = _nb_circuit_expectations(enc_work, angles)
            enc_work[q] = orig
            for i in range(n_qubits):
                du_denc[i, q] = 0.5 * (up[i] - dn[i])
        return du_dangles, du_denc

    @njit(cache=True, nogil=True)
    def _nb_nearest_centroids(points, centroids):
        n, dim = points.shape
        k = centroids.shape[0]
        labels = np.empty(n, dtype=np.int64)
        inertia = 0.0
        for i in range(n):
            best = 0
            best_d2 = np.inf
            for c in range(k):
                d2 = 0.0
                for j in range(dim):
                    diff = points[i, j] - centroids[c, j]
                    d2 += diff * diff
                if d2 < best_d2:  # strict: ties keep the lowest cluster id
                    best_d2 = d2
                    best = c
            labels[i] = best
            inertia += best_d2
        return labels, inertia

    @njit(cache=True, nogil=True)
    def _nb_centroid_means(points, labels, k):
        n, dim = points.shape
        sums = np.zeros((k, dim))
        counts = np.zeros(k, dtype=np.int64)
        for i in range(n):
            c = labels[i]
            counts[c] += 1
            for j in range(dim):
                sums[c, j] += points[i, j]
        for c in range(k):
            if counts[c] > 0:
                for j in range(dim):
                    sums[c, j] /= counts[c]
        return sums, counts


_NUMPY_IMPL = {
    "apply_ry": _np_apply_ry,
    "apply_rz": _np_apply_rz,
    "apply_cnot": _np_apply_cnot,
    "z_expectations": _np_z_expectations,
    "circuit_state": _np_circuit_state,
    "circuit_expectations": _np_circuit_expectations,
    "circuit_param_shift": _np_circuit_param_shift,
    "nearest_centroids": _np_nearest_centroids,
    "centroid_means": _np_centroid_means,
}

IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "apply_ry": _nb_apply_ry,
        "apply_rz": _nb_apply_rz,
        "apply_cnot": _nb_apply_cnot,
        "z_expectations": _nb_z_expectations,
        "circuit_state": _nb_circuit_state,
        "circuit_expectations": _nb_circuit_expectations,
        "circuit_param_shift": _nb_circuit_param_shift,
        "nearest_centroids": _nb_nearest_centroids,
        "centroid_means": _nb_centroid_means,
    }

ACTIVE_BACKEND = "numba" if USE_NUMBA else "numpy"
_ACTIVE = IMPLEMENTATIONS[ACTIVE_BACKEND]

apply_ry = _ACTIVE["apply_ry"]
apply_rz = _ACTIVE["apply_rz"]
apply_cnot = _ACTIVE["apply_cnot"]
z_expectations = _ACTIVE["z_expectations"]
circuit_state = _ACTIVE["circuit_state"]
circuit_expectations = _ACTIVE["circuit_expectations"]
circuit_param_shift = _ACTIVE["circuit_param_shift"]
nearest_centroids = _ACTIVE["nearest_centroids"]
centroid_means = _ACTIVE["centroid_means"]
