"""Cross-checks between the numba kernels and the pure-numpy fallbacks."""
import os
import subprocess
import sys

import numpy as np
import pytest

from qfolio import _kernels

import oracles

BACKENDS = sorted(_kernels.IMPLEMENTATIONS)
PAIRED = len(BACKENDS) == 2


def random_state(rng, n_qubits):
    amps = rng.normal(size=1 << n_qubits) + 1j * rng.normal(size=1 << n_qubits)
    return (amps / np.linalg.norm(amps)).astype(np.complex128)


@pytest.mark.parametrize("backend", BACKENDS)
class TestAgainstMatrixOracle:
    def test_single_qubit_gates(self, backend):
        impl = _kernels.IMPLEMENTATIONS[backend]
        rng = np.random.default_rng(1)
        for gate, matrix in [("apply_ry", oracles.ry_matrix), ("apply_rz", oracles.rz_matrix)]:
            for n_qubits in (1, 2, 3):
                for qubit in range(n_qubits):
                    amps = random_state(rng, n_qubits)
                    angle = float(rng.uniform(-2 * np.pi, 2 * np.pi))
                    expected = oracles.lift(matrix(angle), n_qubits, qubit) @ amps
                    got = amps.copy()
                    impl[gate](got, qubit, angle)
                    np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_cnot(self, backend):
        impl = _kernels.IMPLEMENTATIONS[backend]
        rng = np.random.default_rng(2)
        for n_qubits in (2, 3, 4):
            for control in range(n_qubits):
                for target in range(n_qubits):
                    if control == target:
                        continue
                    amps = random_state(rng, n_qubits)
                    expected = oracles.cnot_matrix(n_qubits, control, target) @ amps
                    got = amps.copy()
                    impl["apply_cnot"](got, control, target)
                    np.testing.assert_allclose(got, expected, atol=1e-12)

    def test_expectations(self, backend):
        impl = _kernels.IMPLEMENTATIONS[backend]
        rng = np.random.default_rng(3)
        for n_qubits in (1, 3, 5):
            amps = random_state(rng, n_qubits)
            np.testing.assert_allclose(
                impl["z_expectations"](amps, n_qubits),
                oracles.z_expectations_dense(amps),
                atol=1e-12,
            )


@pytest.mark.skipif(not PAIRED, reason="numba unavailable; nothing to compare")
class TestBackendsAgree:
    def test_circuit_expectations_agree(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n_qubits = int(rng.integers(1, 7))
            n_layers = int(rng.integers(1, 4))
            enc = rng.uniform(-np.pi, np.pi, n_qubits)
            theta = rng.uniform(-np.pi, np.pi, (n_layers, n_qubits, 2))
            a = _kernels.IMPLEMENTATIONS["numpy"]["circuit_expectations"](enc, theta)
            b = _kernels.IMPLEMENTATIONS["numba"]["circuit_expectations"](enc, theta)
            np.testing.assert_allclose(a, b, atol=1e-13)

    def test_param_shift_agrees(self):
        rng = np.random.default_rng(5)
        enc = rng.uniform(-np.pi, np.pi, 3)
        theta = rng.uniform(-np.pi, np.pi, (2, 3, 2))
        a_th, a_enc = _kernels.IMPLEMENTATIONS["numpy"]["circuit_param_shift"](enc, theta)
        b_th, b_enc = _kernels.IMPLEMENTATIONS["numba"]["circuit_param_shift"](enc, theta)
        np.testing.assert_allclose(a_th, b_th, atol=1e-13)
        np.testing.assert_allclose(a_enc, b_enc, atol=1e-13)

    def test_kmeans_steps_agree(self):
        rng = np.random.default_rng(6)
        points = rng.normal(size=(40, 3))
        centroids = rng.normal(size=(5, 3))
        la, ia = _kernels.IMPLEMENTATIONS["numpy"]["nearest_centroids"](points, centroids)
        lb, ib = _kernels.IMPLEMENTATIONS["numba"]["nearest_centroids"](points, centroids)
        np.testing.assert_array_equal(la, lb)
        assert ia == pytest.approx(ib, rel=1e-13)
        ma, ca = _kernels.IMPLEMENTATIONS["numpy"]["centroid_means"](points, la, 5)
        mb, cb = _kernels.IMPLEMENTATIONS["numba"]["centroid_means"](points, lb, 5)
        np.testing.assert_array_equal(ca, cb)
        np.testing.assert_allclose(ma, mb, atol=1e-13)


class TestNearestCentroidContract:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_matches_linear_scan_and_breaks_ties_low(self, backend):
        impl = _kernels.IMPLEMENTATIONS[backend]
        rng = np.random.default_rng(7)
        points = rng.normal(size=(30, 3))
        centroids = rng.normal(size=(4, 3))
        labels, inertia = impl["nearest_centroids"](points, centroids)
        expected = np.array(
            [np.argmin(((p - centroids) ** 2).sum(axis=1)) for p in points]
        )
        np.testing.assert_array_equal(labels, expected)
        assert inertia == pytest.approx(
            sum(((p - centroids[l]) ** 2).sum() for p, l in zip(points, labels))
        )
        # exact tie between centroids 0 and 1 resolves to 0
        tied = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        point = np.array([[1.0, 0.0, 0.0]])
        tied_labels, _ = impl["nearest_centroids"](point, tied)
        assert tied_labels[0] == 0


def test_env_flag_forces_numpy_backend():
    env = dict(os.environ, QFOLIO_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from qfolio import _kernels; print(_kernels.ACTIVE_BACKEND)"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"
