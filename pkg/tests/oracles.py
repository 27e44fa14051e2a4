"""Independent reference implementations used as test oracles.

Everything here is built from dense 2x2 matrices, Kronecker products, and
brute-force sums, deliberately avoiding the package's kernel code paths.
Qubit q is bit q of the basis index (little-endian).
"""
import itertools

import numpy as np


def ry_matrix(angle):
    c, s = np.cos(angle / 2.0), np.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rz_matrix(angle):
    return np.array(
        [[np.exp(-0.5j * angle), 0.0], [0.0, np.exp(0.5j * angle)]], dtype=np.complex128
    )


def cnot_matrix(n_qubits, control, target):
    dim = 1 << n_qubits
    u = np.zeros((dim, dim), dtype=np.complex128)
    for b in range(dim):
        if (b >> control) & 1:
            u[b ^ (1 << target), b] = 1.0
        else:
            u[b, b] = 1.0
    return u


def lift(gate2x2, n_qubits, qubit):
    """Embed a 1-qubit gate at position `qubit` of an n-qubit register."""
    return np.kron(np.eye(1 << (n_qubits - 1 - qubit)), np.kron(gate2x2, np.eye(1 << qubit)))


def product_state(single_states):
    """Tensor product with qubit 0 least significant: kron(s_{Q-1},...,s_0)."""
    out = np.array([1.0], dtype=np.complex128)
    for s in single_states:
        out = np.kron(np.asarray(s, dtype=np.complex128), out)
    return out


def circuit_unitary(n_qubits, enc_angles, theta):
    """Full-matrix build of the ansatz: encoding RYs, then RY/RZ + CNOT ring."""
    dim = 1 << n_qubits
    u = np.eye(dim, dtype=np.complex128)
    for q in range(n_qubits):
        u = lift(ry_matrix(enc_angles[q]), n_qubits, q) @ u
    for d in range(theta.shape[0]):
        for q in range(n_qubits):
            u = lift(ry_matrix(theta[d, q, 0]), n_qubits, q) @ u
        for q in range(n_qubits):
            u = lift(rz_matrix(theta[d, q, 1]), n_qubits, q) @ u
        if n_qubits > 1:
            for q in range(n_qubits):
                u = cnot_matrix(n_qubits, q, (q + 1) % n_qubits) @ u
    return u


def z_expectations_dense(amps):
    """<Z_q> by direct summation over basis states."""
    n_qubits = int(np.log2(amps.shape[0]))
    probs = np.abs(amps) ** 2
    out = np.zeros(n_qubits)
    for b, p in enumerate(probs):
        for q in range(n_qubits):
            out[q] += -p if (b >> q) & 1 else p
    return out


def compound(returns):
    acc = 1.0
    for r in returns:
        acc *= 1.0 + r
    return acc - 1.0


def sample_std(values):
    values = list(values)
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return var ** 0.5


def best_two_partition(points):
    """Exhaustive optimal 2-means inertia over all non-empty bipartitions."""
    n = len(points)
    points = np.asarray(points)
    best = np.inf
    for bits in range(1, 2 ** (n - 1)):  # fix point 0 in cluster 0 to halve the search
        mask = np.array([(bits >> i) & 1 == 1 for i in range(n)])
        for side in (mask, ~mask):
            if side.all() or not side.any():
                continue
        a, b = points[~mask], points[mask]
        inertia = ((a - a.mean(axis=0)) ** 2).sum() + ((b - b.mean(axis=0)) ** 2).sum()
        best = min(best, inertia)
    return best


def groupwise_means(points, labels, k):
    points = np.asarray(points)
    means = np.zeros((k, points.shape[1]))
    counts = np.zeros(k, dtype=int)
    for p, l in zip(points, labels):
        means[l] += p
        counts[l] += 1
    for c in range(k):
        if counts[c]:
            means[c] /= counts[c]
    return means, counts


def finite_difference(f, x, h=1e-5):
    """Central finite-difference gradient of scalar/vector f at 1-D x."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(x.shape[0]):
        up, dn = x.copy(), x.copy()
        up[i] += h
        dn[i] -= h
        cols.append((np.asarray(f(up)) - np.asarray(f(dn))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def all_partitions(items, k):
    """Every way to split items into at most k labelled groups (for tiny n)."""
    for labels in itertools.product(range(k), repeat=len(items)):
        yield labels
