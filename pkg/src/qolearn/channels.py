"""Quantum channels in Kraus form and the dynamics helpers built on them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import bregman_div
from .linalg import hermitian_eig, hermitianize, kron

TRACE_PRESERVING_ATOL = 1e-10


@dataclass(frozen=True)
class QuantumChannel:
    """CPTP map represented by Kraus operators, validated at construction."""

    kraus: tuple[np.ndarray, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not self.kraus:
            raise ValueError("a channel needs at least one Kraus operator")
        dims = {k.shape for k in self.kraus}
        if len(dims) != 1:
            raise ValueError(f"Kraus operators disagree on shape: {dims}")
        d_out, d_in = self.kraus[0].shape
        acc = np.zeros((d_in, d_in), dtype=complex)
        for k in self.kraus:
            acc += k.conj().T @ k
        if np.max(np.abs(acc - np.eye(d_in))) > TRACE_PRESERVING_ATOL:
            raise ValueError(
                f"Kraus set is not trace preserving: max |sum K†K - I| = "
                f"{np.max(np.abs(acc - np.eye(d_in))):.3g}"
            )

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return apply_channel(self, x)

    @classmethod
    def identity(cls, dim: int) -> "QuantumChannel":
        return cls((np.eye(dim, dtype=complex),), name="identity")

    @classmethod
    def from_unitary(cls, u: np.ndarray, name: str = "") -> "QuantumChannel":
        return cls((np.asarray(u, dtype=complex),), name=name)

    @classmethod
    def depolarizing(cls, dim: int, p: float) -> "QuantumChannel":
        """x -> (1-p) x + p I/dim, via the generalized Pauli (Weyl) Kraus set."""
        if not 0.0 <= p <= 1.0:
            raise ValueError("depolarizing strength must be in [0, 1]")
        shift = np.roll(np.eye(dim, dtype=complex), 1, axis=0)
        clock = np.diag(np.exp(2j * np.pi * np.arange(dim) / dim))
        ops = [np.sqrt(1.0 - p + p / dim**2) * np.eye(dim, dtype=complex)]
        for a in range(dim):
            for b in range(dim):
                if a == 0 and b == 0:
                    continue
                w = np.linalg.matrix_power(shift, a) @ np.linalg.matrix_power(clock, b)
                ops.append(np.sqrt(p) / dim * w)
        return cls(tuple(ops), name=f"depolarizing(p={p:g})")


def apply_channel(phi: QuantumChannel, x: np.ndarray) -> np.ndarray:
    """sum_i K_i x K_i†."""
    out = np.zeros((phi.dim_out, phi.dim_out), dtype=complex)
    for k in phi.kraus:
        out += k @ x @ k.conj().T
    return hermitianize(out)


def unitary_channel_from_hamiltonian(h: np.ndarray, dt: float) -> QuantumChannel:
    """Schroedinger step U = exp(-i h dt) as a single-Kraus channel."""
    w, v = hermitian_eig(h)
    u = (v * np.exp(-1j * w * dt)) @ v.conj().T
    return QuantumChannel.from_unitary(u, name=f"unitary(dt={dt:g})")


def _qubit_permutation(order: list[int], n_qubits: int) -> np.ndarray:
    """Permutation matrix sending basis index with qubit order (0..n-1) to `order`.

    Qubit 0 is the most significant bit, matching the tensor-product layout
    of kron(first_factor, second_factor).
    """
    d = 2 ** n_qubits
    perm = np.zeros((d, d), dtype=complex)
    for idx in range(d):
        bits = [(idx >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        new_idx = 0
        for pos, q in enumerate(order):
            new_idx |= bits[q] << (n_qubits - 1 - pos)
        perm[new_idx, idx] = 1.0
    return perm


def embed_local_channel(
    phi: QuantumChannel, qubit_indices: list[int], n_qubits: int
) -> QuantumChannel:
    """Extend a channel on l qubits to n qubits, acting as identity elsewhere."""
    l = len(qubit_indices)
    if len(set(qubit_indices)) != l:
        raise ValueError("qubit indices must be distinct")
    if any(q < 0 or q >= n_qubits for q in qubit_indices):
        raise ValueError(f"qubit indices must lie in [0, {n_qubits})")
    if phi.dim_in != 2 ** l:
        raise ValueError(f"channel dimension {phi.dim_in} does not match {l} qubits")
    if l == n_qubits and qubit_indices == list(range(n_qubits)):
        return phi
    rest = [q for q in range(n_qubits) if q not in qubit_indices]
    perm = _qubit_permutation(list(qubit_indices) + rest, n_qubits)
    eye_rest = np.eye(2 ** (n_qubits - l), dtype=complex)
    ops = tuple(perm.conj().T @ kron(k, eye_rest) @ perm for k in phi.kraus)
    return QuantumChannel(ops, name=f"{phi.name or 'channel'}@{list(qubit_indices)}")


def contraction_check(
    phi: QuantumChannel, x: np.ndarray, y: np.ndarray, slack: float = 1e-9
) -> bool:
    """Data-processing check: B_R(phi(x) || phi(y)) <= B_R(x || y) + slack."""
    return bregman_div(apply_channel(phi, x), apply_channel(phi, y)) <= bregman_div(x, y) + slack
