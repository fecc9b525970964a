"""Simulated ground-truth state processes, measurement streams and losses.

A trial is fully determined by its configuration plus one numpy Generator:
state sequences, measurement effects and feedback noise all draw from that
single stream, in a fixed order documented in the harness.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channels import QuantumChannel, apply_channel, unitary_channel_from_hamiltonian
from .linalg import haar_unitary, nuclear_norm, random_density

VARIANTS = ("static", "kshift", "hamiltonian", "channel")


@dataclass(frozen=True)
class LossDescriptor:
    """One round's loss: l1 -> |z - b|, l2 -> (z - b)^2, both on [0,1] arguments.

    true_prob carries Tr(E rho_t) for simulation diagnostics (mistake
    counting); no learner update may depend on it.
    """

    kind: str
    target: float
    true_prob: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind not in ("l1", "l2"):
            raise ValueError(f"unknown loss kind {self.kind!r}")

    @property
    def lipschitz(self) -> float:
        return 1.0 if self.kind == "l1" else 2.0


def loss_eval(desc: LossDescriptor, z: float) -> float:
    diff = z - desc.target
    return abs(diff) if desc.kind == "l1" else diff * diff


def loss_subgrad(desc: LossDescriptor, z: float) -> float:
    """Subderivative at z; the l1 tie at z = b uses 0 (a valid subgradient)."""
    diff = z - desc.target
    if desc.kind == "l2":
        return 2.0 * diff
    return 0.0 if diff == 0.0 else float(np.sign(diff))


@dataclass(frozen=True)
class FeedbackRule:
    """Bounded-error feedback: |b_t - Tr(E rho_t)| <= epsilon/3, b_t in [0,1]."""

    epsilon: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 3.0:
            raise ValueError("epsilon must be in [0, 3]")


def gen_feedback(
    effect: np.ndarray, rho: np.ndarray, rule: FeedbackRule, rng: np.random.Generator
) -> float:
    p = float(np.sum(effect.conj() * rho).real)
    delta = rng.uniform(-1.0, 1.0) * rule.epsilon / 3.0
    return float(np.clip(p + delta, 0.0, 1.0))


@dataclass(frozen=True)
class GroundTruthProcess:
    """The hidden state dynamics: static, k-shift, Hamiltonian drift or a channel."""

    variant: str
    n_qubits: int
    horizon: int
    initial_state: Optional[np.ndarray] = None
    k: int = 0
    change_steps: Optional[tuple[int, ...]] = None
    hamiltonian: Optional[np.ndarray] = None
    dt: float = 0.0
    channel: Optional[QuantumChannel] = None

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "kshift" and self.k > self.horizon:
            raise ValueError(f"k = {self.k} exceeds horizon {self.horizon}")
        if self.variant == "hamiltonian" and self.hamiltonian is None:
            raise ValueError("hamiltonian variant needs a Hamiltonian")
        if self.variant == "channel" and self.channel is None:
            raise ValueError("channel variant needs a channel")


def gen_state_sequence(proc: GroundTruthProcess, rng: np.random.Generator) -> list[np.ndarray]:
    """Length-T sequence of density matrices following the configured dynamics.

    Draw order: initial state first; for k-shift then the change steps
    (without replacement from {2..T}) followed by one fresh state per change,
    in step order.
    """
    t_max = proc.horizon
    d = 2 ** proc.n_qubits
    rho = proc.initial_state if proc.initial_state is not None else random_density(d, rng)
    if proc.variant == "static":
        return [rho] * t_max
    if proc.variant == "kshift":
        if proc.change_steps is not None:
            steps = sorted(proc.change_steps)
        else:
            n_changes = min(proc.k, t_max - 1)
            steps = sorted(rng.choice(np.arange(2, t_max + 1), size=n_changes, replace=False))
        seq = []
        upcoming = list(steps)
        for t in range(1, t_max + 1):
            if upcoming and t == upcoming[0]:
                upcoming.pop(0)
                rho = random_density(d, rng)
            seq.append(rho)
        return seq
    if proc.variant == "hamiltonian":
        step = unitary_channel_from_hamiltonian(proc.hamiltonian, proc.dt)
        seq = [rho]
        for _ in range(t_max - 1):
            rho = apply_channel(step, rho)
            seq.append(rho)
        return seq
    seq = [rho]
    for _ in range(t_max - 1):
        rho = apply_channel(proc.channel, rho)
        seq.append(rho)
    return seq


def gen_effect(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """Two-outcome measurement E = U diag(u) U†, u ~ Uniform[0,1], U Haar."""
    d = 2 ** n_qubits
    u = haar_unitary(d, rng)
    vals = rng.uniform(0.0, 1.0, size=d)
    return (u * vals) @ u.conj().T


def path_length(seq: list[np.ndarray]) -> float:
    """Total nuclear-norm movement sum_t ||rho_{t+1} - rho_t||_*."""
    return float(sum(nuclear_norm(b - a) for a, b in zip(seq, seq[1:])))


def channel_path_length(seq: list[np.ndarray], phi: QuantumChannel) -> float:
    """Movement relative to a candidate dynamics: sum_t ||rho_{t+1} - phi(rho_t)||_*."""
    return float(sum(nuclear_norm(b - apply_channel(phi, a)) for a, b in zip(seq, seq[1:])))
