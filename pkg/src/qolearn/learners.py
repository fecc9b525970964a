"""Online learners over quantum state space.

All learners share one behavioral contract: ``predict()`` returns the current
hypothesis state (a density matrix, possibly restricted to the clipped domain
K), and ``observe(effect, loss)`` ingests one round of feedback and mutates
internal state exactly once. predict() must be called before observe() each
round; every prediction stays inside the learner's domain.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .channels import QuantumChannel, apply_channel
from .environments import LossDescriptor, loss_eval, loss_subgrad
from .geometry import (
    ClippedDomain,
    bregman_div,
    maximally_mixed,
    mix_into_domain,
    neg_entropy,
    project_spectrum,
)
from .linalg import hermitian_eig, hermitianize, mat_exp, mat_log, spectral_norm


def expectation(effect: np.ndarray, state: np.ndarray) -> float:
    """Tr(E x), real for Hermitian pairs."""
    return float(np.sum(effect.conj() * state).real)


def eta_grid(horizon: int, lipschitz: float = 2.0) -> list[float]:
    """Step-size candidates {2^{-k-1} : 1 <= k <= ceil(log2 T)}.

    Values at or above the mirror-descent stability bound 1/(2L) are clipped
    to the largest float strictly below it.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    cap = float(np.nextafter(0.5 / lipschitz, 0.0))
    k_max = math.ceil(math.log2(horizon))
    return [min(2.0 ** (-k - 1), cap) for k in range(1, k_max + 1)]


def default_meta_rate(horizon: int, n_experts: int) -> float:
    """Exponential-weights rate sqrt(8 ln(N) / T) for [0,1] losses."""
    return math.sqrt(8.0 * math.log(max(n_experts, 2)) / horizon)


def default_rftl_rate(horizon: int, n_qubits: int, lipschitz: float = 2.0) -> float:
    """Gibbs-learner rate sqrt(n ln 2 / T) / L, capped at the 1/(2L) safety bound."""
    eta = math.sqrt(n_qubits * math.log(2.0) / horizon) / lipschitz
    return min(eta, float(np.nextafter(0.5 / lipschitz, 0.0)))


class OMDLearner:
    """Mirror descent with the entropy regularizer on the clipped domain K.

    Per round: gradient = l'(Tr(E x)) E, dual step y = exp(log x - eta grad),
    then divergence projection back onto K. With debug=True the per-step
    invariants (dual iterate PD, divergence bound, domain membership) are
    checked on every update.
    """

    def __init__(
        self,
        domain: ClippedDomain,
        eta: float,
        lipschitz: float = 2.0,
        debug: bool = False,
    ):
        if not 0.0 < eta < 0.5 / lipschitz:
            raise ValueError(f"eta must lie in (0, 1/(2L)) = (0, {0.5 / lipschitz:g}), got {eta:g}")
        self.domain = domain
        self.eta = eta
        self.lipschitz = lipschitz
        self.debug = debug
        self.x = maximally_mixed(domain.n_qubits)
        self._log_x = math.log(1.0 / domain.dim) * np.eye(domain.dim, dtype=complex)
        self.grad_bound = 0.0  # running max of ||grad_t||
        r0 = neg_entropy(self.x)
        self.entropy_lo = r0  # running entropy range of the iterates,
        self.entropy_hi = r0  # a proxy for the squared domain diameter

    def predict(self) -> np.ndarray:
        return self.x

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        z = expectation(effect, self.x)
        g = loss_subgrad(loss, z)
        if g == 0.0:
            return  # exp(log x - 0) projects back to x itself
        log_x = self._log_x if self._log_x is not None else mat_log(self.x)
        grad = g * effect
        self.grad_bound = max(self.grad_bound, spectral_norm(grad))
        y = mat_exp(log_x - self.eta * grad)
        x_new, log_x_new = _project_with_log(y, self.domain)
        if self.debug:
            self._check_step(y, x_new)
        self.x = x_new
        self._log_x = log_x_new
        r = neg_entropy(x_new)
        self.entropy_lo = min(self.entropy_lo, r)
        self.entropy_hi = max(self.entropy_hi, r)

    def _check_step(self, y: np.ndarray, x_new: np.ndarray) -> None:
        if float(np.min(np.linalg.eigvalsh(y))) <= 0.0:
            raise AssertionError("dual iterate lost positive definiteness")
        if bregman_div(self.x, y) > 0.5 * self.eta**2 * self.grad_bound**2 + 1e-9:
            raise AssertionError("per-step divergence bound violated")
        if not self.domain.contains(x_new):
            raise AssertionError("projected iterate left the domain")


def _project_with_log(y: np.ndarray, domain: ClippedDomain) -> tuple[np.ndarray, np.ndarray]:
    """Bregman-project y onto K, reusing the eigenbasis to also return log(x)."""
    w, v = hermitian_eig(y)
    if w[-1] <= 0.0:
        raise ValueError(f"projection input must be positive definite, min eigenvalue {w[-1]:.6g}")
    spec = project_spectrum(w, domain.floor)
    x = hermitianize((v * spec) @ v.conj().T)
    log_x = hermitianize((v * np.log(spec)) @ v.conj().T)
    return x, log_x


class ChannelOMDLearner(OMDLearner):
    """Mirror descent whose iterate is pushed through a fixed candidate channel.

    After the projection the channel is applied; if that leaves K (possible
    for non-unital channels) the iterate is mixed back toward the identity,
    moving it by at most 2/T in nuclear norm.
    """

    def __init__(
        self,
        domain: ClippedDomain,
        eta: float,
        channel: QuantumChannel,
        lipschitz: float = 2.0,
        debug: bool = False,
    ):
        super().__init__(domain, eta, lipschitz, debug)
        if channel.dim_in != domain.dim:
            raise ValueError("channel dimension does not match the domain")
        self.channel = channel

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        super().observe(effect, loss)
        pushed = apply_channel(self.channel, self.x)
        lam_min = float(np.min(np.linalg.eigvalsh(pushed)))
        if lam_min < self.domain.floor - 1e-13:
            pushed = mix_into_domain(pushed, self.domain)
        self.x = pushed
        self._log_x = None


@dataclass(frozen=True)
class MetaWeights:
    """Exponential weights over experts, stored in log space to dodge underflow."""

    log_weights: np.ndarray
    alpha: float

    @property
    def normalized(self) -> np.ndarray:
        w = np.exp(self.log_weights - np.max(self.log_weights))
        return w / np.sum(w)


def mw_predict(meta: MetaWeights, expert_outputs: list[np.ndarray]) -> np.ndarray:
    """Weight-averaged prediction; a convex combination, so it stays in K."""
    p = meta.normalized
    out = np.zeros_like(expert_outputs[0])
    for w, x in zip(p, expert_outputs):
        out += w * x
    return out


def mw_update(meta: MetaWeights, losses: np.ndarray) -> MetaWeights:
    """Multiplicative decay w_k <- w_k exp(-alpha loss_k), rescaled in log space."""
    lw = meta.log_weights - meta.alpha * np.asarray(losses, dtype=float)
    return MetaWeights(lw - np.max(lw), meta.alpha)


class DynamicLearner:
    """Exponential-weights meta over mirror-descent experts with a step-size grid.

    Each round the meta predicts the weighted average of the expert states,
    decays each expert's weight by its own realized loss, and forwards the
    round to every expert (each expert's gradient is evaluated at its own
    prediction).
    """

    def __init__(
        self,
        horizon: int,
        n_qubits: int,
        lipschitz: float = 2.0,
        alpha: float | None = None,
        debug: bool = False,
    ):
        self.domain = ClippedDomain(n_qubits, horizon)
        etas = eta_grid(horizon, lipschitz)
        self.experts: list[OMDLearner] = [
            OMDLearner(self.domain, eta, lipschitz, debug=debug) for eta in etas
        ]
        rate = alpha if alpha is not None else default_meta_rate(horizon, len(etas))
        self.meta = MetaWeights(np.zeros(len(etas)), rate)

    def predict(self) -> np.ndarray:
        return mw_predict(self.meta, [e.predict() for e in self.experts])

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        losses = np.array([loss_eval(loss, expectation(effect, e.predict())) for e in self.experts])
        self.meta = mw_update(self.meta, losses)
        for e in self.experts:
            e.observe(effect, loss)


class ChannelFamilyLearner:
    """Exponential-weights meta over the (step size, candidate channel) grid."""

    def __init__(
        self,
        horizon: int,
        n_qubits: int,
        channels: list[QuantumChannel],
        lipschitz: float = 2.0,
        alpha: float | None = None,
        debug: bool = False,
    ):
        if not channels:
            raise ValueError("channel family must be non-empty")
        self.domain = ClippedDomain(n_qubits, horizon)
        etas = eta_grid(horizon, lipschitz)
        self.experts: list[ChannelOMDLearner] = []
        self.expert_channel: list[int] = []
        self.expert_eta: list[float] = []
        for j, phi in enumerate(channels):
            for eta in etas:
                self.experts.append(ChannelOMDLearner(self.domain, eta, phi, lipschitz, debug))
                self.expert_channel.append(j)
                self.expert_eta.append(eta)
        rate = alpha if alpha is not None else default_meta_rate(horizon, len(self.experts))
        self.meta = MetaWeights(np.zeros(len(self.experts)), rate)

    def predict(self) -> np.ndarray:
        return mw_predict(self.meta, [e.predict() for e in self.experts])

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        losses = np.array([loss_eval(loss, expectation(effect, e.predict())) for e in self.experts])
        self.meta = mw_update(self.meta, losses)
        for e in self.experts:
            e.observe(effect, loss)

    def max_weight_channel(self) -> int:
        """Index (into the channel family) of the heaviest expert's channel."""
        return self.expert_channel[int(np.argmax(self.meta.log_weights))]


def rftl_step(grad_sum: np.ndarray, eta: float) -> np.ndarray:
    """Gibbs state exp(-eta grad_sum) / Tr(exp(-eta grad_sum)).

    The exponent is shifted by its top eigenvalue before exponentiating, which
    cancels in the normalization and prevents overflow.
    """
    w, v = hermitian_eig(-eta * grad_sum)
    e = np.exp(w - w[0])
    return hermitianize((v * e) @ v.conj().T / np.sum(e))


class RFTLLearner:
    """Follow-the-regularized-leader with the entropy regularizer.

    The iterate is the Gibbs state of the accumulated gradients; it lives in
    the full state set (no clipping needed since the closed form is already
    strictly positive).
    """

    def __init__(
        self,
        horizon: int,
        n_qubits: int,
        lipschitz: float = 2.0,
        eta: float | None = None,
    ):
        d = 2 ** n_qubits
        self.grad_sum = np.zeros((d, d), dtype=complex)
        self.eta = eta if eta is not None else default_rftl_rate(horizon, n_qubits, lipschitz)
        self._cached: np.ndarray | None = None

    def predict(self) -> np.ndarray:
        if self._cached is None:
            self._cached = rftl_step(self.grad_sum, self.eta)
        return self._cached

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        z = expectation(effect, self.predict())
        g = loss_subgrad(loss, z)
        if g != 0.0:
            self.grad_sum = self.grad_sum + g * effect
        self._cached = None


def geometric_intervals(horizon: int) -> list[tuple[int, int]]:
    """Dyadic covering {[i 2^k, (i+1) 2^k) : k >= 0, i >= 1, i 2^k <= horizon}.

    Intervals are half-open [start, end); every round t <= horizon belongs to
    exactly floor(log2 t) + 1 of them.
    """
    out: list[tuple[int, int]] = []
    size = 1
    while size <= horizon:
        start = size
        while start <= horizon:
            out.append((start, start + size))
            start += size
        size *= 2
    return out


class StronglyAdaptiveLearner:
    """Sleeping-experts meta over the dyadic interval covering.

    Each interval J hosts a fresh black-box learner (Gibbs/RFTL by default,
    started from the maximally mixed state and tuned to |J|). Awake experts
    are weighted by exp(alpha_J * (cumulative meta loss - cumulative expert
    loss within J)) times a prior proportional to 1/(|J| * #intervals of that
    length); the per-interval rate is sqrt(8 ln T / |J|). Losses must map to
    [0, 1], which holds for both built-in losses.
    """

    def __init__(
        self,
        horizon: int,
        n_qubits: int,
        lipschitz: float = 2.0,
        blackbox_factory=None,
    ):
        self.horizon = horizon
        self.n_qubits = n_qubits
        if blackbox_factory is None:
            blackbox_factory = lambda length: RFTLLearner(length, n_qubits, lipschitz)
        self.blackbox_factory = blackbox_factory

        intervals = geometric_intervals(horizon)
        by_len = Counter(end - start for start, end in intervals)
        raw = {j: 1.0 / ((j[1] - j[0]) * by_len[j[1] - j[0]]) for j in intervals}
        z = sum(raw.values())
        self._log_prior = {j: math.log(raw[j] / z) for j in intervals}
        self._alpha = {j: math.sqrt(8.0 * math.log(horizon) / (j[1] - j[0])) for j in intervals}
        self._starting: dict[int, list[tuple[int, int]]] = {}
        for j in intervals:
            self._starting.setdefault(j[0], []).append(j)

        self.t = 1
        self.live: dict[tuple[int, int], dict] = {}
        self._round_cache: tuple[int, np.ndarray, dict] | None = None
        self._wake()

    def _wake(self) -> None:
        for j in self._starting.get(self.t, []):
            self.live[j] = {
                "learner": self.blackbox_factory(j[1] - j[0]),
                "log_w": self._log_prior[j],
            }

    def predict(self) -> np.ndarray:
        if self._round_cache is not None and self._round_cache[0] == self.t:
            return self._round_cache[1]
        keys = list(self.live.keys())
        lw = np.array([self.live[j]["log_w"] for j in keys])
        p = np.exp(lw - np.max(lw))
        p /= np.sum(p)
        preds = {j: self.live[j]["learner"].predict() for j in keys}
        out = np.zeros((2 ** self.n_qubits, 2 ** self.n_qubits), dtype=complex)
        for w, j in zip(p, keys):
            out += w * preds[j]
        self._round_cache = (self.t, out, preds)
        return out

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        meta_pred = self.predict()
        preds = self._round_cache[2]
        meta_loss = loss_eval(loss, expectation(effect, meta_pred))
        for j, slot in self.live.items():
            expert_loss = loss_eval(loss, expectation(effect, preds[j]))
            slot["log_w"] += self._alpha[j] * (meta_loss - expert_loss)
            slot["learner"].observe(effect, loss)
        self.t += 1
        self._round_cache = None
        for j in [j for j in self.live if j[1] <= self.t]:
            del self.live[j]
        self._wake()


class LazyUpdateWrapper:
    """Mistake-economizing wrapper: forward feedback only on large losses.

    The inner learner is updated only when the realized loss exceeds
    2 epsilon / 3; a round counts as a mistake when the predicted acceptance
    probability misses the true one by more than epsilon (known only when the
    loss descriptor carries the simulation's true probability).
    """

    def __init__(self, inner, epsilon: float):
        if epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        self.inner = inner
        self.epsilon = epsilon
        self.rounds = 0
        self.updates = 0
        self.mistakes = 0

    def predict(self) -> np.ndarray:
        return self.inner.predict()

    def observe(self, effect: np.ndarray, loss: LossDescriptor) -> None:
        z = expectation(effect, self.inner.predict())
        self.rounds += 1
        if loss.true_prob is not None and abs(z - loss.true_prob) > self.epsilon:
            self.mistakes += 1
        if loss_eval(loss, z) > 2.0 * self.epsilon / 3.0:
            self.updates += 1
            self.inner.observe(effect, loss)


def lazy_update_wrapper(inner, epsilon: float) -> LazyUpdateWrapper:
    return LazyUpdateWrapper(inner, epsilon)
