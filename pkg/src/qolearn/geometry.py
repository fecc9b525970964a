"""State-space geometry shared by all learners.

The learners operate either on the full set of n-qubit states (trace-1 PSD
matrices) or on its clipped version K = {x : Tr x = 1, x >= floor*I} with
floor = 1/(T*2^n), which keeps matrix logarithms bounded over a horizon T.
The regularizer is the negative von Neumann entropy R(x) = sum lambda*log(lambda)
(natural log), whose Bregman divergence is the quantum relative entropy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import hermitian_eig, hermitianize, mat_log, trace_inner

PROJECTION_TOL = 1e-12
PROJECTION_MAX_ITER = 200


@dataclass(frozen=True)
class ClippedDomain:
    """The entropy-friendly domain K: unit trace with eigenvalues >= 1/(horizon*2^n)."""

    n_qubits: int
    horizon: int

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    @property
    def floor(self) -> float:
        return 1.0 / (self.horizon * self.dim)

    def contains(self, x: np.ndarray, trace_tol: float = 1e-9, floor_slack: float = 1e-11) -> bool:
        if abs(np.trace(x).real - 1.0) > trace_tol:
            return False
        return float(np.min(np.linalg.eigvalsh(x))) >= self.floor - floor_slack


def maximally_mixed(n_qubits: int) -> np.ndarray:
    d = 2 ** n_qubits
    return np.eye(d, dtype=complex) / d


def binary_entropy(p: float) -> float:
    """H(p) = -p log p - (1-p) log(1-p), natural log, H(0) = H(1) = 0."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log(p) - (1.0 - p) * np.log(1.0 - p))


def neg_entropy(x: np.ndarray) -> float:
    """R(x) = sum lambda log lambda; the negative von Neumann entropy.

    Requires a strictly positive spectrum (membership in any ClippedDomain
    suffices).
    """
    w = np.linalg.eigvalsh(x)
    if w[0] <= 0.0:
        raise ValueError(f"neg_entropy needs a positive spectrum, got min eigenvalue {w[0]:.6g}")
    return float(np.sum(w * np.log(w)))


def grad_neg_entropy(x: np.ndarray) -> np.ndarray:
    """Gradient of R: I + log(x)."""
    return np.eye(x.shape[0], dtype=complex) + mat_log(x)


def bregman_div(x: np.ndarray, y: np.ndarray) -> float:
    """Bregman divergence of R: R(x) - R(y) - <I + log y, x - y>.

    x must be PSD with unit trace; y any Hermitian positive definite matrix.
    Simplifies to Tr(x log x) - Tr(x log y) - Tr(x) + Tr(y), which is the
    quantum relative entropy when Tr(y) = 1.
    """
    log_y = mat_log(y)
    wx = np.linalg.eigvalsh(x)
    wx = wx[wx > 0.0]
    r_x = float(np.sum(wx * np.log(wx)))
    cross = trace_inner(x, log_y).real
    return r_x - cross - np.trace(x).real + np.trace(y).real


def mix_into_domain(x: np.ndarray, domain: ClippedDomain) -> np.ndarray:
    """Affine mix (1 - 1/T) x + I/(T 2^n); maps states into K exactly."""
    t = domain.horizon
    return (1.0 - 1.0 / t) * x + np.eye(domain.dim, dtype=complex) / (t * domain.dim)


def project_spectrum(mu: np.ndarray, floor: float) -> np.ndarray:
    """Solve min_x sum x_i log(x_i/mu_i) s.t. sum x = 1, x >= floor.

    KKT gives x_i = max(floor, c*mu_i) with c fixed by the trace constraint;
    sum_i max(floor, c*mu_i) is nondecreasing in c, so c is found by bisection
    and then refined exactly on the identified clipped set.
    """
    d = mu.shape[0]
    if d * floor > 1.0 + 1e-12:
        raise ValueError(f"floor {floor:g} infeasible for dimension {d}")
    if d * floor >= 1.0 - 1e-15:
        return np.full(d, floor)

    def total(c: float) -> float:
        return float(np.sum(np.maximum(floor, c * mu)))

    lo, hi = 0.0, 1.0 / float(np.sum(mu))
    while total(hi) < 1.0:  # guard; equality can be off by roundoff
        hi *= 2.0
    for _ in range(PROJECTION_MAX_ITER):
        mid = 0.5 * (lo + hi)
        if total(mid) < 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= PROJECTION_TOL * max(hi, 1.0):
            break
    else:
        raise RuntimeError(
            f"projection bisection did not converge; bracket [{lo:.17g}, {hi:.17g}]"
        )
    # Active-set refinement: re-solve the trace constraint exactly on the
    # clipped set identified by the bisection estimate.
    c = hi
    for _ in range(d + 1):
        clipped = c * mu <= floor
        free_mass = float(np.sum(mu[~clipped]))
        if free_mass <= 0.0:
            break
        c_new = (1.0 - floor * int(np.sum(clipped))) / free_mass
        if c_new == c:
            break
        c = c_new
    return np.maximum(floor, c * mu)


def bregman_project(y: np.ndarray, domain: ClippedDomain) -> np.ndarray:
    """argmin_{x in K} B_R(x || y) for Hermitian positive definite y.

    The divergence and the constraints are unitarily covariant, so the
    minimizer shares y's eigenbasis and only the spectrum needs solving.
    """
    w, v = hermitian_eig(y)
    if w[-1] <= 0.0:
        raise ValueError(f"projection input must be positive definite, min eigenvalue {w[-1]:.6g}")
    x_spec = project_spectrum(w, domain.floor)
    return hermitianize((v * x_spec) @ v.conj().T)
