"""Experiment orchestration: configs, trial loops, regret accounting, CSV output.

A run is fully determined by (config, seed). Trial i draws from a dedicated
counter-based Philox stream keyed by (seed, i), so adding trials never
perturbs earlier ones. Within a trial the draw order is fixed: Hamiltonian
(drift variant only), then the ground-truth state sequence, then per round
one measurement effect followed by one feedback-noise draw.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .channels import QuantumChannel
from .environments import (
    FeedbackRule,
    GroundTruthProcess,
    LossDescriptor,
    gen_effect,
    gen_feedback,
    gen_state_sequence,
    loss_eval,
)
from .learners import (
    ChannelFamilyLearner,
    DynamicLearner,
    LazyUpdateWrapper,
    RFTLLearner,
    StronglyAdaptiveLearner,
    expectation,
)
from .linalg import nuclear_norm, random_hermitian, spectral_norm

LEARNER_KINDS = ("rftl", "dynamic", "adaptive", "channel_family", "lazy")
RATIO_MODES = ("kshift", "path", "adaptive_path")
CSV_HEADER = "t,learner_loss,comparator_loss,cum_regret,avg_regret,ratio,mistakes,path_length"
AGG_METRICS = ("cum_regret", "avg_regret", "ratio", "mistakes", "path_length")
AGG_STATS = ("mean", "std", "min", "max")


class ConfigError(ValueError):
    """Invalid experiment configuration; reported before any computation."""


@dataclass(frozen=True)
class ExperimentConfig:
    n_qubits: int = 1
    horizon: int = 100
    seed: int = 0
    trials: int = 1
    env_variant: str = "static"
    k: int = 0
    h_scale: float = 1.0
    dt: float = 0.05
    channel_file: str = ""
    learner: str = "rftl"
    inner: str = "adaptive"
    channel_files: tuple[str, ...] = ()
    loss: str = "l2"
    epsilon: float = 0.0
    out_dir: str = "out"
    ratio_mode: str = "kshift"

    @property
    def lipschitz(self) -> float:
        return 1.0 if self.loss == "l1" else 2.0

    def validate(self) -> None:
        if self.horizon < 2:
            raise ConfigError("horizon must be >= 2")
        if not 1 <= self.n_qubits <= 6:
            raise ConfigError("n_qubits must be in [1, 6]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.env_variant not in ("static", "kshift", "hamiltonian", "channel"):
            raise ConfigError(f"unknown environment variant {self.env_variant!r}")
        if self.learner not in LEARNER_KINDS:
            raise ConfigError(f"unknown learner {self.learner!r}")
        if self.loss not in ("l1", "l2"):
            raise ConfigError(f"unknown loss {self.loss!r}")
        if self.ratio_mode not in RATIO_MODES:
            raise ConfigError(f"unknown ratio mode {self.ratio_mode!r}")
        if self.env_variant == "kshift" and self.k > self.horizon:
            raise ConfigError("k must not exceed the horizon")
        if self.env_variant == "channel" and not self.channel_file:
            raise ConfigError("channel environment needs channel_file")
        if self.learner == "channel_family" and not self.channel_files:
            raise ConfigError("channel_family learner needs channel_files")
        if self.learner == "lazy":
            if self.epsilon <= 0.0:
                raise ConfigError("lazy learner needs epsilon > 0")
            if self.inner not in ("rftl", "dynamic", "adaptive"):
                raise ConfigError(f"unsupported inner learner {self.inner!r}")
        if not 0.0 <= self.epsilon <= 3.0:
            raise ConfigError("epsilon must be in [0, 3]")
        for path in self._referenced_files():
            if not os.path.exists(path):
                raise ConfigError(f"channel file not found: {path}")

    def _referenced_files(self) -> list[str]:
        paths = [p for p in (self.channel_file,) if p]
        paths += [p for p in self.channel_files if p != "identity"]
        return paths


# Config file schema: section -> {key: config field}.
_SCHEMA = {
    "experiment": {"n_qubits": "n_qubits", "horizon": "horizon", "seed": "seed", "trials": "trials"},
    "environment": {
        "variant": "env_variant",
        "k": "k",
        "h_scale": "h_scale",
        "dt": "dt",
        "channel_file": "channel_file",
    },
    "learner": {
        "kind": "learner",
        "inner": "inner",
        "channel_files": "channel_files",
        "loss": "loss",
        "epsilon": "epsilon",
    },
    "output": {"dir": "out_dir", "ratio_mode": "ratio_mode"},
}
_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def parse_config(path: str) -> ExperimentConfig:
    """Read a sectioned key = value file; unknown sections or keys are errors."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, object] = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            name = _SCHEMA[section][key]
            values[name] = _coerce(name, raw)
    cfg = ExperimentConfig(**values)
    cfg.validate()
    return cfg


def _coerce(name: str, raw: str) -> object:
    kind = _FIELD_TYPES[name]
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "tuple[str, ...]":
            return tuple(s.strip() for s in raw.split(",") if s.strip())
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


def emit_config(cfg: ExperimentConfig, path: str) -> None:
    """Write the canonical form; parse_config(emit_config(cfg)) round-trips."""
    lines = []
    for section, keys in _SCHEMA.items():
        lines.append(f"[{section}]")
        for key, name in keys.items():
            value = getattr(cfg, name)
            if isinstance(value, tuple):
                value = ", ".join(value)
            lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
        lines.append("")
    with open(path, "w") as fh:
        fh.write("\n".join(lines))


@dataclass
class RegretLedger:
    """Per-round accounting for one trial; all arrays have length T."""

    t: np.ndarray
    learner_loss: np.ndarray
    comparator_loss: np.ndarray
    cum_regret: np.ndarray
    avg_regret: np.ndarray
    ratio: np.ndarray
    mistakes: np.ndarray
    path_length: np.ndarray
    abs_error: np.ndarray = field(repr=False, default=None)
    n_qubits: int = 1
    epsilon: float = 0.0
    ratio_mode: str = "kshift"


def ratio_curves(ledger: RegretLedger, mode: str) -> np.ndarray:
    """Regret normalized by the mode's theoretical growth envelope.

    kshift:        regret_t / sqrt(t ln t)
    path:          regret_t / sqrt(t (n + ln t) P_t)
    adaptive_path: regret_t / sqrt(t P_t)

    Natural logs; the running path length is clamped below 1 (the regime the
    bounds assume), and a zero denominator (t = 1 in kshift mode) yields 0.
    """
    if mode not in RATIO_MODES:
        raise ValueError(f"unknown ratio mode {mode!r}")
    t = ledger.t.astype(float)
    if mode == "kshift":
        denom = np.sqrt(t * np.log(t))
    else:
        p = np.maximum(ledger.path_length, 1.0)
        if mode == "path":
            denom = np.sqrt(t * (ledger.n_qubits + np.log(t)) * p)
        else:
            denom = np.sqrt(t * p)
    out = np.zeros_like(t)
    nz = denom > 0.0
    out[nz] = ledger.cum_regret[nz] / denom[nz]
    return out


def mistake_count(ledger: RegretLedger, epsilon: float) -> int:
    """Rounds where the predicted probability missed the true one by > epsilon."""
    return int(np.sum(ledger.abs_error > epsilon))


def load_channel(spec: str, dim: int) -> QuantumChannel:
    """Resolve a channel reference: the builtin name 'identity' or an .npz file.

    Channel files store Kraus operators as arrays named kraus_0, kraus_1, ...
    """
    if spec == "identity":
        return QuantumChannel.identity(dim)
    data = np.load(spec)
    names = sorted((n for n in data.files if n.startswith("kraus_")), key=lambda s: int(s.split("_")[1]))
    if not names:
        raise ConfigError(f"{spec} holds no kraus_<i> arrays")
    return QuantumChannel(tuple(np.asarray(data[n], dtype=complex) for n in names), name=spec)


def save_channel(phi: QuantumChannel, path: str) -> None:
    np.savez(path, **{f"kraus_{i}": k for i, k in enumerate(phi.kraus)})


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Philox stream keyed by (seed, trial); counter-based and splittable."""
    return np.random.Generator(np.random.Philox(key=np.array([seed, trial], dtype=np.uint64)))


def _make_learner(cfg: ExperimentConfig, family: list[QuantumChannel]):
    lip = cfg.lipschitz
    kind = cfg.learner
    if kind == "lazy":
        inner = _make_plain(cfg.inner, cfg, lip)
        return LazyUpdateWrapper(inner, cfg.epsilon)
    if kind == "channel_family":
        return ChannelFamilyLearner(cfg.horizon, cfg.n_qubits, family, lip)
    return _make_plain(kind, cfg, lip)


def _make_plain(kind: str, cfg: ExperimentConfig, lip: float):
    if kind == "rftl":
        return RFTLLearner(cfg.horizon, cfg.n_qubits, lip)
    if kind == "dynamic":
        return DynamicLearner(cfg.horizon, cfg.n_qubits, lip)
    if kind == "adaptive":
        return StronglyAdaptiveLearner(cfg.horizon, cfg.n_qubits, lip)
    raise ConfigError(f"unknown learner {kind!r}")


def _build_process(cfg: ExperimentConfig, env_channel, rng: np.random.Generator) -> GroundTruthProcess:
    if cfg.env_variant == "hamiltonian":
        d = 2 ** cfg.n_qubits
        h = random_hermitian(d, rng)
        h = h * (cfg.h_scale / spectral_norm(h))
        return GroundTruthProcess(
            "hamiltonian", cfg.n_qubits, cfg.horizon, hamiltonian=h, dt=cfg.dt
        )
    if cfg.env_variant == "kshift":
        return GroundTruthProcess("kshift", cfg.n_qubits, cfg.horizon, k=cfg.k)
    if cfg.env_variant == "channel":
        return GroundTruthProcess("channel", cfg.n_qubits, cfg.horizon, channel=env_channel)
    return GroundTruthProcess("static", cfg.n_qubits, cfg.horizon)


def run_trial(cfg: ExperimentConfig, trial: int) -> RegretLedger:
    """One deterministic trial: simulate T rounds and account regret."""
    d = 2 ** cfg.n_qubits
    env_channel = load_channel(cfg.channel_file, d) if cfg.channel_file else None
    family = [load_channel(s, d) for s in cfg.channel_files]
    rng = trial_rng(cfg.seed, trial)
    states = gen_state_sequence(_build_process(cfg, env_channel, rng), rng)
    learner = _make_learner(cfg, family)
    rule = FeedbackRule(cfg.epsilon)

    t_max = cfg.horizon
    learner_loss = np.empty(t_max)
    comparator_loss = np.empty(t_max)
    abs_error = np.empty(t_max)
    for t in range(t_max):
        effect = gen_effect(cfg.n_qubits, rng)
        rho = states[t]
        x = learner.predict()
        p_true = expectation(effect, rho)
        b = gen_feedback(effect, rho, rule, rng)
        desc = LossDescriptor(cfg.loss, b, true_prob=p_true)
        z = expectation(effect, x)
        learner_loss[t] = loss_eval(desc, z)
        comparator_loss[t] = loss_eval(desc, p_true)
        abs_error[t] = abs(z - p_true)
        learner.observe(effect, desc)

    steps = np.arange(1, t_max + 1)
    cum = np.cumsum(learner_loss) - np.cumsum(comparator_loss)
    moves = np.array([0.0] + [nuclear_norm(b - a) for a, b in zip(states, states[1:])])
    ledger = RegretLedger(
        t=steps,
        learner_loss=learner_loss,
        comparator_loss=comparator_loss,
        cum_regret=cum,
        avg_regret=cum / steps,
        ratio=np.zeros(t_max),
        mistakes=(
            np.cumsum(abs_error > cfg.epsilon).astype(np.int64)
            if cfg.epsilon > 0.0
            else np.zeros(t_max, dtype=np.int64)
        ),
        path_length=np.cumsum(moves),
        abs_error=abs_error,
        n_qubits=cfg.n_qubits,
        epsilon=cfg.epsilon,
        ratio_mode=cfg.ratio_mode,
    )
    ledger.ratio = ratio_curves(ledger, cfg.ratio_mode)
    return ledger


def run_experiment(cfg: ExperimentConfig) -> list[RegretLedger]:
    """All configured trials, sequentially; deterministic given (cfg, seed)."""
    cfg.validate()
    return [run_trial(cfg, i) for i in range(cfg.trials)]


def aggregate_trials(ledgers: list[RegretLedger]) -> dict[str, np.ndarray]:
    """Pointwise stats across trials: mean, std, min and max per metric.

    Max curves back the bound-checking plots (regret is a one-sided bound);
    mean with spread backs the comparison plots.
    """
    if not ledgers:
        raise ValueError("no ledgers to aggregate")
    out: dict[str, np.ndarray] = {"t": ledgers[0].t.copy()}
    for metric in AGG_METRICS:
        stack = np.stack([getattr(led, metric).astype(float) for led in ledgers])
        out[f"{metric}_mean"] = stack.mean(axis=0)
        out[f"{metric}_std"] = stack.std(axis=0)
        out[f"{metric}_min"] = stack.min(axis=0)
        out[f"{metric}_max"] = stack.max(axis=0)
    return out


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def emit_csv(ledger: RegretLedger, path: str) -> None:
    """One row per round under the fixed schema; byte-stable given the inputs."""
    rows = [CSV_HEADER]
    for i in range(len(ledger.t)):
        rows.append(
            ",".join(
                _fmt(col[i])
                for col in (
                    ledger.t,
                    ledger.learner_loss,
                    ledger.comparator_loss,
                    ledger.cum_regret,
                    ledger.avg_regret,
                    ledger.ratio,
                    ledger.mistakes,
                    ledger.path_length,
                )
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def emit_aggregate_csv(agg: dict[str, np.ndarray], path: str) -> None:
    cols = ["t"] + [f"{m}_{s}" for m in AGG_METRICS for s in AGG_STATS]
    rows = [",".join(cols)]
    for i in range(len(agg["t"])):
        rows.append(",".join(_fmt(agg[c][i]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(rows) + "\n")


def best_fixed_qubit_loss(
    effects: list[np.ndarray], descs: list[LossDescriptor], refinements: int = 3
) -> float:
    """Oracle for n = 1: loss of the best fixed state, by Bloch-ball grid search.

    States are (I + r . sigma)/2 with |r| <= 1, so Tr(E x) is affine in r and
    the search is over a 3-cube clipped to the ball, refined around the best
    point. Small instances only.
    """
    traces = np.array([np.trace(e).real for e in effects])
    paulis = [
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
        np.array([[1, 0], [0, -1]], dtype=complex),
    ]
    coeff = np.array([[np.sum(p.conj() * e).real for p in paulis] for e in effects])
    targets = np.array([d.target for d in descs])
    is_l1 = descs[0].kind == "l1"

    def total(points: np.ndarray) -> np.ndarray:
        z = 0.5 * (traces[None, :] + points @ coeff.T)
        diff = z - targets[None, :]
        return np.sum(np.abs(diff) if is_l1 else diff * diff, axis=1)

    center = np.zeros(3)
    half = 1.0
    best = np.inf
    for _ in range(refinements + 1):
        axis = np.linspace(-half, half, 11)
        grid = np.stack(np.meshgrid(axis, axis, axis, indexing="ij"), axis=-1).reshape(-1, 3)
        pts = center[None, :] + grid
        norms = np.linalg.norm(pts, axis=1)
        pts[norms > 1.0] /= norms[norms > 1.0, None]
        vals = total(pts)
        idx = int(np.argmin(vals))
        best = min(best, float(vals[idx]))
        center = pts[idx]
        half /= 5.0
    return best


def make_variant(cfg: ExperimentConfig, **overrides) -> ExperimentConfig:
    """Copy with overrides, re-validated."""
    out = replace(cfg, **overrides)
    out.validate()
    return out
