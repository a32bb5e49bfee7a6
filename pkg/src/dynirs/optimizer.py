"""Alternating optimization of beamformers, IRS phases and the IRS element split.

Each inner step picks SVD receive combiners, regularized transmit
beamformers and per-element phases that co-phase every IRS cascade with the
direct path.  The outer loop re-splits the IRS from the SINR ratio and stops
once the weighted MSE objective settles.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._random import complex_normal
from ._validation import as_generator, check_channel_set
from .channel import ChannelSet
from .composite import (
    Metrics,
    Partition,
    PhaseShifts,
    allocation_weight,
    composite_channels,
    fixed_partition,
    mmse_scale,
    mse,
    objective,
    partition_from_eta,
    sinr,
)
from .config import ScenarioConfig

MODES = ("dynamic", "fixed")


class DegenerateChannelError(ArithmeticError):
    """A desired channel vanished, so no beamformer can be formed."""


@dataclass(frozen=True)
class BeamformerState:
    w_b: np.ndarray   # BS transmit, length L
    w_r: np.ndarray   # radar transmit, length Q
    w_u: np.ndarray   # UE combiner, length M
    w_rr: np.ndarray  # radar receive combiner, length Q
    phases: PhaseShifts
    partition: Partition

    def repartition(self, partition: Partition) -> "BeamformerState":
        """Move to a new split; each element keeps its phase."""
        return replace(self, partition=partition, phases=PhaseShifts.from_full(self.phases.full, partition))


@dataclass(frozen=True)
class IterationRecord:
    f: float
    gamma_c: float
    gamma_s: float
    eta: float
    n_comm: int
    n_sense: int


@dataclass
class IterationTrace:
    """One record per outer iteration k = 0, 1, ...; ``iterations`` is the last k."""

    records: list = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    def f_values(self) -> np.ndarray:
        return np.array([r.f for r in self.records])


def receive_beamformer(h_des):
    """Dominant left singular vector of ``h_des`` and its singular value.

    The largest-magnitude entry is rotated to be real positive.  A zero
    matrix gives the first basis vector and singular value 0.
    """
    u, s, _ = np.linalg.svd(h_des)
    w = u[:, 0]
    if s[0] == 0:
        w = np.zeros(h_des.shape[0], dtype=complex)
        w[0] = 1.0
        return w, 0.0
    j = np.argmax(np.abs(w))
    mag = np.abs(w[j])
    w = w * (mag / w[j])
    w[j] = mag
    return w, float(s[0])


def regularization_mu(h_int, h_des) -> float:
    """Interference-to-desired channel power ratio ``tr(Hi Hi^H) / tr(Hd Hd^H)``."""
    p_des = np.vdot(h_des, h_des).real
    if p_des == 0:
        raise DegenerateChannelError("desired channel is identically zero")
    return float(np.vdot(h_int, h_int).real / p_des)


def regularized_direction(h_des, w_rx, mu):
    """``(H^H w w^H H + mu I)^-1 H^H w`` via its rank-one closed form ``b / (mu + ||b||^2)``."""
    b = h_des.conj().T @ w_rx
    return b / (mu + np.vdot(b, b).real)


def transmit_beamformer(h_des, w_rx, mu, p_max):
    """Regularized transmit beamformer rescaled to ``||w||^2 = p_max``.

    Returns zeros when the combiner is orthogonal to the channel.
    """
    w = regularized_direction(h_des, w_rx, mu)
    norm = np.linalg.norm(w)
    if norm == 0:
        return np.zeros_like(w)
    return w * (np.sqrt(p_max) / norm)


def _align(direct, cascade):
    # Rotate every cascade coefficient onto the direct term's phase.
    ref = np.angle(direct) if direct != 0 else 0.0
    phi = np.where(cascade != 0, ref - np.angle(cascade), 0.0)
    return np.mod(phi, 2 * np.pi)


def phase_shifts_comm(ch: ChannelSet, w_b, w_u, p: Partition) -> np.ndarray:
    c = p.comm
    direct = np.vdot(w_u, ch.bu @ w_b)
    cascade = (w_u.conj() @ ch.iu[:, c]) * (ch.bi[c, :] @ w_b)
    return _align(direct, cascade)


def phase_shifts_sense(ch: ChannelSet, w_r, w_rr, p: Partition, rho: float) -> np.ndarray:
    s = p.sense
    echo = rho * (w_rr.conj() @ ch.tr)  # combined radar receive response per reflection point
    direct = echo @ (ch.rt @ w_r)
    cascade = (echo @ ch.it[:, s]) * (ch.ri[s, :] @ w_r)
    return _align(direct, cascade)


def inner_step(ch: ChannelSet, state: BeamformerState, config: ScenarioConfig) -> BeamformerState:
    """One pass of combiners, transmit beamformers, then phases; the split is unchanged."""
    p = state.partition
    comp = composite_channels(ch, state.phases, p, config.reflection_coeff)
    w_u, _ = receive_beamformer(comp.des_comm)
    w_rr, _ = receive_beamformer(comp.des_sense)
    mu_c = regularization_mu(comp.int_comm, comp.des_comm)
    mu_s = regularization_mu(comp.int_sense, comp.des_sense)
    w_b = transmit_beamformer(comp.des_comm, w_u, mu_c, config.bs_power)
    w_r = transmit_beamformer(comp.des_sense, w_rr, mu_s, config.radar_power)
    if not (np.any(w_b) and np.any(w_r)):
        raise DegenerateChannelError("receive combiner orthogonal to its desired channel")
    phases = PhaseShifts(
        phase_shifts_comm(ch, w_b, w_u, p),
        phase_shifts_sense(ch, w_r, w_rr, p, config.reflection_coeff),
    )
    return BeamformerState(w_b, w_r, w_u, w_rr, phases, p)


def evaluate(ch: ChannelSet, state: BeamformerState, config: ScenarioConfig, eta: float) -> Metrics:
    """SINRs for the state's combiners and MSEs for the MMSE-scaled combiners."""
    comp = composite_channels(ch, state.phases, state.partition, config.reflection_coeff)
    c_args = (comp.des_comm, comp.int_comm, state.w_u, state.w_b, state.w_r, config.ue_noise)
    s_args = (comp.des_sense, comp.int_sense, state.w_rr, state.w_r, state.w_b, config.radar_noise)
    gamma_c, gamma_s = sinr(*c_args), sinr(*s_args)
    mse_c = mse(comp.des_comm, comp.int_comm, mmse_scale(*c_args) * state.w_u, *c_args[3:])
    mse_s = mse(comp.des_sense, comp.int_sense, mmse_scale(*s_args) * state.w_rr, *s_args[3:])
    return Metrics(gamma_c, gamma_s, mse_c, mse_s, eta, objective(eta, mse_c, mse_s))


def initial_state(dims, config: ScenarioConfig, rng: np.random.Generator, partition: Partition):
    """Circular-Gaussian beamformers on their power spheres, uniform phases."""
    g_b, g_r, g_u, g_rr, g_phi = rng.spawn(5)

    def sphere(gen, n, power):
        v = complex_normal(gen, n)
        return v * np.sqrt(power) / np.linalg.norm(v)

    phases = 2 * np.pi * g_phi.random(dims["N"])
    return BeamformerState(
        w_b=sphere(g_b, dims["L"], config.bs_power),
        w_r=sphere(g_r, dims["Q"], config.radar_power),
        w_u=sphere(g_u, dims["M"], 1.0),
        w_rr=sphere(g_rr, dims["Q"], 1.0),
        phases=PhaseShifts.from_full(phases, partition),
        partition=partition,
    )


def joint_optimize(ch: ChannelSet, config: ScenarioConfig, rng=None, mode: str = "dynamic"):
    """Run the outer allocation loop to convergence or ``config.max_iterations``.

    The initial split comes from the SINRs of the random starting point,
    evaluated under the N/2 split.  Every outer iteration then runs
    :func:`inner_step`, measures the SINRs and MSEs under the split in force,
    updates the weight and split, and scores ``f`` with the new weight.  The
    random start itself is not scored.  ``fixed`` mode computes the same
    weight but keeps the split at N/2, so ``f`` is comparable across modes.

    Returns ``(state, metrics, trace)`` for the lowest ``f`` seen.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rng = as_generator(rng)
    n = ch.dims["N"]
    half = fixed_partition(n)
    state = initial_state(ch.dims, config, rng, half)

    m0 = evaluate(ch, state, config, half.eta)
    eta = allocation_weight(m0.gamma_c, m0.gamma_s, config.balance)
    if mode == "dynamic":
        state = state.repartition(partition_from_eta(n, eta))

    trace = IterationTrace()
    best_state = best = None
    for _ in range(config.max_iterations):
        state = inner_step(ch, state, config)
        m = evaluate(ch, state, config, eta)
        raw = allocation_weight(m.gamma_c, m.gamma_s, config.balance)
        eta = config.eta_smoothing * eta + (1 - config.eta_smoothing) * raw
        if mode == "dynamic":
            state = state.repartition(partition_from_eta(n, eta))
        m = replace(m, eta=eta, f=objective(eta, m.mse_c, m.mse_s))
        trace.records.append(_record(m, state.partition))
        if best is None or m.f < best.f:
            best_state, best = state, m
        if len(trace.records) > 1 and abs(m.f - trace.records[-2].f) <= config.convergence_tol:
            trace.converged = True
            break
    return best_state, best, trace


def _record(m: Metrics, p: Partition) -> IterationRecord:
    return IterationRecord(m.f, m.gamma_c, m.gamma_s, m.eta, p.n_comm, p.n_sense)


class JointAllocationOptimizer(BaseEstimator):
    """Estimator wrapper around :func:`joint_optimize`.

    Parameters
    ----------
    mode : {"dynamic", "fixed"}
        Re-split the IRS from the SINR ratio every iteration, or hold the
        N/2 split.
    config : ScenarioConfig, optional
        Powers, noise levels, reflection coefficient and loop controls.
        Array sizes are taken from the channels passed to ``fit``.
    random_state : int, Generator or None
        Seeds the random initialization.

    Attributes
    ----------
    state_ : BeamformerState
    metrics_ : Metrics
    trace_ : IterationTrace
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, mode="dynamic", config=None, random_state=None):
        self.mode = mode
        self.config = config
        self.random_state = random_state

    def _config(self):
        return self.config if self.config is not None else ScenarioConfig()

    def fit(self, X, y=None):
        ch = check_channel_set(X)
        self.state_, self.metrics_, self.trace_ = joint_optimize(
            ch, self._config(), as_generator(self.random_state), self.mode
        )
        self.n_iter_ = self.trace_.iterations
        self.converged_ = self.trace_.converged
        return self

    def evaluate(self, X) -> Metrics:
        """Metrics of the fitted beamformers and phases on channels ``X``."""
        check_is_fitted(self, "state_")
        ch = check_channel_set(X)
        return evaluate(ch, self.state_, self._config(), self.metrics_.eta)

    def score(self, X, y=None) -> float:
        """Negated weighted MSE objective, so larger is better."""
        return -self.evaluate(X).f
