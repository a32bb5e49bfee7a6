"""Effective channels under an IRS partition, and the SINR / MSE figures of merit.

IRS elements ``0 .. n_comm-1`` reflect for the BS->UE link and elements
``n_comm .. N-1`` for the radar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet

RATIO_CLAMP = (1e-12, 1e12)


@dataclass(frozen=True)
class Partition:
    n_comm: int
    n_sense: int
    eta: float

    @property
    def n_total(self) -> int:
        return self.n_comm + self.n_sense

    @property
    def comm(self) -> slice:
        return slice(0, self.n_comm)

    @property
    def sense(self) -> slice:
        return slice(self.n_comm, self.n_comm + self.n_sense)


def round_half_away(x: float) -> int:
    return int(math.floor(abs(x) + 0.5)) * (1 if x >= 0 else -1)


def partition_from_eta(n_elements: int, eta: float) -> Partition:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    n_comm = min(max(round_half_away(n_elements * eta), 0), n_elements)
    return Partition(n_comm, n_elements - n_comm, float(eta))


def fixed_partition(n_elements: int) -> Partition:
    """Even split; odd sizes give the extra element to sensing."""
    n_comm = n_elements // 2
    return Partition(n_comm, n_elements - n_comm, n_comm / n_elements)


@dataclass(frozen=True)
class PhaseShifts:
    """Per-element IRS phases in [0, 2 pi), split by the partition."""

    comm: np.ndarray
    sense: np.ndarray

    @classmethod
    def from_full(cls, phases, partition: Partition) -> "PhaseShifts":
        phases = np.mod(np.asarray(phases, dtype=float), 2 * np.pi)
        return cls(phases[partition.comm], phases[partition.sense])

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([self.comm, self.sense])


@dataclass(frozen=True)
class CompositeChannels:
    des_comm: np.ndarray   # M x L
    int_comm: np.ndarray   # M x Q
    des_sense: np.ndarray  # Q x Q
    int_sense: np.ndarray  # Q x L


def _cascade(h_to, phases, h_from):
    # h_to @ diag(exp(j phases)) @ h_from; an empty slice contributes zero.
    return (h_to * np.exp(1j * phases)[None, :]) @ h_from


def comm_channels(ch: ChannelSet, phases: PhaseShifts, p: Partition, rho: float):
    """Desired (M x L) and interfering (M x Q) channels seen by the UE."""
    c, s = p.comm, p.sense
    h_des = ch.bu + _cascade(ch.iu[:, c], phases.comm, ch.bi[c, :])
    h_int = ch.ru + _cascade(ch.iu[:, s], phases.sense, ch.ri[s, :]) + rho * (ch.tu @ ch.rt)
    return h_des, h_int


def sense_channels(ch: ChannelSet, phases: PhaseShifts, p: Partition, rho: float):
    """Desired (Q x Q) and interfering (Q x L) channels seen by the radar receiver.

    Paths reflecting twice off the IRS are excluded.
    """
    c, s = p.comm, p.sense
    h_des = rho * (ch.tr @ ch.rt) + rho * (ch.tr @ _cascade(ch.it[:, s], phases.sense, ch.ri[s, :]))
    comm_refl = _cascade(np.eye(p.n_comm), phases.comm, ch.bi[c, :])  # Phi_c H_bi^(c)
    h_int = ch.br + ch.ir[:, c] @ comm_refl + rho * (ch.tr @ ch.bt) + rho * (ch.tr @ (ch.it[:, c] @ comm_refl))
    return h_des, h_int


def composite_channels(ch, phases, p, rho) -> CompositeChannels:
    return CompositeChannels(*comm_channels(ch, phases, p, rho), *sense_channels(ch, phases, p, rho))


def _gains(h_des, h_int, w_rx, w_tx_des, w_tx_int):
    g = np.vdot(w_rx, h_des @ w_tx_des)
    i = np.vdot(w_rx, h_int @ w_tx_int)
    return g, i


def sinr(h_des, h_int, w_rx, w_tx_des, w_tx_int, noise) -> float:
    """``|w^H H_des x|^2 / (|w^H H_int z|^2 + noise ||w||^2)``."""
    g, i = _gains(h_des, h_int, w_rx, w_tx_des, w_tx_int)
    return float(abs(g) ** 2 / (abs(i) ** 2 + noise * np.vdot(w_rx, w_rx).real))


def mse(h_des, h_int, w_rx, w_tx_des, w_tx_int, noise) -> float:
    """``E|s_hat - s|^2`` for unit-power independent symbols and CN(0, noise I) noise."""
    g, i = _gains(h_des, h_int, w_rx, w_tx_des, w_tx_int)
    return float(abs(g - 1) ** 2 + abs(i) ** 2 + noise * np.vdot(w_rx, w_rx).real)


def mmse_scale(h_des, h_int, w_rx, w_tx_des, w_tx_int, noise) -> complex:
    """Scalar ``a`` minimizing ``mse`` over combiners ``a * w_rx``.

    The combiner enters conjugated, so the optimum is ``g / (|g|^2 + |i|^2 + noise)``.
    """
    g, i = _gains(h_des, h_int, w_rx, w_tx_des, w_tx_int)
    return complex(g / (abs(g) ** 2 + abs(i) ** 2 + noise * np.vdot(w_rx, w_rx).real))


def allocation_weight(gamma_c: float, gamma_s: float, balance: float) -> float:
    """``1 / (1 + (gamma_c / gamma_s) ** balance)``.

    The ratio, and the powered ratio, are clamped to :data:`RATIO_CLAMP` so
    the weight stays strictly inside (0, 1) and zero SINRs are harmless.
    """
    lo, hi = RATIO_CLAMP
    if gamma_s <= 0:
        ratio = hi if gamma_c > 0 else 1.0
    else:
        ratio = min(max(gamma_c / gamma_s, lo), hi)
    log_term = min(max(balance * math.log(ratio), math.log(lo)), math.log(hi))
    return 1.0 / (1.0 + math.exp(log_term))


def objective(eta: float, mse_c: float, mse_s: float) -> float:
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    return eta * mse_c + (1.0 - eta) * mse_s


@dataclass(frozen=True)
class Metrics:
    gamma_c: float
    gamma_s: float
    mse_c: float
    mse_s: float
    eta: float
    f: float
