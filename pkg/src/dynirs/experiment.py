"""Monte Carlo harness: trials, aggregation, parameter sweeps and paired mode comparison.

Trial ``i`` under master seed ``s`` always sees the same layout, fading and
initialization draws, whatever the mode or swept value, so every comparison
is paired.  Aggregation uses exactly-rounded sums, so results do not depend
on trial order or on how trials were distributed over workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy import stats

from . import _random
from .channel import ChannelSet, build_channel_set
from .composite import Metrics, Partition
from .config import ScenarioConfig
from .optimizer import MODES, DegenerateChannelError, joint_optimize
from .scenario import sample_layout

SWEEP_PARAMETERS = {
    "L": ("num_bs_antennas",),
    "N": ("num_irs_elements",),
    "beta": ("balance",),
    "kappa": ("kappa_direct",),
    "noise": ("ue_noise", "radar_noise"),
}


def db(x: float) -> float:
    return 10.0 * math.log10(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class TrialResult:
    master_seed: int
    trial_index: int
    mode: str
    metrics: Metrics | None
    partition: Partition | None
    iterations: int
    converged: bool
    n_points: int
    distances: dict = field(default_factory=dict)

    @property
    def degenerate(self) -> bool:
        return self.metrics is None


def run_trial(config: ScenarioConfig, mode: str, master_seed: int, trial_index: int,
              channel_hook: Callable[[ChannelSet], ChannelSet] | None = None) -> TrialResult:
    """One realization: layout, channels, joint optimization.

    ``channel_hook`` may rewrite the channel set before optimization (used
    by tests to silence selected links).
    """
    layout = sample_layout(config, _random.substream(master_seed, trial_index, _random.LAYOUT))
    ch = build_channel_set(layout, config, _random.substream(master_seed, trial_index, _random.FADING))
    if channel_hook is not None:
        ch = channel_hook(ch)
    init = _random.substream(master_seed, trial_index, _random.INIT)
    try:
        state, metrics, trace = joint_optimize(ch, config, init, mode)
    except DegenerateChannelError:
        return TrialResult(master_seed, trial_index, mode, None, None, 0, False, ch.K, layout.distances())
    return TrialResult(master_seed, trial_index, mode, metrics, state.partition,
                       trace.iterations, trace.converged, ch.K, layout.distances())


def run_trials(config, mode, trials, master_seed, *, n_jobs=1, channel_hook=None,
               start=0) -> list[TrialResult]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    indices = range(start, start + trials)
    if n_jobs == 1:
        return [run_trial(config, mode, master_seed, i, channel_hook) for i in indices]
    out = Parallel(n_jobs=n_jobs)(delayed(run_trial)(config, mode, master_seed, i, channel_hook) for i in indices)
    return sorted(out, key=lambda r: r.trial_index)


@dataclass(frozen=True)
class AggregateStats:
    """Per-(configuration, mode) summary.

    ``gamma_*_linear`` is the mean linear SINR and ``gamma_*_db`` its
    10 log10, with a delta-method standard error; ``gamma_*_mean_db`` is the
    mean of per-trial dB values.
    """

    trials: int
    excluded: int
    gamma_c_linear: float
    gamma_s_linear: float
    gamma_c_db: float
    gamma_c_db_se: float
    gamma_s_db: float
    gamma_s_db_se: float
    gamma_c_mean_db: float
    gamma_c_mean_db_se: float
    gamma_s_mean_db: float
    gamma_s_mean_db_se: float
    eta_mean: float
    nc_mean: float
    ns_mean: float
    mse_c_mean: float
    mse_s_mean: float
    iters_mean: float
    convergence_rate: float

    @property
    def requested(self) -> int:
        return self.trials + self.excluded


def _mean_se(values):
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, math.nan
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def _db_of_mean(values):
    mean, se = _mean_se(values)
    return mean, db(mean), (10.0 / math.log(10.0) * se / mean if mean > 0 else math.nan)


def aggregate(results: Sequence[TrialResult]) -> AggregateStats:
    """Order-independent reduction of trial results; degenerate trials are counted, not averaged."""
    ok = [r for r in results if not r.degenerate]
    if not ok:
        raise RuntimeError(f"all {len(results)} trials were degenerate")
    gc = [r.metrics.gamma_c for r in ok]
    gs = [r.metrics.gamma_s for r in ok]
    c_lin, c_db, c_se = _db_of_mean(gc)
    s_lin, s_db, s_se = _db_of_mean(gs)
    c_mdb, c_mdb_se = _mean_se([db(g) for g in gc])
    s_mdb, s_mdb_se = _mean_se([db(g) for g in gs])

    def mean(attr):
        return math.fsum(attr(r) for r in ok) / len(ok)

    return AggregateStats(
        trials=len(ok),
        excluded=len(results) - len(ok),
        gamma_c_linear=c_lin, gamma_s_linear=s_lin,
        gamma_c_db=c_db, gamma_c_db_se=c_se,
        gamma_s_db=s_db, gamma_s_db_se=s_se,
        gamma_c_mean_db=c_mdb, gamma_c_mean_db_se=c_mdb_se,
        gamma_s_mean_db=s_mdb, gamma_s_mean_db_se=s_mdb_se,
        eta_mean=mean(lambda r: r.metrics.eta),
        nc_mean=mean(lambda r: r.partition.n_comm),
        ns_mean=mean(lambda r: r.partition.n_sense),
        mse_c_mean=mean(lambda r: r.metrics.mse_c),
        mse_s_mean=mean(lambda r: r.metrics.mse_s),
        iters_mean=mean(lambda r: r.iterations),
        convergence_rate=mean(lambda r: float(r.converged)),
    )


def monte_carlo(config: ScenarioConfig, mode: str, trials: int, master_seed: int, *,
                n_jobs=1, channel_hook=None) -> AggregateStats:
    return aggregate(run_trials(config, mode, trials, master_seed, n_jobs=n_jobs, channel_hook=channel_hook))


def apply_parameter(config: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    try:
        names = SWEEP_PARAMETERS[parameter]
    except KeyError:
        raise ValueError(f"cannot sweep {parameter!r}; choose from {sorted(SWEEP_PARAMETERS)}") from None
    if parameter in ("L", "N"):
        if float(value) != int(value):
            raise ValueError(f"{parameter} must be an integer, got {value}")
        value = int(value)
    else:
        value = float(value)
    return config.replace(**{n: value for n in names})


@dataclass(frozen=True)
class SweepCell:
    value: float
    mode: str
    stats: AggregateStats
    results: tuple = ()


@dataclass(frozen=True)
class SweepResult:
    parameter: str
    values: tuple
    cells: tuple

    def get(self, value, mode) -> AggregateStats:
        for c in self.cells:
            if c.value == value and c.mode == mode:
                return c.stats
        raise KeyError((value, mode))

    def series(self, mode: str, attr: str) -> np.ndarray:
        return np.array([getattr(self.get(v, mode), attr) for v in self.values])


def sweep(config: ScenarioConfig, parameter: str, values, modes=MODES, trials: int | None = None,
          master_seed: int = 0, *, n_jobs=1, keep_trials=False) -> SweepResult:
    """Monte Carlo per (value, mode) with common random numbers across cells."""
    values = tuple(values)
    if not values:
        raise ValueError("values must be nonempty")
    for m in modes:
        if m not in MODES:
            raise ValueError(f"unknown mode {m!r}")
    trials = config.trials if trials is None else trials
    cells = []
    for v in values:
        cfg = apply_parameter(config, parameter, v)
        for m in modes:
            res = run_trials(cfg, m, trials, master_seed, n_jobs=n_jobs)
            cells.append(SweepCell(v, m, aggregate(res), tuple(res) if keep_trials else ()))
    return SweepResult(parameter, values, tuple(cells))


@dataclass(frozen=True)
class PairedDelta:
    """Summary of per-trial differences (first mode minus second)."""

    metric: str
    n: int
    mean: float
    std: float
    ci_low: float
    ci_high: float
    p_positive: float  # one-sided p-value against "mean <= 0"


def paired_delta(metric: str, diffs, confidence=0.95) -> PairedDelta:
    d = np.asarray(diffs, dtype=float)
    n = d.size
    mean = math.fsum(d) / n
    if n < 2:
        return PairedDelta(metric, n, mean, math.nan, math.nan, math.nan, math.nan)
    std = math.sqrt(math.fsum((d - mean) ** 2) / (n - 1))
    se = std / math.sqrt(n)
    if se == 0:
        p = 0.0 if mean > 0 else 1.0
        return PairedDelta(metric, n, mean, std, mean, mean, p)
    t_crit = float(stats.t.ppf(0.5 + confidence / 2, n - 1))
    p = float(stats.t.sf(mean / se, n - 1))
    return PairedDelta(metric, n, mean, std, mean - t_crit * se, mean + t_crit * se, p)


@dataclass(frozen=True)
class CompareReport:
    modes: tuple
    requested: int
    pairs: int
    summary: tuple  # AggregateStats per mode, in ``modes`` order
    deltas: dict    # metric -> PairedDelta


_DELTA_METRICS = {
    "gamma_c": lambda m: m.gamma_c,
    "gamma_s": lambda m: m.gamma_s,
    "gamma_c_db": lambda m: db(m.gamma_c),
    "gamma_s_db": lambda m: db(m.gamma_s),
    "f": lambda m: m.f,
    "mse_c": lambda m: m.mse_c,
    "mse_s": lambda m: m.mse_s,
}


def compare_results(first: Sequence[TrialResult], second: Sequence[TrialResult]) -> CompareReport:
    by_index = {r.trial_index: r for r in second}
    pairs = [(a, by_index[a.trial_index]) for a in first
             if a.trial_index in by_index and not a.degenerate and not by_index[a.trial_index].degenerate]
    if not pairs:
        raise RuntimeError("no non-degenerate trial pairs")
    deltas = {
        name: paired_delta(name, [get(a.metrics) - get(b.metrics) for a, b in pairs])
        for name, get in _DELTA_METRICS.items()
    }
    modes = (first[0].mode, second[0].mode)
    return CompareReport(modes, len(first), len(pairs), (aggregate(first), aggregate(second)), deltas)


def compare(config: ScenarioConfig, trials: int | None = None, master_seed: int = 0,
            modes=("dynamic", "fixed"), *, n_jobs=1) -> CompareReport:
    """Paired per-trial comparison of two modes (deltas are ``modes[0] - modes[1]``)."""
    trials = config.trials if trials is None else trials
    first = run_trials(config, modes[0], trials, master_seed, n_jobs=n_jobs)
    second = run_trials(config, modes[1], trials, master_seed, n_jobs=n_jobs)
    return compare_results(first, second)
