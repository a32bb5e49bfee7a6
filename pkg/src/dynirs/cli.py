"""Command-line front end.

Subcommands
-----------
run       Monte Carlo at one configuration, one or both modes.
sweep     Monte Carlo over a grid of one parameter (``--figure`` presets).
compare   Paired dynamic-vs-fixed comparison.
rerun     Repeat a previous invocation from its ``manifest.json``.
channels  Dump the channel set of a single trial.

Every invocation writes into ``--out`` (default ``$DYNIRS_OUT`` or
``./dynirs-out``): ``manifest.json``, ``aggregate.csv``, ``trials.csv``,
``summary.json`` and, for ``compare``, ``deltas.csv``.  Outputs are a pure
function of the resolved config, seed and arguments; only the manifest's
``timestamp`` differs between identical invocations.

Exit status is 0 on success, 1 on usage or configuration errors and 2 on
runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, _random
from .channel import build_channel_set, dump_channels
from .config import ConfigError, ScenarioConfig, config_from_dict, parse_overrides, resolve_config
from .experiment import (
    SWEEP_PARAMETERS,
    AggregateStats,
    aggregate,
    apply_parameter,
    compare_results,
    run_trials,
)
from .optimizer import MODES
from .scenario import sample_layout

CSV_SCHEMA_VERSION = 1
OUT_ENV = "DYNIRS_OUT"
DEFAULT_OUT = "dynirs-out"

AGGREGATE_COLUMNS = (
    "param_name", "param_value", "mode", "trials", "gamma_c_db", "gamma_c_db_se",
    "gamma_s_db", "gamma_s_db_se", "eta_mean", "nc_mean", "ns_mean", "mse_c_mean",
    "mse_s_mean", "iters_mean", "convergence_rate",
)
TRIAL_COLUMNS = (
    "param_name", "param_value", "mode", "trial_index", "degenerate", "gamma_c", "gamma_s",
    "mse_c", "mse_s", "eta", "f", "n_comm", "n_sense", "iterations", "converged", "n_points",
)
DELTA_COLUMNS = ("metric", "n", "mean", "std", "ci_low", "ci_high", "p_positive")

FIGURES = {
    2: ("L", (2, 4, 6, 8, 10, 12, 14, 16), ("dynamic", "fixed")),
    3: ("L", (2, 4, 6, 8, 10, 12, 14, 16), ("dynamic",)),
    4: ("N", (16, 32, 64, 128), ("dynamic",)),
}


class UsageError(Exception):
    pass


# -- formatting ---------------------------------------------------------------

def fmt(value) -> str:
    """Shortest round-trip text for floats; plain text for everything else."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(row[c]) for c in columns])
    return buf.getvalue()


def aggregate_row(stats: AggregateStats, mode: str, param_name=None, param_value=None) -> dict:
    row = {"param_name": param_name or "", "param_value": param_value, "mode": mode}
    row.update({c: getattr(stats, c) for c in AGGREGATE_COLUMNS[3:]})
    return row


def emit_csv(rows) -> bytes:
    """Aggregate rows (dicts keyed by :data:`AGGREGATE_COLUMNS`) as UTF-8 CSV."""
    return _csv_text(AGGREGATE_COLUMNS, rows).encode("utf-8")


def parse_csv(data: bytes) -> list[dict]:
    """Inverse of :func:`emit_csv`."""
    reader = csv.DictReader(io.StringIO(data.decode("utf-8")))
    if tuple(reader.fieldnames or ()) != AGGREGATE_COLUMNS:
        raise ValueError("unexpected aggregate CSV header")
    out = []
    for rec in reader:
        row = {"param_name": rec["param_name"], "mode": rec["mode"], "trials": int(rec["trials"])}
        pv = rec["param_value"]
        row["param_value"] = None if pv == "" else (int(pv) if pv.lstrip("-").isdigit() else float(pv))
        for c in AGGREGATE_COLUMNS[4:]:
            row[c] = float(rec[c])
        out.append(row)
    return out


def trial_rows(results, param_name=None, param_value=None):
    for r in results:
        m, p = r.metrics, r.partition
        yield {
            "param_name": param_name or "", "param_value": param_value, "mode": r.mode,
            "trial_index": r.trial_index, "degenerate": r.degenerate,
            "gamma_c": m and m.gamma_c, "gamma_s": m and m.gamma_s,
            "mse_c": m and m.mse_c, "mse_s": m and m.mse_s, "eta": m and m.eta, "f": m and m.f,
            "n_comm": p and p.n_comm, "n_sense": p and p.n_sense,
            "iterations": r.iterations, "converged": r.converged, "n_points": r.n_points,
        }


def _json_float(x):
    return x if math.isfinite(x) else repr(x)


def _json_ready(obj):
    if isinstance(obj, float):
        return _json_float(obj)
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    return obj


def _dumps(obj) -> str:
    return json.dumps(_json_ready(obj), indent=2, allow_nan=False) + "\n"


# -- manifest -----------------------------------------------------------------

@dataclass
class RunManifest:
    """Everything needed to repeat an invocation, plus trial accounting."""

    command: str
    config: ScenarioConfig
    master_seed: int
    modes: tuple
    trials: int
    parameter: str | None = None
    values: tuple = ()
    requested: int = 0
    included: int = 0
    excluded: int = 0
    version: str = __version__
    csv_schema_version: int = CSV_SCHEMA_VERSION
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def to_json(self) -> str:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["config"] = self.config.to_dict()
        d["modes"], d["values"] = list(self.modes), list(self.values)
        return _dumps(d)

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        d["config"] = config_from_dict(d["config"], "manifest")
        d["modes"], d["values"] = tuple(d["modes"]), tuple(d["values"])
        return cls(**d)


# -- commands -----------------------------------------------------------------

def _write(out: Path, name: str, text: str):
    (out / name).write_bytes(text.encode("utf-8") if isinstance(text, str) else text)


def _execute(manifest: RunManifest, out: Path, n_jobs: int = 1) -> RunManifest:
    """Run what ``manifest`` describes and write every artifact into ``out``."""
    cfg, seed = manifest.config, manifest.master_seed
    if manifest.command in ("run", "compare"):
        grid = [(None, None, cfg)]
    else:
        grid = [(manifest.parameter, v, apply_parameter(cfg, manifest.parameter, v)) for v in manifest.values]

    agg_rows, tri_rows, summary, by_mode = [], [], [], {}
    for pname, pvalue, c in grid:
        for mode in manifest.modes:
            res = run_trials(c, mode, manifest.trials, seed, n_jobs=n_jobs)
            by_mode[mode] = res
            stats = aggregate(res)
            agg_rows.append(aggregate_row(stats, mode, pname, pvalue))
            tri_rows.extend(trial_rows(res, pname, pvalue))
            summary.append({"param_name": pname, "param_value": pvalue, "mode": mode, **asdict(stats)})
            manifest.included += stats.trials
            manifest.excluded += stats.excluded
    manifest.requested = manifest.included + manifest.excluded

    out.mkdir(parents=True, exist_ok=True)
    _write(out, "aggregate.csv", emit_csv(agg_rows))
    _write(out, "trials.csv", _csv_text(TRIAL_COLUMNS, tri_rows))
    _write(out, "summary.json", _dumps(summary))
    if manifest.command == "compare":
        report = compare_results(by_mode[manifest.modes[0]], by_mode[manifest.modes[1]])
        _write(out, "deltas.csv", _csv_text(DELTA_COLUMNS, [asdict(d) for d in report.deltas.values()]))
    _write(out, "manifest.json", manifest.to_json())
    return manifest


def _config_from_args(args) -> ScenarioConfig:
    overrides = parse_overrides(args.set or [])
    cfg = resolve_config(None, args.config, overrides)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    return cfg


def _modes(arg, default):
    if arg is None:
        return default
    return MODES if arg == "both" else (arg,)


def _parse_values(param: str, text: str):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values: cannot parse {text!r}") from None
    if not vals:
        raise UsageError("--values: empty list")
    if param in ("L", "N"):
        if any(not v.is_integer() for v in vals):
            raise UsageError(f"--values: {param} takes integers")
        return tuple(int(v) for v in vals)
    return tuple(vals)


def cmd_run(args) -> RunManifest:
    cfg = _config_from_args(args)
    m = RunManifest("run", cfg, args.seed, _modes(args.mode, ("dynamic",)), cfg.trials)
    return _execute(m, args.out, args.jobs)


def cmd_sweep(args) -> RunManifest:
    cfg = _config_from_args(args)
    if args.figure is not None:
        if args.param or args.values:
            raise UsageError("--figure cannot be combined with --param/--values")
        param, values, modes = FIGURES[args.figure]
    else:
        if not (args.param and args.values):
            raise UsageError("sweep needs --param and --values, or --figure")
        param, values, modes = args.param, _parse_values(args.param, args.values), MODES
    m = RunManifest("sweep", cfg, args.seed, _modes(args.mode, modes), cfg.trials, param, values)
    return _execute(m, args.out, args.jobs)


def cmd_compare(args) -> RunManifest:
    cfg = _config_from_args(args)
    m = RunManifest("compare", cfg, args.seed, ("dynamic", "fixed"), cfg.trials)
    return _execute(m, args.out, args.jobs)


def cmd_rerun(args) -> RunManifest:
    old = RunManifest.from_json(Path(args.manifest).read_text(encoding="utf-8"))
    m = RunManifest(old.command, old.config, old.master_seed, old.modes, old.trials, old.parameter, old.values)
    return _execute(m, args.out, args.jobs)


def cmd_channels(args):
    cfg = _config_from_args(args)
    layout = sample_layout(cfg, _random.substream(args.seed, args.trial, _random.LAYOUT))
    ch = build_channel_set(layout, cfg, _random.substream(args.seed, args.trial, _random.FADING))
    args.out.mkdir(parents=True, exist_ok=True)
    with open(args.out / f"channels-{args.seed}-{args.trial}.bin", "wb") as fp:
        dump_channels(ch, fp)


# -- argument parsing ---------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text):
    v = int(text)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    default_out = Path(os.environ.get(OUT_ENV, DEFAULT_OUT))
    common = _Parser(add_help=False)
    common.add_argument("--out", type=Path, default=default_out,
                        help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--jobs", type=int, default=1, help="parallel trial workers")

    scen = _Parser(add_help=False)
    scen.add_argument("--config", type=Path, help="flat key = value config file")
    scen.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    scen.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    scen.add_argument("--trials", type=_positive, help="trials per cell (default experiment.trials)")

    p = _Parser(prog="dynirs", description="Dynamic IRS element allocation for spectrum-sharing MIMO radar/communication.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", parents=[scen, common], help="Monte Carlo at one configuration")
    r.add_argument("--mode", choices=(*MODES, "both"))
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", parents=[scen, common], help="sweep one parameter")
    s.add_argument("--param", choices=sorted(SWEEP_PARAMETERS))
    s.add_argument("--values", help="comma-separated grid")
    s.add_argument("--figure", type=int, choices=sorted(FIGURES), help="preset grid")
    s.add_argument("--mode", choices=(*MODES, "both"))
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", parents=[scen, common], help="paired dynamic vs fixed comparison")
    c.set_defaults(func=cmd_compare)

    rr = sub.add_parser("rerun", parents=[common], help="repeat a run from its manifest")
    rr.add_argument("manifest", type=Path)
    rr.set_defaults(func=cmd_rerun)

    ch = sub.add_parser("channels", parents=[scen, common], help="dump one trial's channel matrices")
    ch.add_argument("--trial", type=int, default=0)
    ch.set_defaults(func=cmd_channels)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"dynirs: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failures: I/O, degenerate batches, layout errors
        print(f"dynirs: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
