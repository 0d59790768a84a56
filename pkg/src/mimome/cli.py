"""Command-line front end: sweeps, solver runs, verification, CSV output.

Subcommands
-----------
``capacity``     secrecy capacity over an SNR sweep (total power budget) or
                 at explicit per-antenna powers (single-antenna receivers)
``optimize``     barrier/Newton solve of the per-antenna problem
``verify``       run the property suite; exit 0 only if everything passes
``figure``       canned parameter sets reproducing the reference curves
``sweep-alpha``  secrecy rate of ``alpha * I`` over ``0 <= alpha <= P/n_t``

Every run is deterministic given its configuration (identical configs give
byte-identical CSV).  A flat ``key=value`` config file can hold any flag of
the chosen subcommand (flags win over the file).  Rates are written in nats
unless ``--bits`` is given.  ``MIMOME_OUTPUT_DIR`` overrides the default
output directory.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import channel, oracle, rates, solver
from .errors import ConstraintError, ConvergenceError, DomainError, LineSearchError

__all__ = ["ExperimentConfig", "parse_config", "run", "main"]

_LN2 = math.log(2.0)

_CAPACITY_HEADER = (
    "snr_db",
    "p_g_db",
    "mean_nats",
    "std_err_nats",
    "n_samples",
    "mode",
    "nt",
    "nr",
    "ne",
    "ratio",
    "seed",
)
_TRACE_HEADER = ("iter", "t", "residual", "objective", "step")


class UsageError(ValueError):
    """Configuration problem attributable to the caller."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved run configuration (flags over config file over defaults)."""

    mode: str
    nt: int | None
    nr: int | None
    ne: int | None
    sigma_h2: float
    sigma_g2: float
    snr_db: tuple | None
    power_db: float
    per_antenna: tuple | None
    power_split: tuple
    samples: int
    seed: int
    output: str | None
    trace: str | None
    bits: bool
    figure_id: int | None
    alpha_points: int
    trials: int
    epsilon: float
    t0: float
    gamma: float
    figure_combos: tuple | None = None

    @property
    def spec(self):
        return channel.ChannelSpec(self.nt, self.nr, self.ne, self.sigma_h2, self.sigma_g2)

    @property
    def ratio(self):
        return self.sigma_h2 / self.sigma_g2


def _parse_sweep(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"SNR sweep must be start:step:stop, got {text!r}")
    try:
        start, step, stop = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"malformed SNR sweep {text!r}") from exc
    if step <= 0.0:
        raise UsageError("SNR sweep step must be > 0")
    if start > stop:
        raise UsageError("SNR sweep start must not exceed stop")
    return (start, step, stop)


def _parse_powers(text):
    try:
        powers = tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise UsageError(f"malformed power list {text!r}") from exc
    if any(p < 0.0 for p in powers):
        raise UsageError("per-antenna powers must be >= 0")
    return powers


def _parse_split(text):
    try:
        weights = tuple(float(p) for p in text.split(":"))
    except ValueError as exc:
        raise UsageError(f"malformed power split {text!r}") from exc
    if any(w < 0.0 for w in weights) or sum(weights) == 0.0:
        raise UsageError("power split weights must be >= 0 with a positive sum")
    total = sum(weights)
    return tuple(w / total for w in weights)


_CONVERTERS = {
    "nt": int,
    "nr": int,
    "ne": int,
    "ratio": float,
    "sigma_h2": float,
    "sigma_g2": float,
    "snr_db": _parse_sweep,
    "power_db": float,
    "per_antenna": _parse_powers,
    "power_split": _parse_split,
    "samples": int,
    "seed": int,
    "output": str,
    "trace": str,
    "bits": lambda v: str(v).lower() in ("1", "true", "yes"),
    "figure_id": int,
    "alpha_points": int,
    "trials": int,
    "epsilon": float,
    "t0": float,
    "gamma": float,
}

_DEFAULTS = {
    "nt": None,
    "nr": None,
    "ne": None,
    "ratio": 4.0,
    "sigma_h2": None,
    "sigma_g2": None,
    "snr_db": None,
    "power_db": 20.0,
    "per_antenna": None,
    "power_split": (1.0,),
    "samples": None,
    "seed": 12345,
    "output": None,
    "trace": None,
    "bits": False,
    "figure_id": None,
    "alpha_points": 11,
    "trials": 200,
    "epsilon": 1e-4,
    "t0": 1.0,
    "gamma": 1.5,
}

_MODE_TO_COMMAND = {
    "capacity-total": "capacity",
    "capacity-per-antenna": "capacity",
    "optimize": "optimize",
    "sweep-alpha": "sweep-alpha",
    "verify": "verify",
    "figure": "figure",
}


def _add_common(p):
    p.add_argument("--config", help="flat key=value config file; flags override it")
    p.add_argument("--nt", type=int, help="transmit antennas (default 2)")
    p.add_argument("--nr", type=int, help="legitimate-receiver antennas (default 2)")
    p.add_argument("--ne", type=int, help="eavesdropper antennas (default 1)")
    p.add_argument(
        "--ratio",
        type=float,
        help="legitimate/eavesdropper variance ratio with unit eavesdropper variance (default 4)",
    )
    p.add_argument("--sigma-h2", dest="sigma_h2", type=float, help="explicit legitimate per-entry variance")
    p.add_argument("--sigma-g2", dest="sigma_g2", type=float, help="explicit eavesdropper per-entry variance")
    p.add_argument("--samples", type=int, help="Monte-Carlo draw count")
    p.add_argument("--seed", type=int, help="sampling seed (default 12345)")
    p.add_argument("--output", help="output CSV path ('-' for stdout)")
    p.add_argument("--bits", action="store_const", const=True, help="report rates in bits")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mimome",
        description="Secrecy capacities of fast Rayleigh-fading wiretap channels "
        "with statistical transmitter CSI",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacity", help="secrecy capacity estimates")
    _add_common(p)
    p.add_argument("--snr-db", dest="snr_db", type=_parse_sweep, help="SNR sweep start:step:stop in dB")
    p.add_argument("--power-db", dest="power_db", type=float, help="single total power in dB (default 20)")
    p.add_argument(
        "--per-antenna",
        dest="per_antenna",
        type=_parse_powers,
        help="comma-separated per-antenna powers (switches to the per-antenna closed form)",
    )

    p = sub.add_parser("optimize", help="per-antenna covariance optimization")
    _add_common(p)
    p.add_argument("--per-antenna", dest="per_antenna", type=_parse_powers, help="comma-separated per-antenna powers")
    p.add_argument("--power-db", dest="power_db", type=float, help="total power in dB split by --power-split")
    p.add_argument("--power-split", dest="power_split", type=_parse_split, help="power split weights, e.g. 1:1")
    p.add_argument("--epsilon", type=float, help="suboptimality gap tolerance (default 1e-4)")
    p.add_argument("--t0", type=float, help="initial barrier weight (default 1)")
    p.add_argument("--gamma", type=float, help="barrier growth factor (default 1.5)")
    p.add_argument("--trace", help="also write the Newton trace CSV to this path")

    p = sub.add_parser("verify", help="run the property suite")
    _add_common(p)
    p.add_argument("--trials", type=int, help="randomized trials per property (default 200)")
    p.add_argument("--power-db", dest="power_db", type=float, help="power scale of the trials in dB (default 20)")

    p = sub.add_parser("figure", help="reproduce a reference figure's data")
    _add_common(p)
    p.add_argument("--figure-id", dest="figure_id", type=int, help="figure number, 1-7")
    p.add_argument("--snr-db", dest="snr_db", type=_parse_sweep, help="override the preset SNR sweep")
    p.add_argument("--power-db", dest="power_db", type=float, help="override the preset power")
    p.add_argument("--power-split", dest="power_split", type=_parse_split, help="per-antenna split, e.g. 1:1")
    p.add_argument("--alpha-points", dest="alpha_points", type=int, help="grid size for the alpha sweep")
    p.add_argument("--epsilon", type=float, help="solver gap tolerance (figure 6)")

    p = sub.add_parser("sweep-alpha", help="secrecy rate of alpha*I over the feasible range")
    _add_common(p)
    p.add_argument("--power-db", dest="power_db", type=float, help="total power in dB (default 20)")
    p.add_argument("--alpha-points", dest="alpha_points", type=int, help="number of alpha grid points (default 11)")

    return parser


def _load_config_file(path):
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


def _resolve(ns, command):
    file_values = _load_config_file(ns.config) if getattr(ns, "config", None) else {}
    known = {d for d in vars(ns) if d not in ("command", "config")}
    resolved = {}
    for key, raw in file_values.items():
        dest = key.replace("-", "_")
        if dest == "mode":
            continue
        if dest not in known or dest not in _CONVERTERS:
            raise UsageError(f"unknown config key {key!r} for command {command!r}")
        try:
            resolved[dest] = _CONVERTERS[dest](raw)
        except UsageError:
            raise
        except Exception as exc:
            raise UsageError(f"malformed value for config key {key!r}: {raw!r}") from exc
    merged = {}
    for dest in _DEFAULTS:
        value = getattr(ns, dest, None)
        if value is None:
            value = resolved.get(dest, None)
        if value is None:
            value = _DEFAULTS[dest]
        merged[dest] = value
    return merged


def parse_config(argv):
    """Parse flags (plus optional ``--mode`` form and config file) into a config.

    ``--mode capacity-total`` style invocations map onto the equivalent
    subcommand; explicit flags always beat config-file values, which beat
    the built-in defaults documented in ``--help``.
    """
    argv = list(argv)
    if argv and argv[0].startswith("-") and "--mode" in argv:
        i = argv.index("--mode")
        if i + 1 >= len(argv):
            raise UsageError("--mode needs a value")
        mode = argv[i + 1]
        if mode not in _MODE_TO_COMMAND:
            raise UsageError(f"unknown mode {mode!r}")
        argv = [_MODE_TO_COMMAND[mode]] + argv[:i] + argv[i + 2 :]
    ns = build_parser().parse_args(argv)
    merged = _resolve(ns, ns.command)

    if merged["sigma_g2"] is None:
        merged["sigma_g2"] = 1.0
        merged["sigma_h2"] = merged["ratio"] if merged["sigma_h2"] is None else merged["sigma_h2"]
    elif merged["sigma_h2"] is None:
        merged["sigma_h2"] = merged["ratio"] * merged["sigma_g2"]
    del merged["ratio"]

    figure_combos = None
    if ns.command == "capacity":
        mode = "capacity-per-antenna" if merged["per_antenna"] is not None else "capacity-total"
    elif ns.command == "figure":
        mode = "figure"
        if merged["figure_id"] is None:
            raise UsageError("figure mode requires --figure-id (1-7)")
        merged.update(_apply_figure_preset(merged))
        antennas = (merged["nt"], merged["nr"], merged["ne"])
        if all(a is not None for a in antennas):
            figure_combos = (antennas,)
            print(
                f"warning: overriding figure {merged['figure_id']} preset antenna counts",
                file=sys.stderr,
            )
        elif any(a is not None for a in antennas):
            raise UsageError("figure antenna overrides need all of --nt, --nr and --ne")
    else:
        mode = ns.command
    if mode != "figure":
        missing = [k for k in ("nt", "nr", "ne") if merged[k] is None]
        if missing:
            raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))
    if merged["samples"] is None:
        merged["samples"] = 10_000 if ns.command in ("optimize", "verify") else 100_000
    if merged["samples"] < 1:
        raise UsageError("--samples must be >= 1")

    return ExperimentConfig(mode=mode, figure_combos=figure_combos, **merged)


_FIGURE_PRESETS = {
    1: dict(combos=((4, 1, 1), (4, 2, 2), (4, 3, 1)), snr_db=(0.0, 5.0, 40.0)),
    2: dict(combos=((1, 5, 1), (2, 5, 1), (4, 5, 1), (5, 1, 1)), snr_db=(0.0, 5.0, 40.0)),
    3: dict(combos=((1, 1, 1), (1, 2, 1), (1, 3, 2)), snr_db=(0.0, 5.0, 40.0)),
    4: dict(combos=((4, 3, 2),), power_db=20.0),
    5: dict(combos=((2, 2, 1), (2, 1, 1)), snr_db=(0.0, 5.0, 40.0), power_split=(0.5, 0.5)),
    6: dict(combos=((2, 2, 1),), power_db=20.0, power_split=(0.5, 0.5)),
    7: dict(combos=((2, 1, 1),), snr_db=(0.0, 5.0, 40.0), power_split=(0.5, 0.5)),
}


def _apply_figure_preset(merged):
    fid = merged["figure_id"]
    if fid not in _FIGURE_PRESETS:
        raise UsageError("figure id must be between 1 and 7")
    preset = dict(_FIGURE_PRESETS[fid])
    preset.pop("combos")
    updates = {}
    for key, value in preset.items():
        if merged.get(key) is None or merged.get(key) == _DEFAULTS.get(key):
            updates[key] = value
        else:
            print(f"warning: overriding figure {fid} preset {key}", file=sys.stderr)
    if merged["sigma_h2"] / merged["sigma_g2"] != 4.0:
        print(f"warning: overriding figure {fid} preset variance ratio 4", file=sys.stderr)
    return updates


def _snr_points(sweep):
    start, step, stop = sweep
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + step * k for k in range(count)]


def _fmt(x):
    return "%.17g" % x


def _rate_columns(est, bits):
    scale = 1.0 / _LN2 if bits else 1.0
    return _fmt(est.mean * scale), _fmt(est.std_err * scale), str(est.n_samples)


def _capacity_header(bits):
    if not bits:
        return _CAPACITY_HEADER
    return tuple(c.replace("_nats", "_bits") for c in _CAPACITY_HEADER)


def _output_path(config, default_name):
    if config.output:
        return config.output
    outdir = os.environ.get("MIMOME_OUTPUT_DIR", ".")
    return os.path.join(outdir, default_name)


def _write_csv(path, header, rows):
    text = "\n".join([",".join(header)] + [",".join(r) for r in rows]) + "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _capacity_row(config, spec, mode, p_total, est):
    return (
        _fmt(10.0 * math.log10(p_total)) if p_total > 0 else _fmt(-math.inf),
        _fmt(10.0 * math.log10(spec.sigma_g2 * p_total)) if p_total > 0 else _fmt(-math.inf),
        *_rate_columns(est, config.bits),
        mode,
        str(spec.n_t),
        str(spec.n_r),
        str(spec.n_e),
        _fmt(spec.sigma_h2 / spec.sigma_g2),
        str(config.seed),
    )


def _run_capacity(config):
    spec = config.spec
    rows = []
    if config.mode == "capacity-per-antenna":
        powers = np.asarray(config.per_antenna, dtype=float)
        if powers.shape != (spec.n_t,):
            raise UsageError(f"--per-antenna needs {spec.n_t} values")
        samples = channel.sample(spec, config.samples, config.seed)
        est = rates.capacity_misose_per_antenna(spec, powers, samples)
        rows.append(_capacity_row(config, spec, config.mode, float(powers.sum()), est))
    else:
        sweep = config.snr_db or (config.power_db, 1.0, config.power_db)
        samples = channel.sample(spec, config.samples, config.seed)
        for snr in _snr_points(sweep):
            p = 10.0 ** (snr / 10.0)
            est = rates.capacity_total(spec, p, samples)
            rows.append(_capacity_row(config, spec, config.mode, p, est))
    _write_csv(_output_path(config, f"{config.mode}.csv"), _capacity_header(config.bits), rows)
    return 0


def _resolved_powers(config, spec):
    if config.per_antenna is not None:
        powers = np.asarray(config.per_antenna, dtype=float)
        if powers.shape != (spec.n_t,):
            raise UsageError(f"--per-antenna needs {spec.n_t} values")
        return powers
    split = config.power_split
    if len(split) == 1:
        split = tuple([1.0 / spec.n_t] * spec.n_t)
    if len(split) != spec.n_t:
        raise UsageError(f"--power-split needs {spec.n_t} weights")
    return 10.0 ** (config.power_db / 10.0) * np.asarray(split)


def _trace_rows(trace):
    return [
        (str(r.iteration), _fmt(r.t), _fmt(r.residual_norm), _fmt(r.objective), _fmt(r.step_size))
        for r in trace
    ]


def _run_optimize(config):
    spec = config.spec
    powers = _resolved_powers(config, spec)
    samples = channel.sample(spec, config.samples, config.seed)
    cfg = solver.SolverConfig(epsilon=config.epsilon, t0=config.t0, gamma=config.gamma)
    trace = []
    state, est = solver.optimize(spec, powers, samples, cfg, trace=trace)
    rows = [_capacity_row(config, spec, "optimize", float(powers.sum()), est)]
    _write_csv(_output_path(config, "optimize.csv"), _capacity_header(config.bits), rows)
    if config.trace:
        _write_csv(config.trace, _TRACE_HEADER, _trace_rows(trace))
    print(
        f"optimize: gap={state.gap:.3e} residual={state.residual_norm:.3e} "
        f"steps={len(trace)} rate={est.mean:.6f} nats (se {est.std_err:.2e})"
    )
    return 0


def _run_verify(config):
    spec = config.spec
    samples = channel.sample(spec, config.samples, config.seed)
    budget = rates.TotalPower(10.0 ** (config.power_db / 10.0))
    report = oracle.property_suite(spec, budget, samples, trial_count=config.trials)
    print(report.to_text())
    report.write_csv(_output_path(config, "verify.csv"))
    return 0 if report.all_passed else 1


def _run_sweep_alpha(config, combo=None, output_name="sweep-alpha.csv"):
    spec = config.spec if combo is None else channel.ChannelSpec(
        combo[0], combo[1], combo[2], config.sigma_h2, config.sigma_g2
    )
    p = 10.0 ** (config.power_db / 10.0)
    samples = channel.sample(spec, config.samples, config.seed)
    alphas = np.linspace(0.0, p / spec.n_t, config.alpha_points)
    eye = np.eye(spec.n_t, dtype=complex)
    rows = []
    for alpha in alphas:
        est = rates.secrecy_rate(alpha * eye, samples)
        rows.append(
            (
                _fmt(alpha),
                *_rate_columns(est, config.bits),
                "sweep-alpha",
                str(spec.n_t),
                str(spec.n_r),
                str(spec.n_e),
                _fmt(spec.sigma_h2 / spec.sigma_g2),
                str(config.seed),
            )
        )
    header = ("alpha",) + _capacity_header(config.bits)[2:]
    _write_csv(_output_path(config, output_name), header, rows)
    return 0


def _run_figure(config):
    fid = config.figure_id
    combos = config.figure_combos or _FIGURE_PRESETS[fid]["combos"]
    name = f"figure{fid}.csv"
    if fid == 4:
        return _run_sweep_alpha(config, combos[0], name)
    if fid == 6:
        combo = combos[0]
        spec = channel.ChannelSpec(*combo, config.sigma_h2, config.sigma_g2)
        powers = _resolved_powers(config, spec)
        samples = channel.sample(spec, min(config.samples, 10_000), config.seed)
        trace = []
        solver.optimize(spec, powers, samples, solver.SolverConfig(epsilon=config.epsilon), trace=trace)
        _write_csv(_output_path(config, name), _TRACE_HEADER, _trace_rows(trace))
        return 0

    rows = []
    sweep = config.snr_db or (0.0, 5.0, 40.0)
    for combo in combos:
        spec = channel.ChannelSpec(*combo, config.sigma_h2, config.sigma_g2)
        samples = channel.sample(spec, config.samples, config.seed)
        for snr in _snr_points(sweep):
            p = 10.0 ** (snr / 10.0)
            if fid in (1, 2, 3):
                est = rates.capacity_total(spec, p, samples)
                rows.append(_capacity_row(config, spec, "capacity-total", p, est))
            elif fid == 5:
                powers = p * np.asarray(config.power_split)
                if spec.n_r == 1 and spec.n_e == 1:
                    est = rates.capacity_misose_per_antenna(spec, powers, samples)
                    rows.append(_capacity_row(config, spec, "capacity-per-antenna", p, est))
                else:
                    est = rates.secrecy_rate(np.diag(powers).astype(complex), samples)
                    rows.append(_capacity_row(config, spec, "per-antenna-diag", p, est))
            elif fid == 7:
                est = rates.capacity_total(spec, p, samples)
                rows.append(_capacity_row(config, spec, "capacity-total", p, est))
                powers = p * np.asarray(config.power_split)
                est = rates.capacity_misose_per_antenna(spec, powers, samples)
                rows.append(_capacity_row(config, spec, "capacity-per-antenna", p, est))
    _write_csv(_output_path(config, name), _capacity_header(config.bits), rows)
    return 0


def run(config):
    """Execute a resolved configuration; returns the process exit status."""
    try:
        if config.mode in ("capacity-total", "capacity-per-antenna"):
            return _run_capacity(config)
        if config.mode == "optimize":
            return _run_optimize(config)
        if config.mode == "verify":
            return _run_verify(config)
        if config.mode == "sweep-alpha":
            return _run_sweep_alpha(config)
        if config.mode == "figure":
            return _run_figure(config)
        raise UsageError(f"unknown mode {config.mode!r}")
    except (ConstraintError, DomainError, UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, LineSearchError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
