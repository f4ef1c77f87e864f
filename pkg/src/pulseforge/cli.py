"""Command-line front end: scans, GRAPE runs, scheme comparison, model info.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 optimization
failure.  All commands are deterministic for fixed flags and seeds, so
repeated runs produce byte-identical output files.
"""

from __future__ import annotations

import math
import os
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource

from .grape import (
    GrapeConfig,
    GrapeNumericsError,
    ascend_with_restarts,
    export_pulse_csv,
    import_pulse_csv,
    schedule_propagator,
)
from .linalg import NV_CONSTANTS
from .scanning import (
    GOOD_FIDELITY_THRESHOLD,
    ErrorGrid,
    ScanError,
    export_csv,
    good_fidelity_window,
    scan,
    write_plot_script,
)
from .sequences import (
    ErrorKind,
    bb1_sequence,
    corpse_sequence,
    propagator,
    sequential_gate,
    sequential_segments,
)

PI = math.pi


class IOFailure(click.ClickException):
    exit_code = 3


class OptimizationFailure(click.ClickException):
    exit_code = 4


def _merge_config(ctx: click.Context, params: dict) -> dict:
    """Fill unset options from a key=value config file; explicit flags win."""
    path = params.get("config_path")
    if not path:
        return params
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise IOFailure(f"cannot read config file {path}: {exc}") from exc
    entries: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"bad config line (want key=value): {raw!r}")
        key, value = line.split("=", 1)
        entries[key.strip().lower().replace("-", "_")] = value.strip()
    merged = dict(params)
    by_name = {p.name: p for p in ctx.command.params}
    for key, value in entries.items():
        param = by_name.get(key)
        if param is None or key == "config_path":
            click.echo(f"note: config key {key!r} not used by this command", err=True)
            continue
        if ctx.get_parameter_source(key) is not ParameterSource.DEFAULT:
            continue
        merged[key] = param.type.convert(value, param, ctx)
    return merged


def _ensure_out_dir(out: str) -> Path:
    p = Path(out)
    try:
        p.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOFailure(f"cannot create output directory {out}: {exc}") from exc
    return p


def _error_kind(name: str) -> ErrorKind:
    return ErrorKind(name)


def _scheme_factories(schemes: str):
    """(label, factory) pairs from a comma list; factories map ErrorModel -> gate."""
    pairs = []
    seen: dict[str, int] = {}
    for token in schemes.split(","):
        token = token.strip()
        if not token:
            continue
        if token == "sequential":
            seq = sequential_segments()
            label, factory = "sequential", (lambda err, s=seq: propagator(s, err))
        elif token == "bb1":
            seq = bb1_sequence()
            label, factory = "bb1", (lambda err, s=seq: propagator(s, err))
        elif token == "corpse":
            seq = corpse_sequence()
            label, factory = "corpse", (lambda err, s=seq: propagator(s, err))
        elif token.startswith("grape:"):
            path = token[len("grape:") :]
            try:
                sched, _meta = import_pulse_csv(path)
            except (OSError, ValueError) as exc:
                raise IOFailure(f"cannot load pulse file {path}: {exc}") from exc
            label = "grape"
            factory = lambda err, s=sched: schedule_propagator(s, err)
        else:
            raise click.UsageError(f"unknown scheme {token!r}")
        seen[label] = seen.get(label, 0) + 1
        if seen[label] > 1:
            label = f"{label}_{seen[label]}"
        pairs.append((label, factory))
    if not pairs:
        raise click.UsageError("no schemes given")
    return pairs


def _grid(kind: ErrorKind, lo: float, hi: float, n: int) -> ErrorGrid:
    try:
        return ErrorGrid.uniform(kind, lo, hi, n)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc


def _print_windows(result) -> None:
    for label in result.series:
        w = good_fidelity_window(result, label)
        if w is None:
            click.echo(f"  {label}: no F >= {GOOD_FIDELITY_THRESHOLD} window")
        else:
            click.echo(f"  {label}: F >= {GOOD_FIDELITY_THRESHOLD} for |eps| <= {w:g}")


def _print_corpse_note(result) -> None:
    series = result.series
    if "corpse" not in series or "sequential" not in series:
        return
    pts = result.grid.points
    worse = [
        eps
        for eps, c, s in zip(pts, series["corpse"], series["sequential"])
        if c < s - 1e-12
    ]
    if worse:
        example = min((e for e in worse if e > 0), default=worse[0])
        click.echo(
            f"  note: corpse fidelity drops below sequential at "
            f"{len(worse)} grid points (e.g. eps = {example:g})"
        )


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Robust pulse engineering for the three-level NV / 13C spin model."""


@main.command(name="scan")
@click.option("--error", type=click.Choice(["ple", "ore"]), default="ple",
              show_default=True, help="systematic error model to sweep")
@click.option("--schemes", default="sequential,bb1,corpse", show_default=True,
              help="comma list of sequential,bb1,corpse,grape:<pulsefile>")
@click.option("--grid-min", type=float, default=-1.0, show_default=True)
@click.option("--grid-max", type=float, default=1.0, show_default=True)
@click.option("--grid-points", type=int, default=81, show_default=True)
@click.option("--out", envvar="PULSEFORGE_OUT", default=".", show_default=True,
              help="output directory (env PULSEFORGE_OUT)")
@click.option("--prefix", default=None, help="output file prefix [default: error kind]")
@click.option("--config", "config_path", default=None,
              help="key=value file supplying defaults; explicit flags win")
@click.pass_context
def cmd_scan(ctx, **params):
    """Sweep an error fraction and tabulate fidelity per scheme."""
    params = _merge_config(ctx, params)
    kind = _error_kind(params["error"])
    factories = _scheme_factories(params["schemes"])
    grid = _grid(kind, params["grid_min"], params["grid_max"], params["grid_points"])
    try:
        result = scan(factories, grid)
    except ScanError as exc:
        raise OptimizationFailure(str(exc)) from exc
    out = _ensure_out_dir(params["out"])
    prefix = params["prefix"] or params["error"]
    csv_path = out / f"{prefix}_scan.csv"
    try:
        export_csv(result, csv_path)
        write_plot_script(result, csv_path.name, out / f"{prefix}_scan.gp")
    except OSError as exc:
        raise IOFailure(str(exc)) from exc
    click.echo(f"wrote {csv_path} ({len(grid.points)} points, {params['error']})")
    click.echo("good-fidelity windows:")
    _print_windows(result)
    _print_corpse_note(result)


@main.command(name="grape")
@click.option("--error", type=click.Choice(["ple", "ore", "none"]), default="ple",
              show_default=True, help="error model averaged during training")
@click.option("--train-min", type=float, default=-0.2, show_default=True)
@click.option("--train-max", type=float, default=0.2, show_default=True)
@click.option("--train-points", type=int, default=5, show_default=True)
@click.option("--bins", type=int, default=400, show_default=True)
@click.option("--time", "total_time", type=float, default=6.0 * PI,
              help="total pulse time in 1/Lambda [default: 6*pi]")
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--restarts", type=int, default=5, show_default=True)
@click.option("--penalty", type=float, default=0.01, show_default=True,
              help="power penalty weight alpha_p")
@click.option("--step-size", type=float, default=0.1, show_default=True)
@click.option("--init-scale", type=float, default=0.1, show_default=True)
@click.option("--max-iterations", type=int, default=5000, show_default=True)
@click.option("--lambda-mhz", type=float, default=1.0, show_default=True,
              help="physical max Rabi amplitude, for printed unit annotations only")
@click.option("--out", envvar="PULSEFORGE_OUT", default=".", show_default=True)
@click.option("--prefix", default=None, help="output file prefix [default: error kind]")
@click.option("--config", "config_path", default=None)
@click.pass_context
def cmd_grape(ctx, **params):
    """Train a robust pulse by gradient ascent and checkpoint it."""
    params = _merge_config(ctx, params)
    kind = _error_kind(params["error"])
    if kind is ErrorKind.NONE:
        training: tuple[float, ...] = ()
    else:
        training = _grid(
            kind, params["train_min"], params["train_max"], params["train_points"]
        ).points
    try:
        cfg = GrapeConfig(
            error_kind=kind,
            training=training,
            total_time=params["total_time"],
            bins=params["bins"],
            penalty=params["penalty"],
            step_size=params["step_size"],
            max_iterations=params["max_iterations"],
            seed=params["seed"],
            init_scale=params["init_scale"],
        )
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    try:
        pulse, score = ascend_with_restarts(cfg, restarts=params["restarts"])
    except GrapeNumericsError as exc:
        raise OptimizationFailure(str(exc)) from exc

    out = _ensure_out_dir(params["out"])
    prefix = params["prefix"] or params["error"]
    pulse_path = out / f"{prefix}_pulse.csv"
    trace_path = out / f"{prefix}_trace.csv"
    try:
        export_pulse_csv(pulse, pulse_path)
        with open(trace_path, "w", encoding="ascii") as fh:
            fh.write("iteration,objective\n")
            for i, val in enumerate(pulse.trace):
                fh.write(f"{i},{val:.12g}\n")
    except OSError as exc:
        raise IOFailure(str(exc)) from exc

    lam = params["lambda_mhz"]
    click.echo(f"wrote {pulse_path} and {trace_path}")
    click.echo(
        f"best restart seed {pulse.config.seed}: objective {pulse.performance:.6f} "
        f"after {pulse.iterations} iterations"
    )
    if kind is ErrorKind.NONE:
        click.echo(f"final fidelity (no error model): {score:.6f}")
    else:
        click.echo(
            f"trained-range min fidelity ({params['error']} in "
            f"[{params['train_min']:g}, {params['train_max']:g}]): {score:.6f}"
        )
    click.echo(
        f"pulse duration {cfg.total_time / PI:.6g} pi = "
        f"{cfg.total_time / lam:.4g} us at Lambda = {lam:g} MHz"
    )
    if score < GOOD_FIDELITY_THRESHOLD:
        raise OptimizationFailure(
            f"trained-range min fidelity {score:.6f} < {GOOD_FIDELITY_THRESHOLD} "
            f"after {params['restarts']} restart(s); try more time, bins, or restarts"
        )


@main.command(name="compare")
@click.option("--error", type=click.Choice(["ple", "ore"]), default="ple",
              show_default=True)
@click.option("--grape-pulse", required=True,
              help="pulse checkpoint CSV from the grape command")
@click.option("--grid-min", type=float, default=-0.5, show_default=True)
@click.option("--grid-max", type=float, default=0.5, show_default=True)
@click.option("--grid-points", type=int, default=41, show_default=True)
@click.option("--lambda-mhz", type=float, default=1.0, show_default=True)
@click.option("--out", envvar="PULSEFORGE_OUT", default=".", show_default=True)
@click.option("--prefix", default=None, help="output file prefix [default: error kind]")
@click.option("--config", "config_path", default=None)
@click.pass_context
def cmd_compare(ctx, **params):
    """Run all schemes on one grid; report mean fidelities and durations."""
    params = _merge_config(ctx, params)
    kind = _error_kind(params["error"])
    factories = _scheme_factories(
        f"sequential,bb1,corpse,grape:{params['grape_pulse']}"
    )
    grape_sched, _meta = import_pulse_csv(params["grape_pulse"])
    grid = _grid(kind, params["grid_min"], params["grid_max"], params["grid_points"])
    try:
        result = scan(factories, grid)
    except ScanError as exc:
        raise OptimizationFailure(str(exc)) from exc
    out = _ensure_out_dir(params["out"])
    prefix = params["prefix"] or params["error"]
    csv_path = out / f"{prefix}_compare.csv"
    try:
        export_csv(result, csv_path)
    except OSError as exc:
        raise IOFailure(str(exc)) from exc

    lam = params["lambda_mhz"]
    seq_d = sequential_segments().duration
    durations = {
        "sequential": seq_d,
        "bb1": bb1_sequence().duration,
        "corpse": corpse_sequence().duration,
        "grape": grape_sched.duration,
    }
    click.echo(f"wrote {csv_path}")
    click.echo(
        f"mean fidelity over [{grid.points[0]:g}, {grid.points[-1]:g}] "
        f"({len(grid.points)} points, {params['error']}):"
    )
    for label, vals in result.series.items():
        click.echo(f"  {label:<12} {np.mean(vals):.6f}")
    click.echo("durations (units of 1/Lambda):")
    for label, dur in durations.items():
        click.echo(
            f"  {label:<12} {dur / PI:.6g} pi = {dur / lam:.4g} us "
            f"at Lambda = {lam:g} MHz"
        )
    click.echo(
        f"  corpse/sequential duration ratio: {durations['corpse'] / seq_d:.4f}"
    )
    _print_corpse_note(result)


@main.command(name="info")
def cmd_info():
    """Print the model summary: basis, target gate, constants, units."""
    u_sq = sequential_gate()
    click.echo("three-level effective model, basis order (|0>, |2>, |3>)")
    click.echo("MW drives the |0>-|2> transition, RF drives |2>-|3>")
    click.echo("")
    click.echo("target gate U_sq = U_r U_m (rows/cols in basis order):")
    for row in u_sq.real:
        cleaned = [0.0 if abs(v) < 5e-13 else v for v in row]
        click.echo("  [ " + "  ".join(f"{v:+9.6f}" for v in cleaned) + " ]")
    click.echo("U_sq |0> = (|0> - |3>)/sqrt(2), the entangled target state")
    click.echo("")
    click.echo("transition frequencies (documentation only; model is frequency-free):")
    click.echo(f"  |0>-|2> (MW)        {NV_CONSTANTS.mw_transition_hz / 1e9:.2f} GHz")
    click.echo(f"  |2>-|3> (RF)        {NV_CONSTANTS.rf_transition_hz / 1e6:.0f} MHz")
    click.echo(f"  hyperfine splitting {NV_CONSTANTS.hyperfine_splitting_hz / 1e6:.0f} MHz")
    click.echo("")
    click.echo("units: amplitudes in Lambda, times in 1/Lambda; at Lambda = 1 MHz")
    click.echo("the sequential gate (duration 1.5 pi) lasts 4.712 us")


if __name__ == "__main__":
    main()
