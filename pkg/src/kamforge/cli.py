import json
import logging
import math
import os
import re
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Annotated, Any

import numpy as np
import typer
from numpy.typing import NDArray
from rich.console import Console
from rich.table import Table

from ._config import RunConfig, load_config
from ._diagnostics import RunResult, conjugacy_residual, rotation_number
from ._divisors import Convention, DiophantineParams, check_diophantine, golden_like_frequency
from ._errors import ConfigError, ConvergenceFailure, KamError
from ._frequency import degree
from ._logging import setup_logging
from ._models import ParamMapModel, TwistMapModel
from ._param import param_kam_run
from ._records import to_json
from ._schedule import schedule_init
from ._twist import twist_kam_run
from .testbed import ModelKind, frequency_map, get_entry, list_catalog

LOGGER = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_DIVERGED = 0, 1, 2

app = typer.Typer(no_args_is_help=True)
verify_app = typer.Typer(no_args_is_help=True, help="Check a single property.")
app.add_typer(verify_app, name="verify")

_SWEEP = re.compile(
    r"^(?P<name>\w+)=(?P<start>[^:]+?)\.\.(?P<stop>[^:]+):(?P<kind>geometric|linear):(?P<count>\d+)$"
)
_SWEEP_ALIASES = {"eps": "epsilon", "epsilon": "epsilon", "tol": "tolerances.tol"}


def build_model(config: RunConfig) -> TwistMapModel | ParamMapModel:
    """The catalog model a configuration refers to, with its overrides."""
    model = get_entry(config.model).model(config.epsilon, config.target, config.box)
    assert isinstance(model, TwistMapModel | ParamMapModel)
    return model


def execute(
    config: RunConfig, out: Path | None = None
) -> tuple[int, dict[str, Any], RunResult | None]:
    """
    Run the engine a configuration selects and write its artifacts.

    Parameters
    ----------
    config : RunConfig
        The validated configuration.
    out : Path | None, optional
        Directory receiving ``metrics.csv``, ``ledger.csv`` and
        ``result.json``; nothing is written when None.

    Returns
    -------
    tuple[int, dict[str, Any], RunResult | None]
        The exit status, the result record and the run result when the
        engine got far enough to produce one.

    """
    result: RunResult | None = None
    try:
        model = build_model(config)
        freq = frequency_map(model)
        schedule = None
        if model.epsilon > 0:
            s = config.schedule
            schedule = schedule_init(
                model.epsilon,
                n=model.dim,
                m=s.m or freq.domain_dim,
                rho=s.rho,
                eta=s.eta,
                h0=s.h0,
                s0=s.s0,
                log_base=s.log_base,
                diophantine=config.diophantine,
            )
        runner = twist_kam_run if isinstance(model, TwistMapModel) else param_kam_run
        t = config.tolerances
        result = runner(
            model,  # type: ignore[arg-type]
            tol=t.tol,
            freq_tol=t.freq_tol,
            max_steps=config.max_steps,
            kcap=config.schedule.kcap,
            guard=t.guard,
            diophantine=config.diophantine,
            schedule=schedule,
            translate=config.translate,
        )
        code = EXIT_OK
        record = result.to_record()
        record["report"] = result.report(freq.modulus_upper).to_record()
    except ConvergenceFailure as err:
        code = EXIT_DIVERGED
        result = err.result
        if result is not None:
            record = result.to_record()
        else:
            record = {"status": "diverged", "error": type(err).__name__, "message": str(err)}
    except (KamError, ValueError) as err:
        code = EXIT_ERROR
        record = {"status": "error", "error": type(err).__name__, "message": str(err)}
        LOGGER.error("%s", err)
    record["config"] = config.to_record()
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if result is not None:
            result.metrics.to_csv(out / "metrics.csv")
            result.chain.translations.to_csv(out / "ledger.csv")
        to_json(record, out / "result.json")
    return code, record, result


def _run_point(config: RunConfig, out: Path) -> int:
    code, _, _ = execute(config, out)
    return code


def parse_sweep(spec: str) -> tuple[str, list[float]]:
    """
    Parse ``name=start..stop:geometric|linear:count``.

    Examples
    --------
    >>> parse_sweep("eps=0..1:linear:3")
    ('epsilon', [0.0, 0.5, 1.0])

    """
    match = _SWEEP.match(spec.strip())
    if match is None:
        raise ConfigError(f"sweep {spec!r}: expected name=start..stop:geometric|linear:count.")
    name = _SWEEP_ALIASES.get(match["name"])
    if name is None:
        raise ConfigError(f"sweep {spec!r}: unknown variable {match['name']!r}.")
    start, stop, count = float(match["start"]), float(match["stop"]), int(match["count"])
    if count < 1:
        raise ConfigError(f"sweep {spec!r}: count must be positive.")
    if match["kind"] == "geometric":
        if start <= 0 or stop <= 0:
            raise ConfigError(f"sweep {spec!r}: geometric sweeps need positive bounds.")
        values = np.geomspace(start, stop, count)
    else:
        values = np.linspace(start, stop, count)
    values[0], values[-1] = start, stop
    return name, [float(v) for v in values]


def _workers(jobs: int) -> int:
    limit = os.environ.get("KAMFORGE_THREADS")
    cap = int(limit) if limit else (os.cpu_count() or 1)
    return max(1, min(cap, jobs))


def _reject_point(out: Path, err: ConfigError) -> int:
    out.mkdir(parents=True, exist_ok=True)
    to_json({"status": "error", "error": type(err).__name__, "message": str(err)}, out / "result.json")
    return EXIT_ERROR


def _sweep(config: RunConfig, out: Path, spec: str) -> int:
    name, values = parse_sweep(spec)
    label = "eps" if name == "epsilon" else name.rpartition(".")[2]
    codes: dict[int, int] = {}
    points: list[tuple[int, RunConfig, Path]] = []
    for i, v in enumerate(values):
        target = out / f"{label}={v!r}"
        try:
            points.append((i, config.with_overrides(**{name: v}), target))
        except ConfigError as err:
            LOGGER.error("%s=%r: %s", label, v, err)
            codes[i] = _reject_point(target, err)
    workers = _workers(len(points))
    if workers == 1:
        codes |= {i: _run_point(c, o) for i, c, o in points}
    elif points:
        index, configs, targets = zip(*points, strict=True)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes |= dict(zip(index, pool.map(_run_point, configs, targets), strict=True))
    for i, v in enumerate(values):
        LOGGER.info("%s=%r: exit %d", label, v, codes[i])
    if EXIT_ERROR in codes.values():
        return EXIT_ERROR
    return EXIT_DIVERGED if EXIT_DIVERGED in codes.values() else EXIT_OK


@app.command()
def run(
    config: Annotated[Path, typer.Option("--config", help="JSON run configuration.")],
    out: Annotated[Path | None, typer.Option("--out", help="Output directory.")] = None,
    sweep: Annotated[
        str | None, typer.Option(help='e.g. "eps=1e-5..1e-3:geometric:5".')
    ] = None,
    max_steps: Annotated[int | None, typer.Option(help="Step budget.")] = None,
    tol: Annotated[float | None, typer.Option(help="Stopping tolerance.")] = None,
    verbose: Annotated[int, typer.Option("--verbose", "-v", count=True)] = 0,
    quiet: bool = False,
) -> None:
    """
    Run the engine selected by a configuration.

    Exits with 0 on convergence, 2 on a controlled divergence and 1 on
    any other error.
    """
    setup_logging(verbose, quiet)
    try:
        cfg = load_config(config)
        changes: dict[str, Any] = {}
        if max_steps is not None:
            changes["max_steps"] = max_steps
        if tol is not None:
            changes["tolerances.tol"] = tol
        cfg = cfg.with_overrides(**changes)
        target = out or Path(cfg.out or "kamforge-out")
        if sweep is not None:
            code = _sweep(cfg, target, sweep)
        else:
            code, record, _ = execute(cfg, target)
            typer.echo(
                json.dumps(
                    {k: record.get(k) for k in ("status", "steps", "freq_residual", "residual", "error")}
                )
            )
    except (KamError, OSError) as e:
        LOGGER.error("%s", e)
        raise typer.Exit(EXIT_ERROR) from e
    raise typer.Exit(code)


@app.command()
def catalog() -> None:
    """List the catalog models."""
    table = Table(title="kamforge catalog")
    for column in ("name", "kind", "epsilon", "target", "description"):
        table.add_column(column)
    for entry in list_catalog():
        table.add_row(
            entry.name,
            str(entry.kind),
            f"{entry.default_epsilon:g}" if entry.kind != ModelKind.FREQUENCY else "",
            ", ".join(f"{x:.6g}" for x in entry.target),
            entry.description,
        )
    Console().print(table)


def _frequency_of(name: str) -> NDArray[np.float64]:
    named = {"golden": [1], "silver": [2]}
    if name in named:
        return golden_like_frequency(named[name])
    try:
        return np.array([float(x) for x in name.split(",")])
    except ValueError as e:
        raise ConfigError(f"--omega {name!r}: expected golden, silver or numbers.") from e


def _report(record: dict[str, Any], holds: bool) -> None:
    record["holds"] = holds
    typer.echo(json.dumps(record, indent=2))
    raise typer.Exit(EXIT_OK if holds else EXIT_ERROR)


@verify_app.command()
def diophantine(
    omega: Annotated[str, typer.Option(help="golden, silver or comma-separated values.")] = "golden",
    tau: float = 1.5,
    gamma: float = 1.0,
    kmax: int = 64,
    convention: Convention = Convention.PERIOD_TWO_PI,
) -> None:
    """Diophantine check of a rotation vector."""
    try:
        w = _frequency_of(omega)
        report = check_diophantine(w, DiophantineParams(gamma, tau, kmax=kmax), convention)
    except (KamError, ValueError) as e:
        LOGGER.error("%s", e)
        raise typer.Exit(EXIT_ERROR) from e
    _report({"omega": w.tolist(), **report.to_record()}, report.satisfied)


@verify_app.command("degree")
def degree_(
    map_: Annotated[str, typer.Option("--map", help="Catalog entry.")],
    p: Annotated[str | None, typer.Option(help="Comma-separated target.")] = None,
) -> None:
    """Brouwer degree of a catalog frequency map at a target."""
    try:
        entry = get_entry(map_)
        target = entry.target if p is None else np.array([float(x) for x in p.split(",")])
        value = degree(frequency_map(entry.model(0.0)), target)
    except (KamError, KeyError, ValueError) as e:
        LOGGER.error("%s", e)
        raise typer.Exit(EXIT_ERROR) from e
    _report({"map": map_, "p": target.tolist(), "degree": value}, bool(value))


@verify_app.command()
def rotation(
    map_: Annotated[str, typer.Option("--map", help="Catalog twist or parameter entry.")],
    eps: float = 0.0,
    r: Annotated[float | None, typer.Option(help="Action, or parameter.")] = None,
    theta: float = 0.1,
    iters: int = 10_000,
    expect: float | None = None,
    atol: float = 1e-9,
) -> None:
    """Rotation number of one orbit of a catalog model."""
    try:
        model = get_entry(map_).model(eps)
        if isinstance(model, TwistMapModel):
            action = model.r_star if r is None else np.full(model.dim, r)
            estimate = rotation_number(
                model.state_map, np.concatenate([np.full(model.dim, theta), action]), iters
            )
        elif isinstance(model, ParamMapModel):
            xi = model.xi_star if r is None else np.full(model.freq.domain_dim, r)
            estimate = rotation_number(
                lambda th: model.step(th, xi), np.full(model.dim, theta), iters
            )
        else:
            raise ConfigError(f"{map_!r} is a bare frequency map.")
    except (KamError, KeyError, ValueError) as e:
        LOGGER.error("%s", e)
        raise typer.Exit(EXIT_ERROR) from e
    value = float(np.max(estimate.value))
    holds = expect is None or math.isclose(value, expect, abs_tol=atol)
    _report(
        {
            "map": map_,
            "rotation_number": value,
            "uncertainty": float(np.max(estimate.uncertainty)),
            "iters": estimate.iters,
        },
        holds,
    )


@verify_app.command()
def residual(
    config: Annotated[Path, typer.Option("--config", help="JSON run configuration.")],
) -> None:
    """Run a configuration and re-check its conjugacy on a fresh grid."""
    setup_logging(0, quiet=True)
    try:
        cfg = load_config(config)
        code, record, result = execute(cfg)
    except (KamError, OSError) as e:
        LOGGER.error("%s", e)
        raise typer.Exit(EXIT_ERROR) from e
    if code != EXIT_OK:
        typer.echo(json.dumps({"status": record["status"], "error": record.get("error")}))
        raise typer.Exit(code)
    assert result is not None
    value = conjugacy_residual(result.chain, build_model(cfg), grid=2048)
    _report(
        {
            "residual": value,
            "freq_residual": record["freq_residual"],
            "bound": 10 * cfg.tolerances.tol,
        },
        value <= 10 * cfg.tolerances.tol,
    )
