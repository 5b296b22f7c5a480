"""Console script for stepped-wedge cluster-period GEE analyses.

Every subcommand writes one JSON document (sorted keys, two-space indent) to stdout with
its run manifest embedded. Exit codes: 0 success, 1 oracle violation, 2 usage or input
error, 3 non-convergence.
"""

from __future__ import annotations

import dataclasses
import io
import logging
import math
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from typing import Any

import click
import numpy as np
import pandas as pd
from numpy.random import SeedSequence

from .config import configure_logging, load_settings
from .core.coordinator import TrialAnalyzer
from .core.errors import NonConvergenceError, SteppedWedgeError
from .core.manifest import build_manifest, dump_json
from .core.specs import AreConfig, ModelSpec, parse_size_range
from .data.ingest import ingest_cluster_period, ingest_individual
from .efficiency import are_estimate
from .models.correlation import CorrelationParams
from .models.shared import Adjustment, Correction, CorrelationStructure, LinkFunction
from .oracle import run_oracle
from .simulation.design import staircase
from .simulation.experiment import records_frame, run_experiment, run_sweep
from .simulation.presets import COVERAGE_SWEEP_CLUSTERS, preset, preset_names

_LOGGER = logging.getLogger(__name__)

EXIT_ORACLE_VIOLATION = 1
EXIT_NONCONVERGENCE = 3

STRUCTURE_CHOICES = ("independence", "ind", "exchangeable", "exch", "nested-exch", "ne", "exp-decay", "ed")


@contextmanager
def _domain_errors() -> Iterator[None]:
    """Map domain failures onto the documented exit codes."""

    try:
        yield
    except NonConvergenceError as exc:
        payload = {"error": str(exc), "trace": [_record(record) for record in exc.trace]}
        click.echo(dump_json(payload))
        click.echo(f"error: {exc}", err=True)
        raise click.exceptions.Exit(EXIT_NONCONVERGENCE) from exc
    except (SteppedWedgeError, ValueError) as exc:
        raise click.UsageError(str(exc)) from exc


def _record(record: Any) -> Any:
    return dataclasses.asdict(record) if dataclasses.is_dataclass(record) else record


def _emit(payload: Mapping[str, Any], pretty: bool) -> None:
    if pretty:
        click.echo(_render(payload))
    else:
        click.echo(dump_json(payload))


def _render(payload: Mapping[str, Any], indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key in sorted(payload):
        value = payload[key]
        if isinstance(value, Mapping):
            lines.append(f"{pad}{key}:")
            lines.append(_render(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], Mapping):
            lines.append(f"{pad}{key}:")
            for item in value:
                lines.append(pad + "  - " + ", ".join(f"{k}={_fmt(v)}" for k, v in sorted(item.items())))
        else:
            lines.append(f"{pad}{key}: {_fmt(value)}")
    return "\n".join(line for line in lines if line)


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return "nan" if not math.isfinite(value) else f"{value:.6g}"
    return str(value)


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    generated = int(SeedSequence().entropy % (2**32))
    _LOGGER.info("no --seed given; using generated seed %d", generated)
    return generated


def _parse_corrections(text: str) -> tuple[Correction, ...]:
    corrections = []
    for part in text.split(","):
        part = part.strip().lower()
        if not part:
            continue
        corrections.append(Correction.MODEL if part == "model" else Correction.from_digit(part))
    return tuple(dict.fromkeys(corrections))


def _parse_truth(text: str) -> CorrelationParams:
    """``ind``, ``exch:a0``, ``ne:a0,a1`` or ``ed:a0,rho``."""

    name, _, values = text.partition(":")
    structure = CorrelationStructure.parse(name)
    numbers = [float(v) for v in values.split(",") if v.strip()]
    if structure is CorrelationStructure.INDEPENDENCE:
        return CorrelationParams.independence()
    if structure is CorrelationStructure.EXCHANGEABLE and len(numbers) == 1:
        return CorrelationParams.exchangeable(*numbers)
    if structure is CorrelationStructure.NESTED_EXCHANGEABLE and len(numbers) == 2:
        return CorrelationParams.nested_exchangeable(*numbers)
    if structure is CorrelationStructure.EXPONENTIAL_DECAY and len(numbers) == 2:
        return CorrelationParams.exponential_decay(*numbers)
    raise ValueError(f"cannot parse truth {text!r}; use ind, exch:a0, ne:a0,a1 or ed:a0,rho")


def _read_design_csv(payload: bytes) -> np.ndarray:
    frame = pd.read_csv(io.BytesIO(payload), header=None)
    return frame.to_numpy(dtype=np.int64)


@click.group()
@click.option("--log-level", default=None, help="Logging level (defaults to SWGEE_LOG_LEVEL or WARNING).")
@click.pass_context
def cli(ctx: click.Context, log_level: str | None) -> None:
    """Cluster-period GEE for stepped-wedge trials."""

    try:
        settings = load_settings()
        configure_logging(log_level or settings.log_level)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    ctx.obj = settings


@cli.command("fit")
@click.option("--input", "input_file", type=click.File("rb"), required=True, help="CSV path or '-' for stdin.")
@click.option("--schema", type=click.Choice(["individual", "cluster-period"]), default="cluster-period", show_default=True)
@click.option("--link", type=click.Choice([l.value for l in LinkFunction]), default="logit", show_default=True)
@click.option("--corr", "structure", type=click.Choice(STRUCTURE_CHOICES), default="nested-exch", show_default=True)
@click.option("--adjust", type=click.Choice([a.value for a in Adjustment]), default="maee", show_default=True)
@click.option("--bc", default="0,1,2,3", show_default=True, help="Comma-separated corrections (0-3, model).")
@click.option("--confidence", type=float, default=0.95, show_default=True)
@click.option("--max-iter", type=int, default=200, show_default=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--tie-alpha1", is_flag=True, help="Constrain alpha1 = alpha0 (nested exchangeable).")
@click.option("--fixed-rho", type=float, default=None, help="Hold rho fixed (exponential decay).")
@click.option("--cluster-order", type=click.Choice(["appearance", "sorted"]), default="appearance", show_default=True)
@click.option("--strict-uee", is_flag=True, help="Use raw residual products in the sandwich of UEE fits.")
@click.option("--pretty", is_flag=True, help="Render a human-readable report instead of JSON.")
def fit_command(input_file: io.BufferedReader, **options: Any) -> None:
    """Fit a cluster-period GEE and report estimates, variances, intervals and CIC."""

    payload_bytes = input_file.read()
    with _domain_errors():
        ingest = ingest_individual if options["schema"] == "individual" else ingest_cluster_period
        data = ingest(payload_bytes, cluster_order=options["cluster_order"])
        spec = ModelSpec(
            structure=CorrelationStructure.parse(options["structure"]),
            link=LinkFunction(options["link"]),
            adjustment=Adjustment(options["adjust"]),
            max_outer_iterations=options["max_iter"],
            tolerance=options["tol"],
            tie_alpha1=options["tie_alpha1"],
            fixed_rho=options["fixed_rho"],
        )
        analyzer = TrialAnalyzer(strict_uee=options["strict_uee"])
        analysis = analyzer.analyze(data, spec, _parse_corrections(options["bc"]), options["confidence"])
    manifest = build_manifest("fit", options, {"input": payload_bytes})
    report = analysis.as_dict()
    report["manifest"] = manifest.as_dict()
    _emit(report, options["pretty"])
    if not analysis.fit.converged:
        raise click.exceptions.Exit(EXIT_NONCONVERGENCE)


@cli.command("compare")
@click.option("--input", "input_file", type=click.File("rb"), required=True)
@click.option("--schema", type=click.Choice(["individual", "cluster-period"]), default="cluster-period", show_default=True)
@click.option("--link", type=click.Choice([l.value for l in LinkFunction]), default="logit", show_default=True)
@click.option("--adjust", type=click.Choice([a.value for a in Adjustment]), default="maee", show_default=True)
@click.option("--corr", "structures", type=click.Choice(STRUCTURE_CHOICES), multiple=True, help="Repeat to choose structures.")
@click.option("--pretty", is_flag=True)
def compare_command(input_file: io.BufferedReader, **options: Any) -> None:
    """Rank working correlation structures by CIC."""

    payload_bytes = input_file.read()
    with _domain_errors():
        ingest = ingest_individual if options["schema"] == "individual" else ingest_cluster_period
        data = ingest(payload_bytes)
        spec = ModelSpec(link=LinkFunction(options["link"]), adjustment=Adjustment(options["adjust"]))
        analyzer = TrialAnalyzer()
        if options["structures"]:
            chosen = tuple(dict.fromkeys(CorrelationStructure.parse(s) for s in options["structures"]))
            scores = analyzer.compare_structures(data, chosen, spec)
        else:
            scores = analyzer.compare_structures(data, spec=spec)
    options["structures"] = list(options["structures"])
    report = {
        "ranking": [score.as_dict() for score in scores],
        "manifest": build_manifest("compare", options, {"input": payload_bytes}).as_dict(),
    }
    _emit(report, options["pretty"])


@cli.command("simulate")
@click.option("--preset", "preset_name", type=click.Choice(preset_names()), default=None)
@click.option("--clusters", type=int, default=None, help="Number of clusters I.")
@click.option("--replicates", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--truth", default=None, help="ind, exch:a0, ne:a0,a1 or ed:a0,rho.")
@click.option("--sizes", default=None, help="Cluster-period size range a:b.")
@click.option("--delta", type=float, default=None)
@click.option("--link", type=click.Choice([l.value for l in LinkFunction]), default=None)
@click.option("--adjust", type=click.Choice([a.value for a in Adjustment]), multiple=True)
@click.option("--sweep", default=None, help="Comma-separated cluster counts; 'default' for the preset ladder.")
@click.option("--records-csv", type=click.Path(dir_okay=False, writable=True), default=None)
@click.option("--threads", type=int, default=None, help="Worker threads (defaults to SWGEE_THREADS).")
@click.option("--pretty", is_flag=True)
@click.pass_obj
def simulate_command(settings: Any, **options: Any) -> None:
    """Run the bias/coverage experiment."""

    seed = _resolve_seed(options["seed"])
    threads = options["threads"] or settings.threads
    with _domain_errors():
        overrides = {
            "clusters": options["clusters"],
            "replicates": options["replicates"],
            "seed": seed,
            "truth": _parse_truth(options["truth"]) if options["truth"] else None,
            "sizes": parse_size_range(options["sizes"]) if options["sizes"] else None,
            "delta": options["delta"],
            "link": LinkFunction(options["link"]) if options["link"] else None,
            "adjustments": tuple(Adjustment(a) for a in options["adjust"]) or None,
        }
        config = preset(options["preset_name"] or "table2-ne-small", **overrides)
        if options["sweep"]:
            counts = (
                COVERAGE_SWEEP_CLUSTERS
                if options["sweep"] == "default"
                else tuple(int(part) for part in options["sweep"].split(","))
            )
            reports = run_sweep(config, counts, threads)
        else:
            reports = (run_experiment(config, threads),)
    options["seed"] = seed
    options["adjust"] = list(options["adjust"])
    payload: dict[str, Any] = {
        "reports": [report.as_dict() for report in reports],
        "manifest": build_manifest("simulate", options, seed=seed).as_dict(),
    }
    if options["records_csv"]:
        frames = [records_frame(report).assign(clusters=report.clusters) for report in reports]
        pd.concat(frames, ignore_index=True).to_csv(options["records_csv"], index=False, lineterminator="\n")
    _emit(payload, options["pretty"])


@cli.command("are")
@click.option("--design", type=(str, int, int), default=None, help="staircase I J")
@click.option("--design-csv", type=click.File("rb"), default=None, help="I x J 0/1 matrix without header.")
@click.option("--corr", "structure", type=click.Choice(STRUCTURE_CHOICES), default="nested-exch", show_default=True)
@click.option("--alpha0", type=float, default=0.0, show_default=True)
@click.option("--alpha1", type=float, default=0.0, show_default=True)
@click.option("--rho", type=float, default=1.0, show_default=True)
@click.option("--sizes", default="50:150", show_default=True)
@click.option("-K", "--replicates", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--link", type=click.Choice([l.value for l in LinkFunction]), default="logit", show_default=True)
@click.option("--delta", type=float, default=math.log(0.75), show_default=True)
@click.option("--threads", type=int, default=None)
@click.option("--pretty", is_flag=True)
@click.pass_obj
def are_command(settings: Any, **options: Any) -> None:
    """Mean relative efficiency of the modeled structure against working independence."""

    seed = _resolve_seed(options["seed"])
    threads = options["threads"] or settings.threads
    inputs: dict[str, bytes] = {}
    with _domain_errors():
        if options["design_csv"] is not None:
            inputs["design"] = options["design_csv"].read()
            design = _read_design_csv(inputs["design"])
        elif options["design"] is not None:
            kind, clusters, periods = options["design"]
            if kind != "staircase":
                raise ValueError(f"unknown design {kind!r}; only 'staircase I J' is built in")
            design = staircase(clusters, periods)
        else:
            raise ValueError("one of --design or --design-csv is required")
        structure = CorrelationStructure.parse(options["structure"])
        truth = {
            CorrelationStructure.INDEPENDENCE: lambda: CorrelationParams.independence(),
            CorrelationStructure.EXCHANGEABLE: lambda: CorrelationParams.exchangeable(options["alpha0"]),
            CorrelationStructure.NESTED_EXCHANGEABLE: lambda: CorrelationParams.nested_exchangeable(
                options["alpha0"], options["alpha1"]
            ),
            CorrelationStructure.EXPONENTIAL_DECAY: lambda: CorrelationParams.exponential_decay(
                options["alpha0"], options["rho"]
            ),
        }[structure]()
        config = AreConfig(
            design=design,
            truth=truth,
            sizes=parse_size_range(options["sizes"]),
            replicates=options["replicates"],
            seed=seed,
            link=LinkFunction(options["link"]),
            delta=options["delta"],
        )
        result = are_estimate(config, threads)
    options["seed"] = seed
    options.pop("design_csv")
    payload = result.as_dict()
    payload["manifest"] = build_manifest("are", options, inputs, seed=seed).as_dict()
    _emit(payload, options["pretty"])


@cli.command("oracle-check")
@click.option("--structure", type=click.Choice(["ne", "ed", "exch", "both"]), default="both", show_default=True)
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--corrupt", is_flag=True, hidden=True)
@click.option("--pretty", is_flag=True)
def oracle_command(**options: Any) -> None:
    """Check cluster-period and individual-level quasi-scores agree on random small trials."""

    seed = _resolve_seed(options["seed"])
    structures = {
        "ne": (CorrelationStructure.NESTED_EXCHANGEABLE,),
        "ed": (CorrelationStructure.EXPONENTIAL_DECAY,),
        "exch": (CorrelationStructure.EXCHANGEABLE,),
        "both": (CorrelationStructure.NESTED_EXCHANGEABLE, CorrelationStructure.EXPONENTIAL_DECAY),
    }[options["structure"]]
    with _domain_errors():
        report = run_oracle(options["trials"], seed, structures, corrupt=options["corrupt"])
    options["seed"] = seed
    payload: dict[str, Any] = {
        "trials": report.trials,
        "max_discrepancy": report.max_discrepancy,
        "tolerance": report.tolerance,
        "passed": report.passed,
        "manifest": build_manifest("oracle-check", options, seed=seed).as_dict(),
    }
    if not report.passed and report.worst is not None:
        payload["instance"] = report.worst.as_dict()
    _emit(payload, options["pretty"])
    click.echo(f"max discrepancy {report.max_discrepancy:.3e}", err=True)
    if not report.passed:
        raise click.exceptions.Exit(EXIT_ORACLE_VIOLATION)


def main() -> None:
    """Main console script for swgee."""

    cli(prog_name="swgee")


if __name__ == "__main__":
    main()
