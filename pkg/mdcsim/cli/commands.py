from __future__ import annotations

import functools
from typing import Optional
from typing import Tuple

import click

from mdcsim.core.exceptions import MdcSimError
from mdcsim.schemas.placement import ScenarioTag
from mdcsim.schemas.run_config import RunConfig
from mdcsim.services import pipeline
from mdcsim.services.logger import configure_logging
from mdcsim.services.run_config import load_run_config

SCENARIO_CHOICE = click.Choice([tag.value for tag in ScenarioTag], case_sensitive=False)


def _domain_errors(func):
    """MdcSimError -> one-line diagnostic and exit code 1."""
    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except MdcSimError as e:
            raise click.ClickException(f"{type(e).__name__}: {e}") from e
    return wrapper


def run_options(func):
    func = click.option("--scenario", "scenarios", multiple=True, type=SCENARIO_CHOICE,
                        help="Scenario tag to run; repeat for several (default: all in the config).")(func)
    func = click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
                        help="Artifact directory (overrides out_dir).")(func)
    func = click.option("--seed", type=click.IntRange(min=0), default=None, help="Root seed (overrides seed).")(func)
    func = click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
                        help="TOML run configuration.")(func)
    return func


def _config(config_path: Optional[str], seed: Optional[int], out_dir: Optional[str],
            scenarios: Tuple[str, ...], jobs: Optional[int] = None) -> RunConfig:
    return load_run_config(
        config_path,
        seed=seed,
        out_dir=out_dir,
        scenarios=[s.upper() for s in scenarios] or None,
        jobs=jobs,
    )


@click.group()
@click.option("--log-level", default=None, help="Overrides MDCSIM_LOG_LEVEL.")
def cli(log_level: Optional[str]):
    """Micro data center deployment simulator."""
    configure_logging(level=log_level)


@cli.command("gen-map")
@run_options
@_domain_errors
def gen_map(config_path, seed, out_dir, scenarios):
    """Write out/map.json from the configured map file or a synthetic city."""
    path = pipeline.gen_map(_config(config_path, seed, out_dir, scenarios))
    click.echo(str(path))


@cli.command("gen-trace")
@run_options
@_domain_errors
def gen_trace(config_path, seed, out_dir, scenarios):
    """Generate the pedestrian trace and print its sha256."""
    click.echo(pipeline.gen_trace(_config(config_path, seed, out_dir, scenarios)))


@cli.command("place")
@run_options
@_domain_errors
def place(config_path, seed, out_dir, scenarios):
    """Presence grid, clustering placement and the hospital variants."""
    for path in pipeline.place_scenarios(_config(config_path, seed, out_dir, scenarios)):
        click.echo(str(path))


@cli.command("simulate")
@run_options
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Scenario runs in parallel processes.")
@click.option("--events/--no-events", default=False, help="Also write events.csv for each run.")
@_domain_errors
def simulate(config_path, seed, out_dir, scenarios, jobs, events):
    """Run the MDC simulation for every scenario."""
    config = _config(config_path, seed, out_dir, scenarios, jobs)
    for tag, path in pipeline.simulate_all(config, record_events=events).items():
        click.echo(f"{tag}\t{path}")


@cli.command("report")
@run_options
@_domain_errors
def report(config_path, seed, out_dir, scenarios):
    """Aggregate raw results into CSV, SVG and summary.json."""
    written = pipeline.report(_config(config_path, seed, out_dir, scenarios))
    click.echo(f"{len(written)} files written")


@cli.command("pipeline")
@run_options
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Scenario runs in parallel processes.")
@click.option("--events/--no-events", default=False, help="Also write events.csv for each run.")
@_domain_errors
def run_all(config_path, seed, out_dir, scenarios, jobs, events):
    """gen-map, gen-trace, place, simulate and report in one go."""
    config = _config(config_path, seed, out_dir, scenarios, jobs)
    written = pipeline.run_pipeline(config, record_events=events)
    click.echo(f"{len(written)} report files under {pipeline.layout(config).report}")
