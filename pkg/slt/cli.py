"""
slt CLI - one subcommand per experiment, plus init, version and schema
"""
import json
import logging
import time
from pathlib import Path
from typing import Optional

import questionary
import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape

from slt import __version__
from slt.config import ExperimentConfig, parse_config
from slt.errors import AcceptanceFailure, ConfigError, SLTError
from slt.experiments import REGISTRY, RunSummary, replica_pool, write_outputs
from slt.experiments.simulate import SimulateExperiment
from slt.skeleton_io import dump_skeleton
from slt.templates import available_templates, generate_template, get_template_path

app = typer.Typer(
    name="slt",
    help="Simulate marked spectrally positive stable processes and check their local-time approximations",
    add_completion=True,
    no_args_is_help=True,  # Show help if no command is given
)

console = Console()
logger = logging.getLogger("slt")

USAGE_ERROR = 1
ACCEPTANCE_ERROR = 2

# --- Shared options ---

CONFIG_OPTION = typer.Option(None, "--config", "-c", help="Experiment config (key=value lines)")
OUT_OPTION = typer.Option(None, "--out", "-o", help="Output directory (overrides the config)")
SEED_OPTION = typer.Option(None, "--seed", "-s", help="Master seed, a 64-bit unsigned integer (overrides the config)")
THREADS_OPTION = typer.Option(
    None, "--threads", "-t", envvar="SLT_THREADS", help="Worker processes (overrides the config)"
)


@app.callback()
def setup(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug diagnostics")):
    """
    Configure logging for every subcommand
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )


# --- Helper Functions ---


def load_config(
    config_path: Optional[Path],
    out: Optional[Path] = None,
    seed: Optional[int] = None,
    threads: Optional[int] = None,
) -> ExperimentConfig:
    """Read the config file (defaults when absent) and apply the command-line overrides."""
    if config_path is None:
        config = ExperimentConfig()
    else:
        try:
            text = config_path.read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read {config_path}: {e.strerror}") from e
        config = parse_config(text)
    try:
        return config.with_overrides(seed=seed, threads=threads, out=str(out) if out is not None else None)
    except ValidationError as e:
        error = e.errors()[0]
        raise ConfigError(f"{error['loc'][0] if error['loc'] else 'override'}: {error['msg']}") from e


def run_experiment(
    name: str,
    config_path: Optional[Path],
    out: Optional[Path],
    seed: Optional[int],
    threads: Optional[int],
    dump: Optional[Path] = None,
) -> None:
    """Run one experiment, write its artifacts and exit with 0, 1 (usage) or 2 (failed checks)."""
    try:
        config = load_config(config_path, out, seed, threads)
        logger.debug("resolved config: %s", config.model_dump(mode="json"))
        experiment = REGISTRY[name](config)
        console.print(f"[bold blue]Running {name}[/bold blue] (seed {config.seed}, {config.threads} worker(s))")

        started = time.perf_counter()
        with replica_pool(config.threads) as mapper:
            output = experiment.run(mapper)
        wall_time = time.perf_counter() - started

        csv_path, json_path = write_outputs(experiment, output, Path(config.out), wall_time)
        console.print(f"[green]Created: {csv_path}[/green]")
        console.print(f"[green]Created: {json_path}[/green]")
        if dump is not None and isinstance(experiment, SimulateExperiment):
            dump_skeleton(experiment.first_skeleton(), dump)
            console.print(f"[green]Created: {dump}[/green]")

        for check in output.checks:
            mark = "[green]passed[/green]" if check.passed else "[bold red]FAILED[/bold red]"
            console.print(f"  {check.name}: {mark} {escape(check.detail)}")
        if not output.passed:
            failed = [c.name for c in output.checks if not c.passed]
            raise AcceptanceFailure(f"{len(failed)} check(s) failed: {', '.join(failed)}")
    except AcceptanceFailure as e:
        console.print(f"[bold red]Error: {escape(str(e))}[/bold red]")
        raise typer.Exit(ACCEPTANCE_ERROR)
    except SLTError as e:
        console.print(f"[bold red]Error: {escape(str(e))}[/bold red]")
        raise typer.Exit(USAGE_ERROR)

    console.print(f"[bold green]{name} finished in {wall_time:.1f}s[/bold green]")


# --- Experiment commands ---


@app.command()
def simulate(
    config: Optional[Path] = CONFIG_OPTION,
    out: Optional[Path] = OUT_OPTION,
    seed: Optional[int] = SEED_OPTION,
    threads: Optional[int] = THREADS_OPTION,
    dump: Optional[Path] = typer.Option(None, "--dump", help="Write the skeleton of replica 0 to this file"),
):
    """
    Simulate skeletons and compare jump counts with the Levy tail
    """
    run_experiment("simulate", config, out, seed, threads, dump)


def _register(name: str) -> None:
    def command(
        config: Optional[Path] = CONFIG_OPTION,
        out: Optional[Path] = OUT_OPTION,
        seed: Optional[int] = SEED_OPTION,
        threads: Optional[int] = THREADS_OPTION,
    ):
        run_experiment(name, config, out, seed, threads)

    command.__doc__ = REGISTRY[name].description
    app.command(name)(command)


for _name in REGISTRY:
    if _name != "simulate":
        _register(_name)


# --- Utility commands ---


@app.command()
def init(
    experiment: Optional[str] = typer.Option(
        None, "--experiment", "-e", help=f"Starter config to write ({', '.join(available_templates())})"
    ),
    output_dir: str = typer.Option(".", "--output-dir", "-o", help="Directory to write the config to"),
):
    """
    Write a starter config for an experiment
    """
    console.print("[bold blue]Writing a starter config[/bold blue]")

    if not experiment:
        experiment = questionary.select("Select an experiment:", choices=available_templates()).ask()
        if not experiment:  # Handle cancelled prompt
            console.print("[bold red]Experiment selection cancelled.[/bold red]")
            raise typer.Exit(USAGE_ERROR)

    target = Path(output_dir) / get_template_path(experiment).name
    if target.exists():
        confirm_overwrite = questionary.confirm(f"'{target}' already exists. Overwrite?", default=False).ask()
        if not confirm_overwrite:
            console.print("[bold yellow]Initialization cancelled.[/bold yellow]")
            raise typer.Exit()

    try:
        written = generate_template(experiment, Path(output_dir))
    except ValueError as e:
        console.print(f"[bold red]Error: {e}[/bold red]")
        console.print(f"[bold yellow]Available templates: {', '.join(available_templates())}[/bold yellow]")
        raise typer.Exit(USAGE_ERROR)
    console.print(f"[bold green]Run it with 'slt {experiment} --config {written}'[/bold green]")


@app.command()
def version():
    """
    Show the current version of slt
    """
    console.print(f"slt version: [bold]{__version__}[/bold]")


@app.command()
def schema():
    """
    Print the JSON schema of the run summaries
    """
    console.print_json(json.dumps(RunSummary.model_json_schema()))


# --- Boilerplate ---


def main():
    app()


if __name__ == "__main__":
    main()
