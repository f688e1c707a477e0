from pathlib import Path

import click
import tomli
from pydantic import ValidationError

from .. import reporting
from ..choice import LogitFit, fit_models
from ..config import ModelConfig
from ..exceptions import ConfigurationError
from ..geo import DEFAULT_LOGIT_SPECS
from ..models import FusedObservation, LogitSpec
from ..utility import load_json, write_json
from .command_factory import emit, existing_file, handle_errors, json_option


def read_model_specs(path: Path) -> list[LogitSpec]:
    """The [models.<name>] sections of a run config, in file order."""
    with open(path, "rb") as f:
        document = tomli.load(f)
    try:
        return [
            LogitSpec(name=name, **ModelConfig.parse_obj(section).dict())
            for name, section in document.get("models", {}).items()
        ]
    except ValidationError as exc:
        raise ConfigurationError(f"models: {exc}") from exc


@click.command("fit")
@click.argument("fused", type=existing_file)
@click.option(
    "--config",
    "config_path",
    type=existing_file,
    default=None,
    help="Run config whose [models.<name>] sections replace the three default models.",
)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--max-iter", type=int, default=100, show_default=True)
@click.option(
    "--output-dir",
    type=click.Path(file_okay=False, path_type=Path),
    default=Path("."),
    show_default=True,
)
@json_option
@handle_errors
def fit(fused, config_path, tol, max_iter, output_dir, as_json):
    """Fit the binary logit models on fused observations and write fit reports and model tables."""
    observations = [FusedObservation.parse_obj(obs) for obs in load_json(fused)]
    specs = read_model_specs(config_path) if config_path else None
    fits = fit_models(observations, specs or DEFAULT_LOGIT_SPECS, tol, max_iter)

    output_dir.mkdir(parents=True, exist_ok=True)
    for name, result in fits.items():
        write_json(result.dict(), output_dir / f"fit_{name}.json")
    reporting.write_reports(
        output_dir,
        model_tables={
            name: reporting.ModelTable.from_fit(result) for name, result in fits.items()
        },
    )

    emit(
        {name: result.dict() for name, result in fits.items()},
        as_json,
        "\n".join(
            f"{name}: LL {result.ll:.3f}, adjusted rho-squared {result.adjusted_rho_sq:.3f}"
            + ("" if result.converged else " (not converged)")
            for name, result in fits.items()
        ),
    )


@click.command("report")
@click.argument("fits", type=existing_file, nargs=-1, required=True)
@click.option(
    "--format",
    "table_format",
    type=click.Choice(reporting.FORMATS),
    default="markdown",
    show_default=True,
)
@json_option
@handle_errors
def report(fits, table_format, as_json):
    """Render fit reports written by 'civic fit' as model tables; --json prints the tables as JSON objects."""
    tables = [
        reporting.ModelTable.from_fit(LogitFit.parse_obj(load_json(path)))
        for path in fits
    ]
    text = "".join(reporting.render(table, table_format).decode() for table in tables)
    emit([table.json_obj() for table in tables], as_json, text.rstrip("\n"))
