"""
CLI tool for gherkin-hdl using Typer
"""

import logging
from enum import Enum
from pathlib import Path
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.table import Table

from .ai.protocol import GenerationMode, ProviderKind
from .ai.providers import GenerationProvider, RemoteProvider, StubProvider
from .alu import DEFAULT_WIDTH
from .compiler import compile_feature
from .exceptions import FeatureSyntaxError, GherkinHdlError
from .forge import ValidationReport, forge_feature, parse_prompt, validate_against_oracle
from .gherkin import FeatureAst, parse_feature
from .harness import ReportFormat, render_report, run_cases
from .settings import CliConfig, ProviderSettings
from .testbench import DEFAULT_DUT, emit_testbench
from .vcd import write_vcd

console = Console()
err_console = Console(stderr=True)
logger = logging.getLogger(__name__)


class LogLevel(str, Enum):
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"


app = typer.Typer(
    name="gherkin-hdl",
    help="Behavior-driven verification for hardware blocks: generate, run and export Gherkin ALU scenarios.",
    rich_markup_mode="rich",
    no_args_is_help=True,
)


@app.callback()
def main(
    log_level: LogLevel = typer.Option(LogLevel.WARNING, "--log-level", help="Diagnostics level", case_sensitive=False),
):
    """
    gherkin-hdl command line
    """
    logging.basicConfig(
        level=log_level.value,
        format="%(message)s",
        handlers=[RichHandler(console=err_console, show_path=False)],
        force=True,
    )


def _fail(error: Exception, exit_code: int = 2):
    err_console.print(f"[red]Error:[/red] {escape(str(error))}")
    raise typer.Exit(getattr(error, "exit_code", exit_code))


def _config(**options) -> CliConfig:
    try:
        return CliConfig(**options)
    except ValidationError as e:
        for error in e.errors():
            location = ".".join(str(part) for part in error["loc"])
            err_console.print(f"[red]Invalid option {location}:[/red] {escape(error['msg'])}")
        raise typer.Exit(2)


def _read_feature(config: CliConfig) -> FeatureAst:
    try:
        source = config.input_path.read_text(encoding="utf-8")
    except OSError as e:
        _fail(e)
    except UnicodeDecodeError as e:
        head = e.object[: e.start]
        line, column = head.count(b"\n") + 1, e.start - head.rfind(b"\n")
        _fail(FeatureSyntaxError(f"invalid UTF-8 byte 0x{e.object[e.start]:02X}", line, column))
    return parse_feature(source)


def _output_path(out: Optional[Path], default_dir: Path, filename: str) -> Path:
    if out is None:
        path = default_dir / filename
    elif out.is_dir() or str(out).endswith(("/", "\\")):
        path = out / filename
    else:
        path = out
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _provider(config: CliConfig) -> Optional[GenerationProvider]:
    if config.provider == ProviderKind.TEMPLATE:
        return None
    if config.responses_dir is not None:
        return StubProvider(directory=config.responses_dir)
    return RemoteProvider.from_settings(ProviderSettings.from_env())


@app.command()
def generate(
    prompt: str = typer.Argument(..., help='Prompt such as "Create ADD scenario with A = B, 3 examples."'),
    width: int = typer.Option(DEFAULT_WIDTH, "--width", "-w", help="ALU word width in bits"),
    seed: int = typer.Option(0, "--seed", "-s", help="Seed of the example generator"),
    mode: GenerationMode = typer.Option(GenerationMode.STRICT, help="Oracle mismatch handling", case_sensitive=False),
    provider: ProviderKind = typer.Option(ProviderKind.TEMPLATE, help="Generation backend", case_sensitive=False),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Feature file or directory to write"),
    responses: Optional[Path] = typer.Option(None, "--responses", help="Canned provider responses (offline)"),
):
    """Generate a feature file from a prompt"""
    config = _config(width=width, seed=seed, mode=mode, provider=provider, output_path=out, responses_dir=responses)

    try:
        spec = parse_prompt(prompt, config.width)
        _, record = forge_feature(
            spec, seed=config.seed, width=config.width, provider=_provider(config), mode=config.mode
        )
    except GherkinHdlError as e:
        _fail(e)

    path = _output_path(config.output_path, Path.cwd(), f"{spec.op.name.lower()}.feature")
    path.write_text(record.feature_text, encoding="utf-8")
    logger.info(f"Wrote {path}")
    console.print(f"Wrote {escape(str(path))} ({spec.count} example(s))", soft_wrap=True)
    console.print(record.summary(), soft_wrap=True)


@app.command()
def run(
    feature: Path = typer.Argument(..., help="Feature file to run"),
    width: int = typer.Option(DEFAULT_WIDTH, "--width", "-w", help="ALU word width in bits"),
    workers: int = typer.Option(1, "--workers", help="Threads used to evaluate cases"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Directory for the VCD and JSON report"),
):
    """Run a feature against the golden model and write its VCD trace and JSON report"""
    config = _config(width=width, workers=workers, input_path=feature, output_path=out)

    try:
        ast = _read_feature(config)
        cases = compile_feature(ast, config.width)
    except GherkinHdlError as e:
        _fail(e)

    report, trace = run_cases(cases, feature_name=ast.name, workers=config.workers)
    directory = config.output_path or feature.parent
    directory.mkdir(parents=True, exist_ok=True)
    vcd_path = directory / f"{feature.stem}.vcd"
    report_path = directory / f"{feature.stem}.report.json"
    vcd_path.write_bytes(write_vcd(trace))
    report_path.write_text(render_report(report, ReportFormat.MACHINE), encoding="utf-8")
    logger.info(f"Wrote {vcd_path} and {report_path}")

    console.print(render_report(report, ReportFormat.HUMAN), markup=False, highlight=False, soft_wrap=True, end="")
    if not report.all_passed:
        raise typer.Exit(1)


@app.command("emit-tb")
def emit_tb(
    feature: Path = typer.Argument(..., help="Feature file to convert"),
    dut: str = typer.Option(DEFAULT_DUT, "--dut", help="Module name of the device under test"),
    width: int = typer.Option(DEFAULT_WIDTH, "--width", "-w", help="ALU word width in bits"),
    out: Optional[Path] = typer.Option(None, "--out", "-o", help="Testbench file or directory to write"),
):
    """Emit a Verilog testbench for a feature"""
    config = _config(width=width, input_path=feature, output_path=out)

    try:
        cases = compile_feature(_read_feature(config), config.width)
        text = emit_testbench(cases, dut)
    except GherkinHdlError as e:
        _fail(e)

    path = _output_path(config.output_path, feature.parent, f"{feature.stem}_tb.v")
    path.write_text(text, encoding="utf-8")
    console.print(f"Wrote {len(cases)} case(s) to {escape(str(path))}", soft_wrap=True)


def _mismatch_table(report: ValidationReport) -> Table:
    table = Table(title="Oracle mismatches")
    table.add_column("Scenario", style="cyan")
    table.add_column("Row", justify="right")
    table.add_column("Field")
    table.add_column("Found", justify="right", style="red")
    table.add_column("Oracle", justify="right", style="green")
    for m in report.mismatches:
        table.add_row(escape(m.scenario), str(m.row + 1), m.field, str(m.found), str(m.oracle))
    return table


@app.command()
def validate(
    feature: Path = typer.Argument(..., help="Feature file to check"),
    width: int = typer.Option(DEFAULT_WIDTH, "--width", "-w", help="ALU word width in bits"),
):
    """Check every expectation of a feature against the golden model"""
    config = _config(width=width, input_path=feature)

    try:
        report = validate_against_oracle(_read_feature(config), config.width)
    except GherkinHdlError as e:
        _fail(e)

    if report.clean:
        console.print(f"{report.total_rows} row(s) agree with the golden model")
        return
    console.print(_mismatch_table(report))
    console.print(f"{len(report.mismatches)} mismatch(es) in {report.total_rows} row(s)")
    raise typer.Exit(1)


@app.command()
def version():
    """Show version information"""
    from . import __version__

    console.print(f"gherkin-hdl v{__version__}")
