"""Command-line interface for guarded-lab."""

import json
import logging
import time
from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any, NamedTuple

import click
from rich.console import Console
from rich.logging import RichHandler
from rich.markup import escape
from rich.panel import Panel
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from . import __version__
from .cache import ReportCache
from .errors import ExplosionError, FormatError, InvalidStructureError
from .formats import dump_poset, load_fixpoint, load_frame, load_polynomial, load_poset, load_theory
from .frame_logic import check_loeb, check_wellpointed_lex
from .multiclock import BUILTIN_COSTREAMS, CoStream, co_take, costream_from_step
from .order_core import FinitePoset, is_compatible_wf, is_connected
from .suite import (
    SUITE_CHECKS,
    CheckResult,
    RunReport,
    SuiteOptions,
    check_clock_categories,
    check_force,
    check_irrelevance,
    check_presheaf_laws,
    digest_files,
    digest_params,
    jsonable,
    report_check,
    run_suite,
)
from .theory_kit import bag_theory, enumerate_bag_models, enumerate_models, filt_theory, filters_as_models, filters_oracle, ibag_theory
from .tree_semantics import check_fix_unique, gfix, satisfies_fixed_point
from .wtypes import DEFAULT_TREE_CAP, plump_poset

console = Console()

DEFAULTS = SuiteOptions()


class Session(NamedTuple):
    """Per-invocation output settings shared by the subcommands."""

    print_func: Callable[..., Any]
    start: float


def json_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--json", "json_path", type=click.Path(dir_okay=False, path_type=Path), help="Write a machine-readable report to this file"
    )(f)


def stages_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--stages", type=click.IntRange(min=1), default=DEFAULTS.stages, show_default=True, help="Number of stages 0..N-1 to inspect"
    )(f)


def seed_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option("--seed", type=int, default=DEFAULTS.seed, show_default=True, help="Seed for generated instances")(f)


@contextmanager
def loading(session: Session) -> Iterator[None]:
    """Report malformed or oversized input and exit with status 2."""
    try:
        yield
    except (FormatError, InvalidStructureError, ExplosionError) as e:
        session.print_func(f"[red]Error: {escape(str(e))}[/red]")
        raise click.exceptions.Exit(2) from e


def show_results(report: RunReport, print_func: Callable[..., Any]) -> None:
    table = Table(title=f"{report.command} results", show_header=True, header_style="bold magenta")
    table.add_column("Status", style="bold")
    table.add_column("Check")
    table.add_column("Detail")
    table.add_column("Witness")
    for result in report.results:
        status = "[green]PASS[/green]" if result.passed else "[red]FAIL[/red]"
        witness = "" if result.witness is None else escape(json.dumps(jsonable(result.witness)))
        table.add_row(status, result.name, escape(result.detail), witness)
    print_func(table)


def finish(session: Session, command: str, inputs: str, results: list[CheckResult], json_path: Path | None, table: bool = True) -> None:
    """Print the results, write the JSON report and exit 1 if any check failed."""
    report = RunReport(command, inputs, tuple(results), time.time() - session.start)
    emit(session, report, json_path, table)


def emit(session: Session, report: RunReport, json_path: Path | None, table: bool = True) -> None:
    print_func = session.print_func
    if table:
        show_results(report, print_func)
    if json_path:
        json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print_func(f"[dim]Report written to {json_path}[/dim]")
    if report.ok:
        print_func("[green]✓ PASS[/green]")
    else:
        print_func(f"[red]✗ FAIL ({len(report.failures())} of {len(report.results)} checks)[/red]")
    print_func(f"\n[dim]Total time: {time.time() - session.start:.2f} seconds[/dim]")
    if not report.ok:
        raise click.exceptions.Exit(1)


@click.group(context_settings={"auto_envvar_prefix": "GUARDED_LAB"})
@click.option("--verbose", is_flag=True, help="Show debug logging")
@click.option("--log-file", type=click.Path(dir_okay=False, path_type=Path), help="Write output to a log file")
@click.version_option(__version__, prog_name="guarded-lab")
@click.pass_context
def main(ctx: click.Context, verbose: bool, log_file: Path | None) -> None:
    """
    Finite-scale checks for synthetic guarded domain theory.

    Every check prints a table of results and exits with status 0 when all pass, 1 when
    some check fails and 2 when an input file is malformed.
    """
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(message)s",
        handlers=[RichHandler(console=Console(stderr=True), show_path=False)],
        force=True,
    )

    if log_file:
        log_console = Console(file=open(log_file, "w", encoding="utf-8"), width=120)

        def dual_print(content: object, **kwargs: object) -> None:
            console.print(content, **kwargs)  # type: ignore[arg-type]
            log_console.print(content, **kwargs)  # type: ignore[arg-type]

        print_func: Callable[..., Any] = dual_print
        ctx.call_on_close(log_console.file.close)
    else:
        print_func = console.print

    ctx.obj = Session(print_func, time.time())


@main.command("check-wf")
@click.argument("poset", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@json_option
@click.pass_obj
def check_wf(session: Session, poset: Path, json_path: Path | None) -> None:
    """Check that the prec relation of POSET is a compatible well-founded relation."""
    with loading(session):
        w = load_poset(poset)

    report = is_compatible_wf(w)
    results = [CheckResult(check.axiom, check.passed, check.witness) for check in report.checks]

    strict_part = w.base.restrict(w.strict_domain())
    session.print_func(
        Panel(
            f"Elements: {len(w.elements)}\n"
            f"Antisymmetric: {w.base.is_antisymmetric()}\n"
            f"Connected: {is_connected(w.base)}\n"
            f"Strict part: {len(strict_part)} elements, connected: {is_connected(strict_part)}",
            title=f"[cyan]{escape(poset.name)}[/cyan]",
            border_style="cyan",
        )
    )
    finish(session, "check-wf", digest_files([poset]), results, json_path)


@main.command("check-loeb")
@click.argument("frame", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@json_option
@click.pass_obj
def check_loeb_command(session: Session, frame: Path, json_path: Path | None) -> None:
    """Check Loeb induction on FRAME (a frame file, or a poset file read as its downset frame)."""
    with loading(session):
        BF = load_frame(frame)

    F = BF.frame
    result = check_loeb(BF)
    results = [
        CheckResult(
            "loeb",
            result.passed,
            None if result.passed else F.label(result.counterexample),
            f"{len(F.opens)} opens" if result.passed else "later(phi) => phi holds but phi is not top",
        ),
        report_check("basis_wf", BF.wf_report()),
        report_check("wellpointed_lex", check_wellpointed_lex(BF)),
    ]
    finish(session, "check-loeb", digest_files([frame]), results, json_path)


@main.command()
@click.argument("polynomial", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--depth", type=click.IntRange(min=0), default=3, show_default=True, help="Build the trees of depth below this bound")
@click.option("--cap", type=click.IntRange(min=1), default=DEFAULT_TREE_CAP, show_default=True, help="Refuse to build more trees than this")
@click.option("--output", type=click.Path(dir_okay=False, path_type=Path), help="Write the poset here instead of standard output")
@json_option
@click.pass_obj
def plump(session: Session, polynomial: Path, depth: int, cap: int, output: Path | None, json_path: Path | None) -> None:
    """Print the poset reflection of the plump order on the trees of POLYNOMIAL."""
    with loading(session):
        reflection = plump_poset(load_polynomial(polynomial), depth, cap)

    text = json.dumps(dump_poset(reflection), indent=2) + "\n"
    result = CheckResult("plump_reflection", True, None, f"{len(reflection.mapping)} trees, {len(reflection.quotient)} points")
    if output is None:
        click.echo(text, nl=False)
        report = RunReport("plump", digest_files([polynomial]), (result,), time.time() - session.start)
        if json_path:
            json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return
    output.write_text(text, encoding="utf-8")
    session.print_func(f"Wrote {len(reflection.quotient)} points to {escape(str(output))}")
    finish(session, "plump", digest_files([polynomial]), [result], json_path)


@main.command()
@click.argument("program_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@stages_option
@json_option
@click.pass_obj
def fixpoint(session: Session, program_file: Path, stages: int, json_path: Path | None) -> None:
    """Compute the guarded fixed point of the step described by PROGRAM_FILE."""
    with loading(session):
        program = load_fixpoint(program_file)
        family = gfix(program.step).prefix(stages)

    table = Table(title=f"fix({escape(program.step.name)})", show_header=True, header_style="bold magenta")
    table.add_column("Stage", justify="right")
    table.add_column("Element")
    for n, x in enumerate(family):
        table.add_row(str(n), escape(repr(x)))
    session.print_func(table)

    results = [
        CheckResult("fixed_point", satisfies_fixed_point(program.step, family), None, f"{program.family} on {stages} stages"),
        CheckResult("unique", check_fix_unique(program.step, stages), None, "no other family satisfies the equation"),
    ]
    finish(session, "fixpoint", digest_files([program_file]), results, json_path)


def _costream(name: str, modulus: int) -> CoStream:
    if name in BUILTIN_COSTREAMS:
        return BUILTIN_COSTREAMS[name](modulus)
    path = Path(name)
    if not path.is_file():
        raise FormatError(f"{name!r} is neither a built-in stream ({', '.join(sorted(BUILTIN_COSTREAMS))}) nor a fixpoint file")
    program = load_fixpoint(path)
    return costream_from_step(program.stream, program.step, name=path.stem)


@main.command("eval-stream")
@click.argument("stream")
@click.option("--take", "count", type=click.IntRange(min=0), default=10, show_default=True, help="Number of elements to take")
@click.option("--modulus", type=click.IntRange(min=1), default=10, show_default=True, help="Modulus of the naturals stream")
@json_option
@click.pass_obj
def eval_stream(session: Session, stream: str, count: int, modulus: int, json_path: Path | None) -> None:
    """Take elements of a coinductive STREAM (zeros, naturals, alternating, or a fixpoint file)."""
    with loading(session):
        values = co_take(count, _costream(stream, modulus))

    click.echo(json.dumps(jsonable(values)))
    if json_path:
        result = CheckResult("take", True, None, json.dumps(jsonable(values)))
        digest = digest_params({"stream": stream, "take": count, "modulus": modulus})
        report = RunReport("eval-stream", digest, (result,), time.time() - session.start)
        json_path.write_text(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


@main.command("check-multiclock")
@click.option("--bound", type=click.IntRange(min=0), default=DEFAULTS.bound, show_default=True, help="Maximum number of clocks")
@stages_option
@seed_option
@json_option
@click.pass_obj
def check_multiclock(session: Session, bound: int, stages: int, seed: int, json_path: Path | None) -> None:
    """Check the clock category and clock quantification on a bounded fragment."""
    options = SuiteOptions(stages=stages, bound=bound, seed=seed)
    with loading(session):
        results = [check(options) for check in (check_clock_categories, check_presheaf_laws, check_force, check_irrelevance)]
    finish(session, "check-multiclock", digest_params(options.params()), results, json_path)


@main.command()
@click.argument("theory", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@json_option
@click.pass_obj
def models(session: Session, theory: Path, json_path: Path | None) -> None:
    """Enumerate the models of the propositional geometric THEORY."""
    with loading(session):
        found = enumerate_models(load_theory(theory))

    table = Table(title=f"{len(found)} model{'s' if len(found) != 1 else ''}", show_header=True, header_style="bold magenta")
    table.add_column("#", justify="right")
    table.add_column("True symbols")
    for i, model in enumerate(found, 1):
        table.add_row(str(i), escape(", ".join(sorted(model.true)) or "(none)"))
    session.print_func(table)
    finish(session, "models", digest_files([theory]), [CheckResult("models", True, None, f"{len(found)} models")], json_path)


@main.command()
@click.argument("poset", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@json_option
@click.pass_obj
def filters(session: Session, poset: Path, json_path: Path | None) -> None:
    """Compare the models of the filter theory of POSET with its filters."""
    with loading(session):
        P = FinitePoset.from_preorder(load_poset(poset).base)
        models_found = set(enumerate_models(filt_theory(P)))

    oracle = filters_oracle(P)
    table = Table(title=f"{len(oracle)} filters", show_header=True, header_style="bold magenta")
    table.add_column("#", justify="right")
    table.add_column("Filter")
    for i, filt in enumerate(oracle, 1):
        table.add_row(str(i), escape(", ".join(str(u) for u in P.elements if u in filt)))
    session.print_func(table)

    matched = models_found == filters_as_models(P)
    detail = f"{len(models_found)} models, {len(oracle)} filters"
    finish(session, "filters", digest_files([poset]), [CheckResult("filters_match", matched, None, detail)], json_path)


@main.command()
@click.argument("theory", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--max-k", type=click.IntRange(min=0), default=DEFAULTS.max_k, show_default=True, help="Largest index set size")
@click.option("--inhabited", is_flag=True, help="Require a nonempty index set (IBag)")
@json_option
@click.pass_obj
def bag(session: Session, theory: Path, max_k: int, inhabited: bool, json_path: Path | None) -> None:
    """Count the models of the bag theory of THEORY by index set size."""
    with loading(session):
        T = load_theory(theory)
        B = ibag_theory(T) if inhabited else bag_theory(T)
        enumeration = enumerate_bag_models(B, max_k)
        base_count = len(enumerate_models(T))

    session.print_func(Panel("\n".join(escape(line) for line in B.render()), title="[cyan]IBag[/cyan]" if inhabited else "[cyan]Bag[/cyan]"))
    table = Table(title="Bag models", show_header=True, header_style="bold magenta")
    table.add_column("|K|", justify="right")
    table.add_column("Raw", justify="right")
    table.add_column("Up to relabelling", justify="right")
    table.add_column("Expected raw", justify="right")
    results = []
    for m in sorted(enumeration.raw_counts):
        expected = base_count**m
        table.add_row(str(m), str(enumeration.raw_counts[m]), str(enumeration.iso_counts[m]), str(expected))
        results.append(CheckResult(f"size_{m}", enumeration.raw_counts[m] == expected, None, f"{enumeration.raw_counts[m]} of {expected}"))
    session.print_func(table)
    finish(session, "bag", digest_files([theory]), results, json_path, table=False)


@main.command()
@stages_option
@click.option("--bound", type=click.IntRange(min=0), default=DEFAULTS.bound, show_default=True, help="Maximum number of clocks")
@click.option("--max-k", type=click.IntRange(min=0), default=DEFAULTS.max_k, show_default=True, help="Largest bag index set")
@seed_option
@click.option("--max-poset-size", type=click.IntRange(min=0), default=DEFAULTS.max_poset_size, show_default=True, help="Largest enumerated poset")
@click.option("--workers", type=click.IntRange(min=1), default=DEFAULTS.workers, show_default=True, help="Checks to run concurrently")
@click.option("--only", multiple=True, type=click.Choice(sorted(SUITE_CHECKS)), help="Run only these checks (repeatable)")
@click.option("--cache-db", type=click.Path(dir_okay=False, path_type=Path), help="Reuse and store reports in this database")
@json_option
@click.pass_obj
def suite(
    session: Session,
    stages: int,
    bound: int,
    max_k: int,
    seed: int,
    max_poset_size: int,
    workers: int,
    only: tuple[str, ...],
    cache_db: Path | None,
    json_path: Path | None,
) -> None:
    """Run the acceptance battery."""
    options = SuiteOptions(stages=stages, bound=bound, max_k=max_k, seed=seed, max_poset_size=max_poset_size, workers=workers)
    names = sorted(set(only)) if only else sorted(SUITE_CHECKS)
    params = json.dumps(options.params() | {"only": names}, sort_keys=True)
    digest = digest_params(options.params())

    session.print_func(
        Panel(
            f"[bold]{len(names)} checks[/bold]\n"
            f"Stages: {stages}  Bound: {bound}  Max k: {max_k}  Seed: {seed}\n"
            f"Max poset size: {max_poset_size}  Workers: {workers}",
            title="[yellow]Guarded Lab Suite[/yellow]",
            border_style="yellow",
        )
    )

    cache = ReportCache(cache_db) if cache_db else None
    try:
        report = cache.get_report("suite", digest, params) if cache else None
        if report is not None:
            session.print_func("[dim]Using cached report[/dim]")
        else:
            with Progress(SpinnerColumn(), TextColumn("[progress.description]{task.description}"), console=console) as progress:
                task = progress.add_task(f"Running {len(names)} checks...", total=None)
                report = run_suite(options, names)
                progress.update(task, description=f"Finished {len(report.results)} checks")
            if cache:
                cache.store_report(digest, params, report)
    finally:
        if cache:
            cache.close()

    emit(session, report, json_path)


if __name__ == "__main__":
    main()
