# Copyright (c) 2025, ahmad mohammad and contributors
# For license information, please see license.txt

from contextlib import contextmanager
from pathlib import Path

import click

from ssp_supervisor.core.analysis import full_pipeline_census
from ssp_supervisor.core.config import PipelineConfig
from ssp_supervisor.core.exceptions import ParseError, SspError, UsageError
from ssp_supervisor.core.liveness_enforcement import synthesize_control
from ssp_supervisor.core.log import get_logger
from ssp_supervisor.core.pn_io import Report, load_net, serialize_net
from ssp_supervisor.core.semiflows import format_semiflow, minimal_p_semiflows
from ssp_supervisor.core.ssp import t_semiflow_table, validate_ssp
from ssp_supervisor.core.supervisor import (
    EXHAUSTIVE,
    RandomPolicy,
    ScriptedPolicy,
    Verdict,
    compose,
    parse_trace,
    run,
)

logger = get_logger("commands")

EXIT_VIOLATION = 1
EXIT_USAGE = 2


@contextmanager
def stage(name):
    """Map toolkit failures to exit codes, naming the stage that failed"""
    try:
        yield
    except (ParseError, UsageError) as e:
        click.echo(f"{name}: {e}", err=True)
        raise click.exceptions.Exit(EXIT_USAGE)
    except SspError as e:
        click.echo(f"{name}: {e}", err=True)
        raise click.exceptions.Exit(EXIT_VIOLATION)
    except OSError as e:
        click.echo(f"{name}: {e}", err=True)
        raise click.exceptions.Exit(EXIT_USAGE)


def _config(path, **options):
    with stage("config"):
        return PipelineConfig(input_path=Path(path), **options).validate()


def _load(config):
    with stage("parse"):
        return load_net(config.input_path)


def _emit(config, filename, text):
    if config.output_dir is None:
        click.echo(text, nl=False)
        return
    config.output_dir.mkdir(parents=True, exist_ok=True)
    target = config.output_dir / filename
    target.write_text(text, encoding="utf-8")
    click.echo(f"wrote {target}")


def _synthesize(config, doc):
    with stage("synthesize"):
        return synthesize_control(doc, config.node_budget, config.reduce, config.basis_cap, config.check_set_size)


budget_option = click.option("--budget", "node_budget", type=int, default=PipelineConfig.node_budget, show_default=True)
reduce_option = click.option("--reduce", is_flag=True, help="Apply series and identical-transition reductions first")
out_option = click.option("--out", "output_dir", type=click.Path(file_okay=False, path_type=Path), default=None)
net_argument = click.argument("path", type=click.Path(dir_okay=False))


@click.group()
def ssp():
    """Liveness enforcement and supervision of SSP Petri nets"""


@ssp.command("validate")
@net_argument
@out_option
def validate(path, output_dir):
    """Check the six SSP conditions"""
    config = _config(path, output_dir=output_dir)
    doc = _load(config)
    with stage("validate"):
        report = validate_ssp(doc, config.basis_cap)
    _emit(config, f"{doc.name}.report", report.render())
    if not report.ok:
        raise click.exceptions.Exit(EXIT_VIOLATION)


@ssp.command("semiflows")
@net_argument
def semiflows(path):
    """Minimal T-semiflows (global, then local per agent) and minimal P-semiflows"""
    config = _config(path)
    doc = _load(config)
    with stage("semiflows"):
        table = t_semiflow_table(doc, config.basis_cap)
        p_flows = minimal_p_semiflows(doc.net, config.basis_cap)
    for name, kind, agent, body in table.rows():
        scope = kind if agent == "-" else f"{kind} {agent}"
        click.echo(f"{name} = {body}  ({scope})")
    for k, sf in enumerate(p_flows, start=1):
        click.echo(format_semiflow(sf, doc.net.places, f"y{k}"))


@ssp.command("synthesize")
@net_argument
@budget_option
@reduce_option
@out_option
def synthesize(path, node_budget, reduce, output_dir):
    """Control net of the SSP and the CF/JF verdict of its simplified form"""
    config = _config(path, node_budget=node_budget, reduce=reduce, output_dir=output_dir)
    doc = _load(config)
    result = _synthesize(config, doc)
    _emit(config, f"{doc.name}.control.net", serialize_net(result.control.as_document(f"{doc.name}_control")))
    if config.output_dir is not None:
        _emit(config, f"{doc.name}.report", result.verdict.to_report(Report()).render())
    else:
        click.echo(result.verdict.to_report(Report()).render(), err=True, nl=False)


@ssp.command("enforce")
@net_argument
@budget_option
@reduce_option
@out_option
def enforce(path, node_budget, reduce, output_dir):
    """Control net with the places that make it live"""
    config = _config(path, node_budget=node_budget, reduce=reduce, output_dir=output_dir)
    doc = _load(config)
    result = _synthesize(config, doc)
    _emit(config, f"{doc.name}.enforced.net", serialize_net(result.supervised.as_document(f"{doc.name}_enforced")))
    if config.output_dir is not None:
        _emit(config, f"{doc.name}.report", result.to_report(Report()).render())


@ssp.command("compose")
@net_argument
@budget_option
@reduce_option
@out_option
def compose_command(path, node_budget, reduce, output_dir):
    """Single net of the plant synchronized with its live control net"""
    config = _config(path, node_budget=node_budget, reduce=reduce, output_dir=output_dir)
    doc = _load(config)
    result = _synthesize(config, doc)
    with stage("compose"):
        composed = compose(result.document, result.supervised)
    _emit(config, f"{doc.name}.composed.net", serialize_net(composed))


@ssp.command("simulate")
@net_argument
@budget_option
@reduce_option
@out_option
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--policy", default="random", show_default=True, help="random, exhaustive or script:<file>")
@click.option("--steps", type=int, default=100, show_default=True)
def simulate(path, node_budget, reduce, output_dir, seed, policy, steps):
    """Run the supervised plant and print its trace"""
    config = _config(
        path, node_budget=node_budget, reduce=reduce, output_dir=output_dir, seed=seed, policy=policy, steps=steps
    )
    doc = _load(config)
    result = _synthesize(config, doc)

    steps = config.steps
    if config.script_path is not None:
        with stage("script"):
            chosen = ScriptedPolicy(parse_trace(config.script_path.read_text(encoding="utf-8")))
        steps = len(chosen.steps) + 1
    elif config.policy == EXHAUSTIVE:
        chosen = EXHAUSTIVE
    else:
        chosen = RandomPolicy(config.seed)

    with stage("simulate"):
        outcome = run(result.document, result.supervised, chosen, steps, config.node_budget)

    if outcome.census is not None:
        report = Report().update("census.control", outcome.census.as_row()).add("simulate", "verdict", outcome.verdict.value)
        _emit(config, f"{doc.name}.report", report.render())
    else:
        _emit(config, f"{doc.name}.trace", outcome.render_trace())
        click.echo(f"verdict = {outcome.verdict.value}", err=True)
        if outcome.blocked_at is not None:
            click.echo(f"blocked_at = {outcome.blocked_at}", err=True)
    if outcome.verdict in (Verdict.BLOCKED, Verdict.TERMINAL, Verdict.NOT_LIVE):
        raise click.exceptions.Exit(EXIT_VIOLATION)


@ssp.command("census")
@net_argument
@budget_option
@reduce_option
@out_option
@click.option("--monitor-rounds", type=int, default=PipelineConfig.monitor_rounds, show_default=True)
def census(path, node_budget, reduce, output_dir, monitor_rounds):
    """Plant, monitor baseline and supervised census in one report"""
    config = _config(path, node_budget=node_budget, reduce=reduce, output_dir=output_dir, monitor_rounds=monitor_rounds)
    doc = _load(config)
    with stage("census"):
        pipeline = full_pipeline_census(doc, config.node_budget, config.reduce, config.siphon_cap, config.monitor_rounds)
    _emit(config, f"{doc.name}.report", pipeline.render())
    click.echo(pipeline.table(), err=True)
    if pipeline.rows["control"].livelock:
        raise click.exceptions.Exit(EXIT_VIOLATION)


commands = [ssp]
