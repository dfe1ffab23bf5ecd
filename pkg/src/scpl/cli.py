"""Command line entry points: check, run, verify, and serve."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import oracle as oracle_mod
from . import runtime, verifier
from .errors import (AutoOracleAmbiguous, ConditionFailed, ScplError,
                     ScplSyntaxError)
from .parser import parse_program
from .staticcheck import CheckedProgram, check


def _load_checked(path: str) -> CheckedProgram:
    try:
        source = Path(path).read_text()
    except OSError as exc:
        click.echo(f"{path}: {exc.strerror}", err=True)
        sys.exit(2)
    try:
        program = parse_program(source)
    except ScplSyntaxError as exc:
        click.echo(f"{path}:{exc.line}:{exc.col}: syntax: {exc}", err=True)
        sys.exit(2)
    return check(program)


def _report_diagnostics(path: str, checked: CheckedProgram) -> int:
    for v in checked.diagnostics:
        span = v.spans[0] if v.spans else None
        loc = f"{span.line}:{span.col}" if span else "0:0"
        click.echo(f"{path}:{loc}: {v.kind}: {v.message}", err=True)
    return 1 if checked.diagnostics else 0


@click.group()
def main():
    """Tools for social contract programs."""


@main.command("check")
@click.argument("path")
def cmd_check(path):
    """Parse and statically check a contract."""
    checked = _load_checked(path)
    status = _report_diagnostics(path, checked)
    if status == 0:
        click.echo(f"{path}: ok "
                   f"({len(checked.program.rules)} rules, "
                   f"{len(checked.program.activation)} agents)")
    sys.exit(status)


def _make_scheduler(policy: str, seed: int, order):
    if policy == "canonical":
        return runtime.canonical_scheduler(order)
    return runtime.random_scheduler(seed, fairness=50)


@main.command("run")
@click.argument("path")
@click.option("--oracle", "oracle_spec", default="auto",
              help="auto, random, or a path to a JSON oracle script.")
@click.option("--scheduler", "policy",
              type=click.Choice(["canonical", "random"]), default="canonical")
@click.option("--seed", type=int, default=0)
@click.option("--max-steps", type=int, default=1000)
@click.option("--trace", "trace_base", default=None,
              help="Base path; writes <base>.txt and <base>.jsonl.")
def cmd_run(path, oracle_spec, policy, seed, max_steps, trace_base):
    """Execute a contract and print its trace."""
    checked = _load_checked(path)
    if _report_diagnostics(path, checked):
        sys.exit(1)
    order = None
    if oracle_spec == "auto":
        provider = oracle_mod.auto_oracle
    elif oracle_spec == "random":
        provider = oracle_mod.random_oracle(seed)
    else:
        provider, order = oracle_mod.load_script(oracle_spec)
    if policy == "random":
        order = None
    try:
        config = runtime.Configuration.activate(checked, provider)
        trace = runtime.run(config, _make_scheduler(policy, seed, order),
                            max_steps=max_steps)
    except (ConditionFailed, AutoOracleAmbiguous) as exc:
        click.echo(f"{path}: runtime fault: {exc}", err=True)
        sys.exit(3)
    except ScplError as exc:
        click.echo(f"{path}: {exc}", err=True)
        sys.exit(3)
    text = trace.text()
    if text:
        click.echo(text, nl=False)
    if trace_base:
        base = Path(trace_base)
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".txt").write_text(text)
        base.with_suffix(".jsonl").write_text(trace.jsonl())
    sys.exit(0)


@main.command("verify")
@click.argument("path")
@click.argument("trace_path")
@click.option("--out", "outdir", default=None,
              help="Directory for report.json, summary.csv, and figures.")
def cmd_verify(path, trace_path, outdir):
    """Audit a recorded trace against its contract."""
    checked = _load_checked(path)
    if _report_diagnostics(path, checked):
        sys.exit(1)
    try:
        with open(trace_path) as fh:
            events = [json.loads(line) for line in fh if line.strip()]
    except OSError as exc:
        click.echo(f"{trace_path}: {exc.strerror}", err=True)
        sys.exit(2)
    report = verifier.verify_events(checked, events)
    for name, (ok, detail) in report.checks.items():
        line = f"{name}: {'pass' if ok else 'FAIL'}"
        if detail and not ok:
            line += f" ({detail})"
        click.echo(line)
    if outdir:
        from .report import write_report
        written = write_report(checked, report, events, Path(outdir))
        for p in written:
            click.echo(f"wrote {p}")
    sys.exit(0 if report.ok else 1)


@main.command("serve")
@click.argument("path")
@click.option("--port", type=int, default=8000)
@click.option("--token", default="", help="Shared session token.")
@click.option("--agents", "served", default="",
              help="Comma separated interactive agent names.")
@click.option("--max-steps", type=int, default=1000)
@click.option("--timeout", type=float, default=30.0,
              help="Seconds before a silent session counts as a pass.")
def cmd_serve(path, port, token, served, max_steps, timeout):
    """Serve a live run to browser consoles over a WebSocket."""
    checked = _load_checked(path)
    if _report_diagnostics(path, checked):
        sys.exit(1)
    import uvicorn

    from .gateway import build_app

    names = [n.strip() for n in served.split(",") if n.strip()]
    app = build_app(checked, contract_name=Path(path).stem, token=token,
                    served=names, max_steps=max_steps, timeout=timeout)
    try:
        uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
    except SystemExit:
        raise
    except OSError as exc:
        click.echo(f"port {port}: {exc.strerror}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
