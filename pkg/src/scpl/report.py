"""Rendering of verification results: a JSON report, a per-agent CSV
summary, and matplotlib figures for the event timeline and, when the
contract uses pay acts, balance trajectories."""

from __future__ import annotations

import csv
import json
from decimal import Decimal
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .parser import parse_term
from .runtime import silent_fixpoint
from .terms import Atom, Num, Struct
from .verifier import Act, TraceReport, _as_event, balance_of


def _events(raw_events) -> list[dict]:
    return [_as_event(e) for e in raw_events]


def endowment_of(state) -> Decimal | None:
    if isinstance(state, Struct) and len(state.args) == 1 \
            and isinstance(state.args[0], Num):
        return state.args[0].value
    return None


def agent_rows(events) -> list[dict]:
    stats: dict[str, dict] = {}
    for e in events:
        cell = stats.setdefault(e["agent"], {
            "agent": e["agent"], "acts": 0, "received": 0, "final_state": ""})
        if e["kind"] == "act":
            cell["acts"] += 1
        elif e["kind"] == "recv":
            cell["received"] += 1
        elif e["kind"] == "final":
            cell["final_state"] = e["state"]
    return sorted(stats.values(), key=lambda r: r["agent"])


def write_csv(events, path: Path):
    rows = agent_rows(events)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(
            fh, fieldnames=["agent", "acts", "received", "final_state"])
        writer.writeheader()
        writer.writerows(rows)


def write_json(report: TraceReport, events, path: Path):
    payload = {
        "ok": report.ok,
        "checks": {name: {"ok": ok, "detail": detail}
                   for name, (ok, detail) in report.checks.items()},
        "agents": agent_rows(events),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def timeline_figure(events, path: Path):
    """One horizontal lane per agent; outputs and receptions as marks in
    event-log order."""
    agents = sorted({e["agent"] for e in events if e["kind"] in ("act", "recv")})
    lanes = {a: i for i, a in enumerate(agents)}
    fig, ax = plt.subplots(figsize=(10, max(2, 0.5 * len(agents) + 1)))
    xs_act, ys_act, xs_recv, ys_recv = [], [], [], []
    for pos, e in enumerate(events):
        if e["kind"] == "act":
            xs_act.append(pos)
            ys_act.append(lanes[e["agent"]])
        elif e["kind"] == "recv":
            xs_recv.append(pos)
            ys_recv.append(lanes[e["agent"]])
    ax.scatter(xs_act, ys_act, marker="o", label="act", zorder=3)
    ax.scatter(xs_recv, ys_recv, marker=".", label="recv", zorder=2)
    ax.set_yticks(range(len(agents)))
    ax.set_yticklabels(agents)
    ax.set_xlabel("event position")
    ax.set_title("agent activity")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def balance_series(events, endowments: dict[str, Decimal],
                   count_ticks: bool = False) -> dict[str, list[Decimal]]:
    """Balance after each history step per agent, amount-weighted when pay
    acts carry an amount argument."""
    histories: dict[str, list[Act]] = {a: [] for a in endowments}
    series = {a: [endowments[a]] for a in endowments}
    amounts = any(
        e["kind"] == "act" and e["payload"].startswith("pay(")
        and "," in e["payload"] for e in events)
    for e in events:
        if e["kind"] not in ("act", "recv"):
            continue
        agent = e["agent"]
        if agent not in histories:
            continue
        signer = e["agent"] if e["kind"] == "act" else e["sender"]
        histories[agent].append(Act(signer, parse_term(e["payload"]), e["seq"]))
        series[agent].append(balance_of(
            histories[agent], agent, endowments[agent],
            amounts=amounts, count_ticks=count_ticks))
    return series


def balance_figure(events, endowments: dict[str, Decimal], path: Path,
                   count_ticks: bool = False):
    series = balance_series(events, endowments, count_ticks)
    fig, ax = plt.subplots(figsize=(10, 4))
    for agent in sorted(series):
        ax.step(range(len(series[agent])), series[agent],
                where="post", label=agent)
    ax.set_xlabel("history step")
    ax.set_ylabel("balance")
    ax.set_title("balance trajectories")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def currency_endowments(checked, events) -> dict[str, Decimal]:
    """Initial endowments for agents whose activation state carries a
    single numeric argument; empty when the contract is not a currency."""
    uses_pay = any(e["kind"] == "act" and e["payload"].startswith("pay(")
                   for e in events)
    if not uses_pay:
        return {}
    out = {}
    for name, state in checked.program.activation:
        state = silent_fixpoint(checked.program.rules, name, state)
        c = endowment_of(state)
        out[name] = c if c is not None else Decimal(0)
    return out


def write_report(checked, report: TraceReport, raw_events, outdir: Path,
                 count_ticks: bool = False) -> list[Path]:
    """Write report.json, summary.csv, timeline.png, and balances.png (the
    last only for currency contracts); returns the written paths."""
    outdir.mkdir(parents=True, exist_ok=True)
    events = _events(raw_events)
    written = []
    path = outdir / "report.json"
    write_json(report, events, path)
    written.append(path)
    path = outdir / "summary.csv"
    write_csv(events, path)
    written.append(path)
    path = outdir / "timeline.png"
    timeline_figure(events, path)
    written.append(path)
    endowments = currency_endowments(checked, events)
    if endowments:
        if not count_ticks:
            count_ticks = any(e["kind"] == "act" and e["payload"] == "tick"
                              for e in events)
        path = outdir / "balances.png"
        balance_figure(events, endowments, path, count_ticks)
        written.append(path)
    return written
