import csv
import json
from decimal import Decimal

from conftest import load_corpus
from scpl import report, verifier
from scpl.oracle import random_oracle
from scpl.runtime import Configuration, random_scheduler, run


def currency_run(seed=4):
    checked = load_corpus("currency_endowment")
    config = Configuration.activate(checked, random_oracle(seed))
    trace = run(config, random_scheduler(seed, fairness=20), max_steps=150)
    return checked, trace


class TestWriteReport:
    def test_all_artifacts_written(self, tmp_path):
        checked, trace = currency_run()
        result = verifier.verify_events(checked, trace.events)
        written = report.write_report(checked, result, trace.events, tmp_path)
        names = {p.name for p in written}
        assert names == {"report.json", "summary.csv", "timeline.png",
                         "balances.png"}
        for p in written:
            assert p.exists() and p.stat().st_size > 0

    def test_json_shape(self, tmp_path):
        checked, trace = currency_run()
        result = verifier.verify_events(checked, trace.events)
        report.write_report(checked, result, trace.events, tmp_path)
        data = json.loads((tmp_path / "report.json").read_text())
        assert data["ok"] is True
        assert "ledger-soundness" in data["checks"]
        assert {row["agent"] for row in data["agents"]} \
            >= {"alice", "bob", "carol"}

    def test_csv_counts_match_trace(self, tmp_path):
        checked, trace = currency_run()
        result = verifier.verify_events(checked, trace.events)
        report.write_report(checked, result, trace.events, tmp_path)
        with open(tmp_path / "summary.csv") as fh:
            rows = {r["agent"]: r for r in csv.DictReader(fh)}
        acts = [e for e in trace.events if e.kind == "act"]
        for agent, row in rows.items():
            assert int(row["acts"]) == sum(1 for e in acts
                                           if e.agent == agent)


class TestBalanceSeries:
    def test_endowment_conserved(self):
        checked, trace = currency_run()
        events = [report._as_event(e) for e in trace.events]
        endowments = report.currency_endowments(checked, events)
        assert endowments == {"alice": Decimal(10), "bob": Decimal(10),
                              "carol": Decimal(10)}
        series = report.balance_series(events, endowments)
        for agent, values in series.items():
            assert all(v >= 0 for v in values), agent

    def test_no_balances_for_non_currency(self, tmp_path):
        checked = load_corpus("citizens_band")
        config = Configuration.activate(checked, random_oracle(1))
        trace = run(config, random_scheduler(1, fairness=20), max_steps=60)
        result = verifier.verify_events(checked, trace.events)
        written = report.write_report(checked, result, trace.events, tmp_path)
        assert not (tmp_path / "balances.png").exists()
