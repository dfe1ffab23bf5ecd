import json

from click.testing import CliRunner

from conftest import CORPUS, corpus_path
from scpl.cli import main


def invoke(*args):
    return CliRunner().invoke(main, [str(a) for a in args])


class TestCheck:
    def test_clean_contract_exits_zero(self):
        r = invoke("check", corpus_path("tourists_hosts"))
        assert r.exit_code == 0

    def test_fixture_exits_one_with_three_diagnostics(self):
        r = invoke("check", CORPUS / "nd_fixture.scpl")
        assert r.exit_code == 1
        lines = [l for l in r.stderr.splitlines() if "ExplicitND" in l]
        assert len(lines) == 3
        assert all(":" in l for l in lines)

    def test_missing_file_exits_two(self):
        r = invoke("check", "/no/such/file.scpl")
        assert r.exit_code == 2

    def test_syntax_error_exits_two(self, tmp_path):
        bad = tmp_path / "bad.scpl"
        bad.write_text("activation [a#x].\nx --> .\n")
        r = invoke("check", bad)
        assert r.exit_code == 2
        assert "syntax" in r.stderr


class TestRun:
    def test_golden(self, tmp_path):
        r = invoke("run", corpus_path("tourists_hosts"),
                   "--oracle", CORPUS / "golden_script.json",
                   "--trace", tmp_path / "out")
        assert r.exit_code == 0
        golden = (CORPUS / "golden_trace.txt").read_text()
        assert (tmp_path / "out.txt").read_text() == golden
        assert r.output == golden

    def test_zero_steps(self):
        r = invoke("run", corpus_path("tourists_hosts"),
                   "--oracle", CORPUS / "golden_script.json",
                   "--max-steps", 0)
        assert r.exit_code == 0
        assert r.output == ""

    def test_random_run_writes_jsonl(self, tmp_path):
        r = invoke("run", corpus_path("currency_endowment"),
                   "--oracle", "random", "--scheduler", "random",
                   "--seed", 9, "--max-steps", 150,
                   "--trace", tmp_path / "out")
        assert r.exit_code == 0
        lines = (tmp_path / "out.jsonl").read_text().splitlines()
        assert lines
        for line in lines:
            json.loads(line)

    def test_auto_oracle_ambiguity_exits_three(self):
        r = invoke("run", corpus_path("tourists_hosts"), "--oracle", "auto")
        assert r.exit_code == 3


class TestVerify:
    def test_round_trip(self, tmp_path):
        invoke("run", corpus_path("currency_endowment"),
               "--oracle", "random", "--scheduler", "random",
               "--seed", 9, "--max-steps", 150, "--trace", tmp_path / "out")
        r = invoke("verify", corpus_path("currency_endowment"),
                   tmp_path / "out.jsonl", "--out", tmp_path / "rep")
        assert r.exit_code == 0
        assert (tmp_path / "rep" / "report.json").exists()
        assert (tmp_path / "rep" / "balances.png").exists()

    def test_corrupted_trace_fails(self, tmp_path):
        invoke("run", corpus_path("currency_endowment"),
               "--oracle", "random", "--scheduler", "random",
               "--seed", 9, "--max-steps", 150, "--trace", tmp_path / "out")
        lines = (tmp_path / "out.jsonl").read_text().splitlines()
        acts = [i for i, l in enumerate(lines)
                if json.loads(l)["kind"] == "act"]
        del lines[acts[len(acts) // 2]]
        (tmp_path / "bad.jsonl").write_text("\n".join(lines) + "\n")
        r = invoke("verify", corpus_path("currency_endowment"),
                   tmp_path / "bad.jsonl")
        assert r.exit_code == 1
        assert "FAIL" in r.output
