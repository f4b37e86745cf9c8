import csv
import io
import json

import pytest

from conftest import SAMPLE_TEXT
from mrflist.cli import METRIC_COLUMNS, main, verify
from mrflist.rules import Ruleset, format_classbench_ruleset, make_rule


@pytest.fixture
def sample_file(tmp_path):
    p = tmp_path / "sample.rules"
    p.write_text(SAMPLE_TEXT)
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestRun:
    ARGS = ("run", "--synthetic", "64,0.1,1", "--gen", "runs,64,5",
            "--packets", "2000", "--reps", "3")

    def test_three_rows(self, capsys):
        code, out, _ = run(capsys, *self.ARGS)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert [r["variant"] for r in rows] == ["MRF_MEMORYLESS", "MRF_FAST", "STATIC_LIST"]
        assert list(rows[0]) == METRIC_COLUMNS
        assert all(r["reps"] == "3" and r["n_rules"] == "64" for r in rows)
        cost = {r["variant"]: float(r["avg_counted_cost"]) for r in rows}
        assert cost["MRF_FAST"] <= cost["MRF_MEMORYLESS"] < cost["STATIC_LIST"]

    def test_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(capsys, *self.ARGS, "--out", str(a))[0] == 0
        assert run(capsys, *self.ARGS, "--out", str(b), "--jobs", "2")[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_jsonl_and_sweep(self, capsys):
        code, out, _ = run(capsys, "run", "--synthetic", "16,0.2,1", "--synthetic", "32,0.2,1",
                           "--gen", "uniform,0,1", "--gen", "zipf,1.2,1", "--packets", "200",
                           "--reps", "2", "--variants", "static,fast", "--format", "jsonl")
        assert code == 0
        rows = [json.loads(line) for line in out.splitlines()]
        assert len(rows) == 2 * 2 * 2
        assert all(set(r) == set(METRIC_COLUMNS) for r in rows)
        memory = {(r["n_rules"], r["variant"]): r["memory_bytes"] for r in rows}
        assert memory[(16, "STATIC_LIST")] == 16 * 52

    def test_trace_file(self, capsys, tmp_path, sample_file):
        trace = tmp_path / "t.trace"
        # numeric ids: the parser numbers rules 1..7, x becomes 4
        trace.write_text("167837953 335610113 9 80 6 1\n167837961 335610113 9 22 6 4\n")
        code, out, _ = run(capsys, "run", "--ruleset", sample_file, "--trace", str(trace),
                           "--reps", "1", "--variants", "mrf")
        assert code == 0
        row = next(csv.DictReader(io.StringIO(out)))
        assert float(row["avg_lookup_nodes"]) == (1 + 4) / 2

    @pytest.mark.parametrize("bad", [["--reps", "0"], ["--variants", "tree"],
                                     ["--gen", "bursty,1,1"], ["--alpha", "0.5"]])
    def test_usage_errors(self, capsys, bad):
        with pytest.raises(SystemExit) as e:
            code = main(["run", "--synthetic", "8,0.1,1", "--gen", "uniform,0,1", *bad])
            raise SystemExit(code)
        assert e.value.code == 1

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "run", "--ruleset", str(tmp_path / "nope"),
                           "--gen", "uniform,0,1", "--reps", "1")
        assert code == 3 and "I/O" in err


class TestStats:
    def test_sample_rs(self, capsys, sample_file):
        code, out, _ = run(capsys, "stats", "--ruleset", sample_file, "--format", "json")
        report = json.loads(out)
        assert code == 0
        assert (report["full_edges"], report["reduced_edges"]) == (6, 6)
        assert report["avg_ancestors"] == pytest.approx(15 / 7)

    def test_independent(self, capsys):
        code, out, _ = run(capsys, "stats", "--synthetic", "20,0,3", "--format", "json")
        report = json.loads(out)
        assert (report["full_edges"], report["reduced_edges"], report["max_depth"]) == (0, 0, 0)

    def test_chain(self, capsys, tmp_path):
        p = tmp_path / "chain.rules"
        rs = Ruleset(make_rule(i, i, "TCP", dport=f"{100 - i}:{100 + i}") for i in range(8))
        p.write_text(format_classbench_ruleset(rs))
        edges = tmp_path / "edges.txt"
        code, out, _ = run(capsys, "stats", "--ruleset", str(p), "--edges", str(edges))
        assert code == 0
        assert "full_edges: 28" in out and "reduced_edges: 7" in out
        assert len(edges.read_text().splitlines()) == 28

    def test_parse_error(self, capsys, tmp_path):
        p = tmp_path / "bad.rules"
        p.write_text("@1.2.3.4/32 nonsense\n")
        code, _, err = run(capsys, "stats", "--ruleset", str(p))
        assert code == 1 and "line 1" in err


class TestVerify:
    def test_default_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--instances", "60")
        assert code == 0
        assert out.count("PASS") == 2 + 2 * 3 and "FAIL" not in out

    def test_injected_fault(self, capsys, tmp_path):
        dump = tmp_path / "cex.json"
        code, out, _ = run(capsys, "verify", "--instances", "60", "--inject-fault",
                           "--dump", str(dump))
        assert code == 2 and "FAIL" in out
        cex = json.loads(dump.read_text())
        assert cex and all({"seed", "edges", "requests", "initial"} <= set(c) for c in cex)
        assert any(c["check"].startswith(("audits", "competitive")) for c in cex)

    def test_refuses_large_n(self, capsys):
        code, _, err = run(capsys, "verify", "--max-n", "20")
        assert code == 1 and "exceeds" in err

    def test_library_outcomes(self):
        outcomes = verify(max_n=4, instances=30, alphas=(1,))
        assert [o.name for o in outcomes] == ["swap_bound_and_feasibility", "mtf_equivalence",
                                              "competitive_alpha_1", "audits_alpha_1"]
        assert all(o.passed for o in outcomes)


class TestGen:
    def test_ruleset_then_stats(self, capsys, tmp_path):
        p = tmp_path / "syn.rules"
        assert run(capsys, "gen", "ruleset", "--synthetic", "64,1.0,2", "--out", str(p))[0] == 0
        code, out, _ = run(capsys, "stats", "--ruleset", str(p), "--format", "json")
        assert json.loads(out)["full_edges"] == 64 * 63 // 2

    def test_trace(self, capsys):
        code, out, _ = run(capsys, "gen", "trace", "--synthetic", "16,0.2,1",
                           "--gen", "zipf,1.0,4", "--packets", "25")
        assert code == 0
        assert len([line for line in out.splitlines() if not line.startswith("#")]) == 25

    def test_trace_needs_gen(self, capsys):
        assert run(capsys, "gen", "trace", "--synthetic", "16,0.2,1")[0] == 1
