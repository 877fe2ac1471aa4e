import json
import math

import pytest

from stochmatch.analysis import C
from stochmatch.cli import (
    ExperimentConfig,
    cmd_compare,
    cmd_convergence,
    create_parser,
    main,
    parse_generator,
    parse_list,
)
from stochmatch.errors import UsageError
from stochmatch.model import build_instance, gen_gnb, load, save


def run(capsys, *argv):
    code = main(["--no-log-file", *argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def body(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


class TestParsing:
    def test_generator_spec(self):
        assert parse_generator("gnb:n=2,b=1,p=0.5") == {"name": "gnb", "n": 2, "b": 1, "p": 0.5}
        assert parse_generator("random:p_range=0.1/0.9")["p_range"] == (0.1, 0.9)

    def test_bad_generator_spec(self):
        with pytest.raises(UsageError):
            parse_generator("gnb:n2")

    def test_lists(self):
        assert parse_list("25,50,100") == [25, 50, 100]
        assert parse_list("0.5", float) == [0.5]
        with pytest.raises(UsageError):
            parse_list("1,x")

    def test_help_documents_columns(self):
        parser = create_parser()
        subparsers = parser._subparsers._group_actions[0].choices
        for command, columns in [
            ("simulate", ["mean", "var", "ci95"]),
            ("compare", ["ratio_opt", "ratio_sopt", "zero_ratio"]),
            ("convergence", ["sbal_ratio", "bound_ratio", "ratio_upper"]),
            ("dual-audit", ["estimate", "target", "ratio", "c_effective"]),
        ]:
            text = subparsers[command].format_help()
            assert all(column in text for column in columns)


class TestGen:
    def test_gnb_file(self, tmp_path, capsys):
        path = tmp_path / "g.json"
        code, out, _ = run(capsys, "gen", "gnb", "--n", "2", "--b", "1", "--p", "0.5", "--out", str(path))
        assert code == 0
        assert load(path) == gen_gnb(2, 1, 0.5)

    def test_random_to_stdout(self, capsys):
        code, out, _ = run(capsys, "gen", "random", "--servers", "2", "--requests", "3", "--density", "1", "--p-range", "0.5,0.5", "--seed", "7")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["requests"]) == 3

    def test_split(self, tmp_path, capsys):
        source = tmp_path / "g.json"
        save(gen_gnb(2, 2, 0.5), source)
        target = tmp_path / "split.json"
        code, _, _ = run(capsys, "gen", "split", "--instance", str(source), "--out", str(target))
        assert code == 0
        assert load(target).n_servers == 4

    def test_invalid_parameter_exit_code(self, capsys):
        code, _, err = run(capsys, "gen", "gnb", "--n", "0", "--b", "1", "--p", "0.5")
        assert code == 2
        assert err.startswith("Error:")

    def test_missing_generator(self, capsys):
        code, _, _ = run(capsys, "gen")
        assert code == 2


class TestSimulate:
    def test_csv(self, capsys):
        code, out, _ = run(capsys, "simulate", "--gen", "gnb:n=1,b=1,p=0.5", "--trials", "200", "--policy", "sbal,greedy")
        assert code == 0
        rows = body(out)
        assert rows[0] == "policy,instance,trials,mean,var,ci95"
        assert [r.split(",")[0] for r in rows[1:]] == ["sbal", "greedy"]
        assert out.startswith("# seed=0")

    def test_reproducible_output(self, capsys):
        args = ("simulate", "--gen", "gnb:n=2,b=1,p=0.5", "--trials", "300", "--seed", "4")
        _, first, _ = run(capsys, *args)
        _, second, _ = run(capsys, *args, "--workers", "2")
        assert first == second

    def test_trace_and_out(self, tmp_path, capsys):
        out = tmp_path / "stats.csv"
        trace = tmp_path / "trace.csv"
        code, stdout, err = run(capsys, "simulate", "--gen", "gnb:n=2,b=1,p=0.5", "--trials", "10", "--out", str(out), "--trace", str(trace))
        assert code == 0
        assert stdout == ""
        assert "# seed=0" in err
        assert len(trace.read_text().splitlines()) == 5
        assert "# config_hash=" in out.read_text()

    def test_needs_one_source(self, capsys):
        code, _, err = run(capsys, "simulate", "--trials", "10")
        assert code == 2
        assert "--instance or --gen" in err

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(capsys, "simulate", "--instance", str(tmp_path / "missing.json"), "--trials", "10")
        assert code == 2

    def test_unknown_policy(self, capsys):
        code, _, _ = run(capsys, "simulate", "--gen", "gnb:n=1,b=1,p=1", "--policy", "ranking", "--trials", "5")
        assert code == 2

    def test_malformed_instance_file(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        code, _, err = run(capsys, "simulate", "--instance", str(path), "--trials", "5")
        assert code == 1
        assert str(path) in err

    def test_argparse_errors(self, capsys):
        assert main(["simulate", "--trials", "many"]) == 2


class TestBenchmark:
    def test_opt(self, tmp_path, capsys):
        sidecar = tmp_path / "lp.csv"
        code, out, _ = run(capsys, "benchmark", "opt", "--gen", "gnb:n=2,b=1,p=0.5", "--sidecar", str(sidecar))
        assert code == 0
        value = float(body(out)[1].split(",")[-1])
        assert value == pytest.approx(2.0)
        assert sidecar.exists()

    def test_sopt(self, capsys):
        code, out, _ = run(capsys, "benchmark", "sopt", "--gen", "gnb:n=1,b=1,p=0.5")
        assert code == 0
        assert float(body(out)[1].split(",")[-1]) == pytest.approx(0.75)

    def test_capacity_exit_code(self, tmp_path, capsys):
        settings = tmp_path / "small.json"
        settings.write_text(json.dumps({"dp_max_states": 10}))
        code, _, err = run(capsys, "--config-path", str(settings), "benchmark", "sopt", "--gen", "gnb:n=3,b=2,p=0.5")
        assert code == 3
        assert err.startswith("Error:")


class TestFormulas:
    def test_round_dist(self, capsys):
        code, out, _ = run(capsys, "formulas", "round-dist", "--b-list", "1", "--m", "2")
        assert code == 0
        rows = body(out)
        assert rows[0] == "b,k,probability"
        assert [float(r.split(",")[2]) for r in rows[1:]] == pytest.approx([0.367879, 0.367879, 0.264241], abs=1e-6)

    def test_round_dist_every_b(self, capsys):
        code, out, _ = run(capsys, "formulas", "round-dist", "--b-list", "1,3", "--m", "2")
        assert code == 0
        cells = [r.split(",") for r in body(out)[1:]]
        assert [(b, k) for b, k, _ in cells] == [("1", "0"), ("1", "1"), ("1", "2"), ("3", "0"), ("3", "1"), ("3", "2")]
        assert float(cells[3][2]) == pytest.approx(math.exp(-3))

    def test_greedy_table(self, capsys):
        code, out, _ = run(capsys, "formulas", "greedy", "--n-list", "2")
        assert code == 0
        rows = [r.split(",") for r in body(out)[1:]]
        assert len(rows) == 3
        for _, _, rec, closed in rows:
            assert float(rec) == pytest.approx(float(closed), abs=1e-9)

    def test_convergence_series(self, capsys):
        code, out, _ = run(capsys, "formulas", "convergence", "--n-list", "10,100")
        assert code == 0
        assert body(out)[1].startswith("10,0.7")

    def test_sbal_bound(self, capsys):
        code, out, _ = run(capsys, "formulas", "sbal-bound", "--n-list", "10", "--b-list", "1")
        assert code == 0
        assert body(out)[1].split(",")[2] == "7"

    def test_poisson_tail(self, capsys):
        code, out, _ = run(capsys, "formulas", "poisson-tail", "--probs", "0.5,0.5", "--b-list", "1")
        assert code == 0
        assert float(body(out)[1].split(",")[1]) == pytest.approx(0.75)

    def test_missing_sweep(self, capsys):
        code, _, _ = run(capsys, "formulas", "slack-floor")
        assert code == 2


class TestDualAudit:
    def test_edge_table(self, capsys):
        code, out, _ = run(capsys, "dual-audit", "--gen", "gnb:n=2,b=1,p=0.5", "--trials", "50")
        assert code == 0
        rows = body(out)
        assert rows[0] == "server_id,request_id,estimate,ci95,target,ratio"
        assert len(rows) == 1 + 6
        assert out.splitlines()[-1].startswith("# min_ratio=")

    def test_b_sweep(self, capsys):
        code, out, _ = run(capsys, "dual-audit", "--b-sweep", "1,2", "--family", "gnb:n=2,p=0.5", "--trials", "50")
        assert code == 0
        assert [r.split(",")[0] for r in body(out)[1:]] == ["1", "2"]

    def test_sweep_needs_family(self, capsys):
        code, _, _ = run(capsys, "dual-audit", "--b-sweep", "1", "--trials", "5")
        assert code == 2


class TestConvergence:
    def config(self, **kwargs):
        values = dict(command="convergence", trials=400, seed=0, b_list=[1], p_list=[0.1])
        values.update(kwargs)
        return ExperimentConfig(**values)

    def test_columns(self):
        report = cmd_convergence(self.config(n_list=[1, 4]))
        assert [row[0] for row in report.rows] == [1, 4]
        n, b, p, sbal, ci, bound, greedy, upper = report.rows[1]
        assert upper == pytest.approx(sbal / greedy)
        assert bound == 1.0

    def test_single_server_matches_round_probability(self):
        # one server, ten requests at p = 0.1: matched iff any request succeeds
        report = cmd_convergence(self.config(n_list=[1], trials=4000))
        _, _, _, sbal, ci, _, greedy, _ = report.rows[0]
        assert abs(sbal - (1 - 0.9**10)) < 3 * ci
        assert greedy == pytest.approx(1 - 1 / math.e)

    def test_duplicates_dropped(self, caplog):
        report = cmd_convergence(self.config(n_list=[2, 2, 3]))
        assert [row[0] for row in report.rows] == [2, 3]
        assert "duplicate" in caplog.text

    def test_missing_sweep(self):
        with pytest.raises(UsageError):
            cmd_convergence(self.config(n_list=[]))

    def test_stable_body(self):
        first = cmd_convergence(self.config(n_list=[2])).render()
        second = cmd_convergence(self.config(n_list=[2], workers=2)).render()
        assert first == second


class TestCompare:
    def test_gnb(self):
        config = ExperimentConfig(command="compare", generator="gnb:n=2,b=1,p=0.5", policies=["sbal", "greedy"], trials=500)
        report = cmd_compare(config)
        assert [row[0] for row in report.rows] == ["sbal", "greedy"]
        for _, mean, ci, opt, sopt, ratio_opt, ratio_sopt, zero in report.rows:
            assert opt == pytest.approx(2.0)
            assert ratio_opt == pytest.approx(mean / 2.0)
            assert mean <= sopt + 3 * ci + 1e-9
            assert not zero

    def test_empty_instance(self, tmp_path):
        path = tmp_path / "empty.json"
        save(build_instance([1], [[]]), path)
        config = ExperimentConfig(command="compare", instance=str(path), policies=["sbal"], trials=5)
        _, mean, _, opt, sopt, ratio_opt, ratio_sopt, zero = cmd_compare(config).rows[0]
        assert (mean, opt, sopt) == (0.0, 0.0, 0.0)
        assert ratio_opt == ratio_sopt == 1.0
        assert zero

    def test_capacity_errors_leave_columns_blank(self, tmp_path, capsys):
        settings = tmp_path / "small.json"
        settings.write_text(json.dumps({"dp_max_states": 10, "lp_max_edges": 2}))
        code, out, _ = run(capsys, "--config-path", str(settings), "compare", "--gen", "gnb:n=2,b=1,p=0.5", "--trials", "20", "--policy", "sbal")
        assert code == 0
        cells = body(out)[1].split(",")
        assert cells[3] == cells[4] == ""


@pytest.mark.slow
def test_convergence_acceptance():
    config = ExperimentConfig(command="convergence", trials=10_000, n_list=[25, 50, 100, 200], b_list=[1], p_list=[0.01])
    rows = cmd_convergence(config).rows
    upper = [row[7] for row in rows]
    slack = [3 * row[4] / row[6] for row in rows]
    for i in range(len(upper) - 1):
        assert upper[i + 1] <= upper[i] + slack[i] + slack[i + 1]
    assert C - 0.01 <= upper[-1] <= C + 0.05
    assert all(u > C - 0.01 for u in upper)
    assert math.isfinite(upper[0])
