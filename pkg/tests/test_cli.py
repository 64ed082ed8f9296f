import csv
import json

import pytest

from memlen.cli import main


@pytest.fixture()
def parity_spec(tmp_path):
    spec = tmp_path / "model.json"
    spec.write_text(json.dumps({"type": "hidden", "preset": "parity"}))
    return spec


def read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


class TestSimulate:
    def test_writes_sample_and_manifest(self, tmp_path, parity_spec):
        out = tmp_path / "run"
        rc = main(
            ["simulate", "--model", str(parity_spec), "--n", "100", "--seed", "7",
             "--out", str(out)]
        )
        assert rc == 0
        sample = (out / "sample_000.txt").read_text()
        assert len(sample.splitlines()) == 101
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["rng"] == "pcg64"
        assert manifest["model"]["type"] == "hidden"

    def test_byte_identical_reruns(self, tmp_path, parity_spec):
        outs = []
        for d in ("a", "b"):
            out = tmp_path / d
            main(["simulate", "--model", str(parity_spec), "--n", "200", "--seed", "3",
                  "--out", str(out)])
            outs.append((out / "sample_000.txt").read_bytes())
        assert outs[0] == outs[1]

    def test_binary_format_size(self, tmp_path, parity_spec):
        out = tmp_path / "run"
        main(["simulate", "--model", str(parity_spec), "--n", "99", "--seed", "1",
              "--format", "bin", "--out", str(out)])
        assert (out / "sample_000.bin").stat().st_size == 4 * 100


class TestEstimate:
    def test_backward_run(self, tmp_path, parity_spec):
        out = tmp_path / "run"
        rc = main(
            ["estimate", "--model", str(parity_spec), "--scheme", "backward",
             "--checkpoints", "500,2000", "--seed", "5", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "estimate_000.csv")
        assert [r["n"] for r in rows] == ["500", "2000"]
        assert set(rows[0]) == {"n", "in_set", "estimate", "oracle", "match", "theta", "kappa", "ms"}

    def test_param_violation_exits_2(self, tmp_path, parity_spec, capsys):
        with pytest.raises(SystemExit) as e:
            main(["estimate", "--model", str(parity_spec), "--scheme", "backward",
                  "--gamma", "0.5", "--beta", "0.3", "--n", "100",
                  "--out", str(tmp_path / "x")])
        assert e.value.code == 2

    def test_forward_p_run(self, tmp_path, parity_spec):
        out = tmp_path / "run"
        rc = main(
            ["estimate", "--model", str(parity_spec), "--scheme", "forward-p",
             "--checkpoints", "2000", "--seed", "5", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "estimate_000.csv")
        assert rows[0]["in_set"] in {"0", "1"}
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["contract"] == "checked"

    def test_condprob_run_has_symbol_column(self, tmp_path, parity_spec):
        out = tmp_path / "run"
        rc = main(
            ["estimate", "--model", str(parity_spec), "--scheme", "condprob-markov",
             "--checkpoints", "2000", "--seed", "5", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "estimate_000.csv")
        assert "symbol" in rows[0]
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["csv_schema"] == "condprob-v1"

    def test_input_run_is_contract_unchecked(self, tmp_path, parity_spec):
        sim = tmp_path / "sim"
        main(["simulate", "--model", str(parity_spec), "--n", "1000", "--seed", "2",
              "--out", str(sim)])
        out = tmp_path / "run"
        rc = main(
            ["estimate", "--input", str(sim / "sample_000.txt"), "--scheme", "backward",
             "--checkpoints", "1000", "--out", str(out)]
        )
        assert rc == 0
        rows = read_csv(out / "estimate_000.csv")
        assert rows[0]["oracle"] == "" and rows[0]["match"] == ""
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["contract"] == "unchecked"

    def test_deterministic_modulo_timing(self, tmp_path, parity_spec):
        def run(d):
            out = tmp_path / d
            main(["estimate", "--model", str(parity_spec), "--scheme", "backward",
                  "--checkpoints", "500,1500", "--seed", "4", "--replicas", "2",
                  "--out", str(out)])
            rows = []
            for f in sorted(out.glob("estimate_*.csv")):
                for r in read_csv(f):
                    r.pop("ms")
                    rows.append(r)
            return rows

        assert run("a") == run("b")


class TestReport:
    def _make_run(self, tmp_path, parity_spec, name, scheme="backward"):
        out = tmp_path / name
        main(["estimate", "--model", str(parity_spec), "--scheme", scheme,
              "--checkpoints", "500,1500", "--seed", "1", "--replicas", "2",
              "--out", str(out)])
        return out

    def test_aggregate_row(self, tmp_path, parity_spec):
        run = self._make_run(tmp_path, parity_spec, "r1")
        out_csv = tmp_path / "summary.csv"
        rc = main(["report", str(run), "--out", str(out_csv)])
        assert rc == 0
        rows = read_csv(out_csv)
        assert rows[-1]["run"] == "aggregate"
        assert rows[-1]["replica"] == "2 replicas"

    def test_mixed_schemes_refused(self, tmp_path, parity_spec):
        r1 = self._make_run(tmp_path, parity_spec, "r1", "backward")
        r2 = self._make_run(tmp_path, parity_spec, "r2", "forward-p")
        with pytest.raises(SystemExit) as e:
            main(["report", str(r1), str(r2)])
        assert e.value.code == 2

    def test_missing_manifest_refused(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        with pytest.raises(SystemExit) as e:
            main(["report", str(empty)])
        assert e.value.code == 2

    def test_empty_stopping_set_gives_density_zero(self, tmp_path):
        run = tmp_path / "run"
        run.mkdir()
        (run / "manifest.json").write_text(json.dumps({"scheme": "forward-p"}))
        (run / "estimate_000.csv").write_text(
            "n,in_set,estimate,oracle,match,theta,kappa,ms\n"
            "100,0,,,,5,,1\n200,0,,,,7,,1\n"
        )
        out_csv = tmp_path / "summary.csv"
        rc = main(["report", str(run), "--out", str(out_csv)])
        assert rc == 0
        rows = read_csv(out_csv)
        assert rows[0]["density"] == "0.000000"
        assert rows[0]["match_rate"] == ""
