"""End-to-end tests of the command line, invoked in process."""

import filecmp
import json

import numpy as np
import pytest

from csurv import cli, io
from csurv.simulate import simulate_univariate


def run(capsys, *argv):
    rc = cli.main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def error_payload(err):
    return json.loads(err.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def biv_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    path = d / "biv.csv"
    assert cli.main([
        "simulate", "--scenario", "III", "--n", "40", "--seed", "4",
        "--out", str(path),
    ]) == 0
    return path


@pytest.fixture(scope="module")
def uni_csv(tmp_path_factory):
    d = tmp_path_factory.mktemp("data")
    path = d / "uni.csv"
    io.write_dataset(path, simulate_univariate(n=40, rng=1))
    return path


@pytest.fixture(scope="module")
def biv_archive(tmp_path_factory, biv_csv):
    d = tmp_path_factory.mktemp("fit")
    path = d / "draws.jsonl"
    assert cli.main([
        "fit", "--model", "biv", "--data", str(biv_csv),
        "--n-iter", "80", "--burn-in", "20", "--thin", "3",
        "--seed", "0", "--out", str(path),
    ]) == 0
    return path


class TestSimulate:
    def test_writes_dataset_and_truth(self, tmp_path, capsys):
        out = tmp_path / "d.csv"
        rc, stdout, _ = run(
            capsys, "simulate", "--scenario", "III", "--n", "25",
            "--seed", "3", "--out", str(out),
        )
        assert rc == 0
        assert "25 subjects" in stdout
        truth = tmp_path / "d.truth.csv"
        assert out.exists() and truth.exists()
        ds = io.load_dataset(out, window=(0, 200))
        assert len(ds) == 25
        meta = io.read_meta(out)
        assert meta["command"] == "simulate"
        assert meta["w"] == 0.5 and meta["lam"] == 0.2
        assert meta["window"] == [0.0, 200.0]
        cols, _ = io.read_grid_csv(truth)
        # on the ordered path the symptom strictly follows the infection
        ordered = cols["other_cause"] == 0
        assert ordered.any()
        assert np.all(cols["S"][ordered] > cols["I"][ordered])

    def test_unknown_scenario(self, tmp_path, capsys):
        rc, _, err = run(
            capsys, "simulate", "--scenario", "IX",
            "--out", str(tmp_path / "d.csv"),
        )
        assert rc == 3
        assert error_payload(err)["error"] == "ValidationError"

    def test_config_file_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("scenario = II\nn = 30\nseed = 7\n")
        out = tmp_path / "d.csv"
        rc, _, _ = run(
            capsys, "simulate", "--config", str(cfg), "--n", "20",
            "--out", str(out),
        )
        assert rc == 0
        meta = io.read_meta(out)
        # the flag beats the file, the file beats the default
        assert meta["n"] == 20
        assert meta["seed"] == 7
        assert meta["scenario"] == "II"
        assert meta["w"] == 1.0

    def test_missing_subcommand_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main([])
        assert exc.value.code == 2


class TestNpmle:
    def test_support_of_alternating_pattern(self, tmp_path, capsys):
        delta = [1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 0]
        lines = ["id,C,delta"]
        lines += [f"{i},{i},{d}" for i, d in enumerate(delta, start=1)]
        data = tmp_path / "u.csv"
        data.write_text("\n".join(lines) + "\n")
        out = tmp_path / "fit.json"
        rc, stdout, _ = run(
            capsys, "npmle", "--data", str(data), "--out", str(out),
        )
        assert rc == 0
        assert "support size 4" in stdout
        fit = json.loads(out.read_text())
        assert fit["support"] == [1.0, 4.0, 7.0, 10.0]
        assert fit["support_size"] == 4
        assert fit["converged"]
        assert sum(fit["p"]) == pytest.approx(1.0)
        assert np.all(np.diff(fit["F"]) >= 0)

    def test_rejects_bivariate_file(self, tmp_path, capsys, biv_csv):
        rc, _, err = run(
            capsys, "npmle", "--data", str(biv_csv),
            "--out", str(tmp_path / "fit.json"),
        )
        assert rc == 3
        assert "univariate" in error_payload(err)["message"]


class TestFit:
    def test_bivariate_archive_and_summary(self, biv_archive, capsys):
        draws, header = io.read_draws(biv_archive)
        assert header["kind"] == "bivariate"
        assert draws.n_draws == 20
        assert header["config"]["seed"] == 0
        assert header["config"]["n_iter"] == 80
        summary = json.loads(
            biv_archive.with_suffix(".summary.json").read_text()
        )
        assert summary["n_draws"] == 20
        names = [row["parameter"] for row in summary["parameters"]]
        assert names == ["lambda", "lambda_L", "w", "M_I", "M_S"]

    def test_two_chains_double_the_draws(self, tmp_path, capsys, biv_csv):
        out = tmp_path / "draws.jsonl"
        rc, _, _ = run(
            capsys, "fit", "--model", "biv", "--data", str(biv_csv),
            "--n-iter", "60", "--burn-in", "20", "--thin", "2",
            "--seed", "0", "--chains", "2", "--out", str(out),
        )
        assert rc == 0
        draws, _ = io.read_draws(out)
        assert draws.n_draws == 40

    def test_univariate_fit(self, tmp_path, capsys, uni_csv):
        out = tmp_path / "draws.jsonl"
        rc, _, _ = run(
            capsys, "fit", "--model", "uni", "--data", str(uni_csv),
            "--window", "0", "62", "--n-iter", "60", "--burn-in", "20",
            "--thin", "2", "--out", str(out),
        )
        assert rc == 0
        draws, header = io.read_draws(out)
        assert header["kind"] == "univariate"
        assert draws.n_draws == 20

    def test_model_data_mismatch(self, tmp_path, capsys, biv_csv, uni_csv):
        for model, data in (("uni", biv_csv), ("biv", uni_csv)):
            rc, _, err = run(
                capsys, "fit", "--model", model, "--data", str(data),
                "--n-iter", "40", "--burn-in", "10", "--thin", "2",
                "--out", str(tmp_path / "d.jsonl"),
            )
            assert rc == 3
            assert f"model '{model}'" in error_payload(err)["message"]

    def test_independent_marginals_pin_the_race(self, tmp_path, capsys,
                                                biv_csv):
        out = tmp_path / "draws.jsonl"
        rc, _, _ = run(
            capsys, "fit", "--model", "biv", "--data", str(biv_csv),
            "--n-iter", "60", "--burn-in", "20", "--thin", "2",
            "--independent-marginals", "--out", str(out),
        )
        assert rc == 0
        draws, header = io.read_draws(out)
        np.testing.assert_allclose(draws.lam, 1e-8)
        np.testing.assert_allclose(draws.w, 1.0)
        assert header["config"]["fix_lambda"] == 1e-8
        assert header["config"]["fix_w"] == 1.0

    def test_bad_schedule(self, tmp_path, capsys, biv_csv):
        rc, _, err = run(
            capsys, "fit", "--model", "biv", "--data", str(biv_csv),
            "--n-iter", "40", "--burn-in", "80",
            "--out", str(tmp_path / "d.jsonl"),
        )
        assert rc == 3
        assert "schedule" in error_payload(err)["message"]


class TestDiagnose:
    def test_stdout_and_file_modes(self, tmp_path, capsys, biv_archive):
        rc, stdout, _ = run(capsys, "diagnose", "--draws", str(biv_archive))
        assert rc == 0
        payload = json.loads(stdout)
        names = [row["parameter"] for row in payload["parameters"]]
        assert "lambda" in names and "w" in names
        assert payload["fit_config"]["model"] == "biv"

        out = tmp_path / "diag.json"
        rc, _, _ = run(
            capsys, "diagnose", "--draws", str(biv_archive),
            "--out", str(out),
        )
        assert rc == 0
        assert json.loads(out.read_text())["parameters"] == \
            payload["parameters"]


class TestSummarize:
    def test_bivariate_file_set(self, tmp_path, capsys, biv_archive):
        out_dir = tmp_path / "sums"
        rc, _, _ = run(
            capsys, "summarize", "--draws", str(biv_archive),
            "--x", "0,0", "--grid", "0", "200", "41",
            "--out-dir", str(out_dir),
        )
        assert rc == 0
        expected = {
            "survival_I.csv", "survival_S.csv", "density.csv",
            "marginal_I.csv", "marginal_S.csv", "summary.json",
            "effect_I_intercept.csv", "effect_I_x1.csv", "effect_I_x2.csv",
            "effect_S_intercept.csv", "effect_S_x1.csv", "effect_S_x2.csv",
        }
        assert {p.name for p in out_dir.iterdir()} == expected
        cols, meta = io.read_grid_csv(out_dir / "survival_I.csv")
        assert meta["x"] == [0.0, 0.0]
        assert len(cols["t"]) == 41
        assert np.all(cols["mean"] >= 0) and np.all(cols["mean"] <= 1)
        assert np.all(np.diff(cols["mean"]) <= 1e-12)
        assert np.all(cols["lower"] <= cols["mean"] + 1e-12)
        dens, _ = io.read_grid_csv(out_dir / "density.csv")
        assert len(dens["f_joint"]) == 41 * 41
        assert np.all(dens["f_joint"] >= 0)

    def test_univariate_file_set(self, tmp_path, capsys, uni_csv):
        archive = tmp_path / "draws.jsonl"
        assert cli.main([
            "fit", "--model", "uni", "--data", str(uni_csv),
            "--window", "0", "62", "--n-iter", "60", "--burn-in", "20",
            "--thin", "2", "--out", str(archive),
        ]) == 0
        capsys.readouterr()
        out_dir = tmp_path / "sums"
        rc, _, _ = run(
            capsys, "summarize", "--draws", str(archive),
            "--grid", "0", "62", "32", "--out-dir", str(out_dir),
        )
        assert rc == 0
        assert {p.name for p in out_dir.iterdir()} == {
            "survival.csv", "density.csv", "summary.json",
        }
        rc, _, err = run(
            capsys, "summarize", "--draws", str(archive), "--x", "1,2",
            "--out-dir", str(tmp_path / "bad"),
        )
        assert rc == 3
        assert "covariates" in error_payload(err)["message"]


class TestMise:
    def test_zero_against_itself(self, tmp_path, capsys):
        t = np.linspace(0.0, 10.0, 11)
        f = tmp_path / "curve.csv"
        io.write_grid_csv(f, {"t": t, "mean": np.exp(-0.3 * t)})
        rc, stdout, _ = run(
            capsys, "mise", "--fitted", str(f), "--truth-csv", str(f),
        )
        assert rc == 0
        payload = json.loads(stdout)
        assert payload["per_dataset"] == [0.0]
        assert payload["estimate"] == 0.0

    def test_scenario_truth_matches_exact_curve(self, tmp_path, capsys):
        from csurv.simulate import scenario, true_marginal_survival

        t = np.linspace(0.0, 200.0, 101)
        truth = true_marginal_survival(scenario("III"), "I", (0.0, 0.0), t)
        f = tmp_path / "curve.csv"
        io.write_grid_csv(f, {"t": t, "mean": truth})
        out = tmp_path / "mise.json"
        rc, _, _ = run(
            capsys, "mise", "--fitted", str(f), "--scenario", "III",
            "--outcome", "I", "--x", "0,0", "--out", str(out),
        )
        assert rc == 0
        payload = json.loads(out.read_text())
        assert payload["estimate"] == pytest.approx(0.0, abs=1e-15)

    def test_grid_mismatch(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        io.write_grid_csv(a, {"t": np.linspace(0, 1, 5), "mean": np.ones(5)})
        io.write_grid_csv(b, {"t": np.linspace(0, 2, 5), "mean": np.ones(5)})
        rc, _, err = run(
            capsys, "mise", "--fitted", str(a), str(b),
            "--truth-csv", str(a),
        )
        assert rc == 3
        assert "grid differs" in error_payload(err)["message"]

    def test_needs_a_truth_source(self, tmp_path, capsys):
        f = tmp_path / "a.csv"
        io.write_grid_csv(f, {"t": np.arange(3.0), "mean": np.ones(3)})
        rc, _, err = run(capsys, "mise", "--fitted", str(f))
        assert rc == 3
        assert "truth" in error_payload(err)["message"]


class TestScenarioRecovery:
    def test_pure_other_cause_posterior_w(self, tmp_path, capsys):
        """Scenario II generates every symptom from the other cause; the
        posterior of w should sit near one."""
        data = tmp_path / "d.csv"
        archive = tmp_path / "draws.jsonl"
        assert cli.main([
            "simulate", "--scenario", "II", "--n", "200", "--seed", "3",
            "--out", str(data),
        ]) == 0
        assert cli.main([
            "fit", "--model", "biv", "--data", str(data),
            "--n-iter", "1500", "--burn-in", "500", "--thin", "5",
            "--seed", "4", "--out", str(archive),
        ]) == 0
        capsys.readouterr()
        summary = json.loads(
            archive.with_suffix(".summary.json").read_text()
        )
        w_row = next(
            r for r in summary["parameters"] if r["parameter"] == "w"
        )
        assert w_row["mean"] >= 0.9


class TestDeterminism:
    def pipeline(self, root, monkeypatch):
        root.mkdir()
        monkeypatch.chdir(root)
        for argv in (
            ["simulate", "--scenario", "III", "--n", "30", "--seed", "5",
             "--out", "data.csv"],
            ["fit", "--model", "biv", "--data", "data.csv",
             "--n-iter", "80", "--burn-in", "20", "--thin", "3",
             "--seed", "1", "--out", "draws.jsonl"],
            ["summarize", "--draws", "draws.jsonl", "--x", "0,0",
             "--grid", "0", "200", "21", "--out-dir", "sums"],
            ["diagnose", "--draws", "draws.jsonl", "--out", "diag.json"],
            ["mise", "--fitted", "sums/survival_I.csv",
             "--scenario", "III", "--outcome", "I", "--x", "0,0",
             "--out", "mise.json"],
        ):
            assert cli.main(argv) == 0

    def test_repeated_runs_are_byte_identical(self, tmp_path, capsys,
                                              monkeypatch):
        self.pipeline(tmp_path / "a", monkeypatch)
        self.pipeline(tmp_path / "b", monkeypatch)
        files = sorted(
            p.relative_to(tmp_path / "a")
            for p in (tmp_path / "a").rglob("*") if p.is_file()
        )
        assert files, "pipeline produced no artifacts"
        for rel in files:
            same = filecmp.cmp(
                tmp_path / "a" / rel, tmp_path / "b" / rel, shallow=False
            )
            assert same, f"{rel} differs between identical runs"
