import json

import numpy as np
import pytest

from supnorm.cli import config_hash, main, parse_config
from supnorm.rates import ConfigError

TINY = {
    "model": "density-histogram",
    "alpha": 0.75,
    "n_grid": [64, 256],
    "replications": 2,
    "draws": 20,
    "master_seed": 13,
}


@pytest.fixture
def tiny_config(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(TINY))
    return str(path)


def write_synthetic_csv(path, ns, loss_fn):
    rows = ["model,prior,alpha,n,rep,sup_loss,l2_loss,hellinger_loss,"
            "q90_sup,trunc_bias,seed,flag"]
    for n in ns:
        v = repr(float(loss_fn(n)))
        rows.append(f"white-noise,uniform,1.0,{n},0,{v},{v},,{v},0.0,0,0")
    path.write_text("\n".join(rows) + "\n")


class TestParseConfig:
    def test_minimal_valid_with_defaults_echoed(self, tiny_config):
        with pytest.warns(UserWarning):
            cfg, echo = parse_config(tiny_config)
        assert cfg.model == "density-histogram"
        assert echo["draws"] == 20
        assert echo["grid_resolution"] is None
        assert echo["mcmc"]["iterations"] == 20000

    def test_unknown_model_kind(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**TINY, "model": "polya-tree"}))
        with pytest.raises(ConfigError, match="unknown model"):
            parse_config(str(path))

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_unknown_prior_kind(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "model": "density-logdensity", "alpha": 1.0,
            "coefficient_law": "polya-tree",
            "n_grid": [64, 256, 4096], "replications": 5,
        }))
        with pytest.raises(ConfigError, match="unknown coefficient law"):
            parse_config(str(path))
        path.write_text(json.dumps({
            **TINY, "model": "white-noise", "prior_family": "polya-tree",
        }))
        with pytest.raises(ConfigError, match="unknown prior family"):
            parse_config(str(path))

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({**TINY, "polya": 1}))
        with pytest.raises(ConfigError, match="unknown config keys"):
            parse_config(str(path))

    def test_gaussian_r_rule_cited(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({
            "model": "density-logdensity", "alpha": 1.0, "r": 0.9,
            "n_grid": [64, 256, 4096], "replications": 5,
        }))
        with pytest.raises(ConfigError, match="alpha - 1/4"):
            parse_config(str(path))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            parse_config("/nonexistent/config.json")

    def test_hash_stable_under_key_reordering(self):
        a = {"alpha": 1.0, "model": "white-noise", "n_grid": [1, 2]}
        b = {"n_grid": [1, 2], "model": "white-noise", "alpha": 1.0}
        assert config_hash(a) == config_hash(b)


@pytest.mark.filterwarnings("ignore::UserWarning")
class TestSimulate:
    def test_tiny_run(self, tiny_config, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["simulate", tiny_config, "--out", str(out)])
        assert rc == 0
        csv = (out / "records.csv").read_text().strip().split("\n")
        assert len(csv) == 1 + 4  # header + 2 n-values x 2 reps
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["rows"] == 4
        assert manifest["master_seed"] == 13

    def test_rerun_is_byte_identical(self, tiny_config, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", tiny_config, "--out", str(out1)]) == 0
        assert main(["simulate", tiny_config, "--out", str(out2), "--threads", "4"]) == 0
        assert (out1 / "records.csv").read_bytes() == (out2 / "records.csv").read_bytes()

    def test_config_error_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["simulate", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_unwritable_out_exit_3(self, tiny_config, tmp_path):
        # a regular file where the output directory should go (permission
        # tricks do not stop root)
        blocker = tmp_path / "blocked"
        blocker.write_text("")
        rc = main(["simulate", tiny_config, "--out", str(blocker)])
        assert rc == 3

    def test_env_seed_override(self, tiny_config, tmp_path, monkeypatch):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["simulate", tiny_config, "--out", str(out1)])
        monkeypatch.setenv("SUPNORM_SEED", "999")
        main(["simulate", tiny_config, "--out", str(out2)])
        assert (out1 / "records.csv").read_bytes() != (out2 / "records.csv").read_bytes()
        manifest = json.loads((out2 / "manifest.json").read_text())
        assert manifest["master_seed"] == 999


class TestFitRate:
    def test_exact_synthetic_slope(self, tmp_path, capsys):
        csv = tmp_path / "synth.csv"
        write_synthetic_csv(csv, [2 ** k for k in (8, 10, 12, 14)],
                            lambda n: (n / np.log(n)) ** (-1.0 / 3.0))
        rc = main(["fit-rate", str(csv)])
        assert rc == 0
        out = json.loads(capsys.readouterr().out)
        assert out["slope"] == pytest.approx(-1.0 / 3.0, abs=1e-12)
        assert out["target"] == pytest.approx(-1.0 / 3.0)
        assert out["regressor"] == "nlogn"
        assert out["n_points"] == 4
        assert out["excluded_rows"] == 0

    def test_plain_n_regressor_flag(self, tmp_path, capsys):
        csv = tmp_path / "synth.csv"
        write_synthetic_csv(csv, [10, 100, 1000], lambda n: n ** -0.25)
        assert main(["fit-rate", str(csv), "--regressor", "n"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["slope"] == pytest.approx(-0.25, abs=1e-12)

    def test_two_n_values_exit_2(self, tmp_path, capsys):
        csv = tmp_path / "two.csv"
        write_synthetic_csv(csv, [10, 100], lambda n: 1.0 / n)
        assert main(["fit-rate", str(csv)]) == 2
        assert "3 distinct n" in capsys.readouterr().err

    def test_malformed_csv_exit_2(self, tmp_path):
        csv = tmp_path / "junk.csv"
        csv.write_text("these,are,not\nloss,records,at,all\n")
        assert main(["fit-rate", str(csv)]) == 2

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_simulate_then_fit_round_trip(self, tmp_path, capsys):
        cfgd = {**TINY, "n_grid": [64, 256, 1024], "replications": 2}
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(cfgd))
        out = tmp_path / "out"
        assert main(["simulate", str(cfg), "--out", str(out)]) == 0
        capsys.readouterr()
        assert main(["fit-rate", str(out / "records.csv")]) == 0
        fit = json.loads(capsys.readouterr().out)
        assert np.isfinite(fit["slope"])
        assert fit["target"] == pytest.approx(-0.3)
        # every emitted CSV is also consumable by the report command
        assert main(["report", str(out / "records.csv")]) == 0
        assert "| 64 |" in capsys.readouterr().out


class TestReport:
    def test_table_rows(self, tmp_path, capsys):
        csv = tmp_path / "synth.csv"
        write_synthetic_csv(csv, [64, 256], lambda n: 1.0 / n)
        assert main(["report", str(csv)]) == 0
        out = capsys.readouterr().out
        assert "| 64 |" in out and "| 256 |" in out

    def test_empty_csv(self, tmp_path, capsys):
        csv = tmp_path / "empty.csv"
        csv.write_text(
            "model,prior,alpha,n,rep,sup_loss,l2_loss,hellinger_loss,"
            "q90_sup,trunc_bias,seed,flag\n"
        )
        assert main(["report", str(csv)]) == 0
        assert "no records" in capsys.readouterr().out

    def test_flagged_rows_reported(self, tmp_path, capsys):
        csv = tmp_path / "flagged.csv"
        rows = ["model,prior,alpha,n,rep,sup_loss,l2_loss,hellinger_loss,"
                "q90_sup,trunc_bias,seed,flag",
                "density-logdensity,gaussian,1.0,64,0,0.5,0.2,0.1,0.6,,0,1",
                "density-logdensity,gaussian,1.0,64,1,0.5,0.2,0.1,0.6,,0,0"]
        csv.write_text("\n".join(rows) + "\n")
        assert main(["report", str(csv)]) == 0
        out = capsys.readouterr().out
        assert "1 flagged row(s)" in out
