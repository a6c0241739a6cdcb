"""Command-line interface: config parsing, artifacts, determinism, report."""

import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from npath import (
    IDEAL_NOISE,
    ConfigError,
    InterferometerSpec,
    NoiseParams,
    SimulationError,
    estimate_D,
    estimate_VP,
    format_uncertainty,
    load_config,
    record_fringes,
    report,
    resolve_config,
    run_experiment,
)
from npath.runner import _check_sweep_duality, main


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return path


def read_csv(path):
    with path.open() as handle:
        rows = list(csv.reader(handle))
    return rows[0], rows[1:]


def sweep_payload(**overrides):
    payload = {
        "experiment": "sweep_theta",
        "num_paths": 2,
        "thetas": [0.0, 1.2, 2.8],
        "shots": None,
        "quantities": ["VC", "VP", "D"],
    }
    payload.update(overrides)
    return payload


class TestConfigParsing:
    def test_defaults(self):
        config = resolve_config(
            {"experiment": "sweep_theta", "num_paths": 4, "thetas": 0.5}
        )
        assert config.shots == 8000
        assert config.seed == 0
        assert config.noise == IDEAL_NOISE
        assert config.error_method == "delta"
        assert config.quantities == ("VC", "D")
        assert config.thetas == (0.5,)
        assert str(config.out_dir) == "results"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="shotz"):
            resolve_config(
                {"experiment": "sweep_theta", "num_paths": 2, "thetas": 0.5,
                 "shotz": 10}
            )

    def test_key_of_other_experiment_rejected(self):
        with pytest.raises(ConfigError, match="does not apply"):
            resolve_config(
                {"experiment": "sweep_theta", "num_paths": 2, "thetas": 0.5,
                 "phase_grid": 16}
            )

    def test_nested_unknown_keys_carry_their_path(self):
        with pytest.raises(ConfigError, match="noise.bogus"):
            resolve_config(
                {"experiment": "sweep_theta", "num_paths": 2, "thetas": 0.5,
                 "noise": {"bogus": 1}}
            )
        with pytest.raises(ConfigError, match="fit.bogus"):
            resolve_config(
                {"experiment": "fit", "num_paths": 2, "thetas": [0.5, 1.0],
                 "fit": {"bogus": 1}}
            )
        with pytest.raises(ConfigError, match="thetas.step"):
            resolve_config(
                {"experiment": "sweep_theta", "num_paths": 2,
                 "thetas": {"start": 0, "stop": 1, "step": 0.1}}
            )

    def test_required_keys(self):
        with pytest.raises(ConfigError, match="experiment"):
            resolve_config({"num_paths": 2, "thetas": 0.5})
        with pytest.raises(ConfigError, match="num_paths"):
            resolve_config({"experiment": "sweep_theta", "thetas": 0.5})
        with pytest.raises(ConfigError, match="thetas"):
            resolve_config({"experiment": "sweep_theta", "num_paths": 2})

    def test_bad_experiment_name(self):
        with pytest.raises(ConfigError, match="experiment"):
            resolve_config({"experiment": "sweep", "num_paths": 2, "thetas": 0.5})

    def test_path_count_constraints(self):
        with pytest.raises(ConfigError, match="power of two"):
            resolve_config({"experiment": "sweep_theta", "num_paths": 3,
                            "thetas": 0.5})
        with pytest.raises(ConfigError, match="two-path"):
            resolve_config({"experiment": "fringes", "num_paths": 4,
                            "thetas": 0.5})
        with pytest.raises(ConfigError, match="capped at 16"):
            resolve_config({"experiment": "estimate_vp", "num_paths": 32,
                            "thetas": 0.5})
        with pytest.raises(ConfigError, match="capped at 16"):
            resolve_config({"experiment": "sweep_theta", "num_paths": 32,
                            "thetas": 0.5, "quantities": ["VP"]})

    def test_theta_forms(self):
        grid = resolve_config(
            {"experiment": "sweep_theta", "num_paths": 2,
             "thetas": {"start": 0.0, "stop": 1.0, "count": 5}}
        ).thetas
        assert grid == (0.0, 0.25, 0.5, 0.75, 1.0)
        explicit = resolve_config(
            {"experiment": "sweep_theta", "num_paths": 2, "thetas": [0.1, 0.2]}
        ).thetas
        assert explicit == (0.1, 0.2)
        with pytest.raises(ConfigError, match="thetas"):
            resolve_config({"experiment": "sweep_theta", "num_paths": 2,
                            "thetas": []})
        with pytest.raises(ConfigError, match=r"thetas\[1\]"):
            resolve_config({"experiment": "sweep_theta", "num_paths": 2,
                            "thetas": [0.1, "x"]})

    def test_phase_grid_forms(self):
        config = resolve_config(
            {"experiment": "fringes", "num_paths": 2, "thetas": 0.5,
             "phase_grid": 16}
        )
        assert len(config.phase_grid) == 16
        assert config.phase_grid[0] == 0.0
        assert math.isclose(config.phase_grid[1], 2.0 * math.pi / 16)
        listed = resolve_config(
            {"experiment": "fringes", "num_paths": 2, "thetas": 0.5,
             "phase_grid": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5]}
        )
        assert len(listed.phase_grid) == 8
        with pytest.raises(ConfigError, match="phase_grid"):
            resolve_config({"experiment": "fringes", "num_paths": 2,
                            "thetas": 0.5, "phase_grid": [0.0, 1.0]})

    def test_noise_forms(self):
        config = resolve_config(sweep_payload(noise="ideal"))
        assert config.noise == IDEAL_NOISE
        partial = resolve_config(sweep_payload(noise={"mixing": 0.1}))
        assert partial.noise == NoiseParams(mixing=0.1)
        with pytest.raises(ConfigError, match="noise"):
            resolve_config(sweep_payload(noise={"mixing": 0.7}))
        with pytest.raises(ConfigError, match="noise"):
            resolve_config(sweep_payload(noise=3))

    def test_fit_options(self):
        config = resolve_config(
            {"experiment": "fit", "num_paths": 2, "thetas": [0.2, 0.9, 1.7],
             "fit": {"free": [True, False, True], "multistarts": 3,
                     "weighted": False, "initial": {"splitter": 0.8}}}
        )
        assert config.fit_free == (True, False, True)
        assert config.fit_multistarts == 3
        assert config.fit_weighted is False
        assert config.fit_initial.splitter == 0.8
        with pytest.raises(ConfigError, match="fit.free"):
            resolve_config({"experiment": "fit", "num_paths": 2,
                            "thetas": [0.2, 0.9],
                            "fit": {"free": [False, False, False]}})
        with pytest.raises(ConfigError, match="fit.weighted"):
            resolve_config({"experiment": "fit", "num_paths": 2,
                            "thetas": [0.2, 0.9], "fit": {"weighted": 1}})

    def test_fit_needs_enough_observations(self):
        with pytest.raises(ConfigError, match="free parameters"):
            resolve_config({"experiment": "fit", "num_paths": 2,
                            "thetas": [0.5], "quantities": ["VC"]})

    def test_shots_and_seed_validation(self):
        exact = resolve_config(sweep_payload(shots=None))
        assert exact.shots is None
        with pytest.raises(ConfigError, match="shots"):
            resolve_config(sweep_payload(shots=0))
        with pytest.raises(ConfigError, match="shots"):
            resolve_config(sweep_payload(shots=2.5))
        with pytest.raises(ConfigError, match="seed"):
            resolve_config(sweep_payload(seed=-1))
        big = resolve_config(sweep_payload(seed=(1 << 64) - 1))
        assert big.seed == (1 << 64) - 1

    def test_command_line_overrides(self):
        payload = sweep_payload(seed=5, noise={"mixing": 0.2}, out_dir="orig")
        config = resolve_config(payload, out_dir="elsewhere", seed=9, ideal=True)
        assert config.seed == 9
        assert config.noise == IDEAL_NOISE
        assert str(config.out_dir) == "elsewhere"

    def test_mixed_backend_cap(self):
        noisy = {"experiment": "sweep_theta", "num_paths": 16, "thetas": 0.5,
                 "noise": {"mixing": 0.1}}
        with pytest.raises(ConfigError, match="capped at 8 paths"):
            resolve_config(noisy)
        # the exact fit mode never runs circuits, so 16 paths are fine there
        exact_fit = resolve_config(
            {"experiment": "fit", "num_paths": 16, "shots": None,
             "thetas": [0.2, 0.9, 1.7], "noise": {"mixing": 0.1}}
        )
        assert exact_fit.num_paths == 16
        assert resolve_config(noisy, ideal=True).noise == IDEAL_NOISE

    def test_json_syntax_error_reports_position(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{\n  "experiment": "fringes",\n  bad\n}\n')
        with pytest.raises(ConfigError, match="line 3"):
            load_config(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "absent.json")

    def test_echo_round_trips(self):
        payload = {
            "experiment": "fit", "num_paths": 4, "thetas": [0.3, 0.9, 1.5],
            "shots": 500, "seed": 17, "noise": {"mixing": 0.08},
            "quantities": ["VC", "D"],
            "fit": {"free": [True, False, True], "multistarts": 2},
        }
        config = resolve_config(payload)
        again = resolve_config(config.echo())
        assert again == config


class TestArtifacts:
    def test_sweep_exact_artifacts(self, tmp_path):
        config = resolve_config(sweep_payload(), out_dir=tmp_path / "run")
        payload = run_experiment(config)
        results = json.loads((tmp_path / "run" / "results.json").read_text())
        assert results == json.loads(json.dumps(payload))
        assert results["artifacts"]["raw"] == "raw.csv"
        assert results["artifacts"]["figures"] == ["sweep.svg", "duality.svg"]
        records = results["results"]
        assert len(records) == 9
        at_zero = {r["quantity"]: r["value"] for r in records if r["theta"] == 0.0}
        assert at_zero["VC"] == pytest.approx(1.0, abs=1e-10)
        assert at_zero["D"] == pytest.approx(0.0, abs=1e-10)
        header, rows = read_csv(tmp_path / "run" / "raw.csv")
        assert header == ["theta", "quantity", "setting", "zero_probability",
                          "counts0", "shots"]
        # 1 coherence + 4 binary + 2 detector settings per angle
        assert len(rows) == 3 * 7
        assert all(row[4] == "" for row in rows)

    def test_results_byte_determinism(self, tmp_path):
        payload = sweep_payload(shots=400, seed=21, noise={"mixing": 0.05})
        first = resolve_config(payload, out_dir=tmp_path / "a")
        second = resolve_config(payload, out_dir=tmp_path / "b")
        run_experiment(first)
        run_experiment(second)
        for name in ("results.json", "raw.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (
                tmp_path / "b" / name
            ).read_bytes()
        # figures must agree at least in their embedded data tables
        for name in ("sweep.svg", "duality.svg"):
            first_svg = (tmp_path / "a" / name).read_text()
            second_svg = (tmp_path / "b" / name).read_text()
            assert first_svg.split("<!-- data")[1] == second_svg.split("<!-- data")[1]

    def test_seed_override_changes_samples(self, tmp_path):
        payload = sweep_payload(shots=400)
        run_experiment(resolve_config(payload, out_dir=tmp_path / "a"))
        run_experiment(resolve_config(payload, out_dir=tmp_path / "b", seed=99))
        assert (tmp_path / "a" / "raw.csv").read_bytes() != (
            tmp_path / "b" / "raw.csv"
        ).read_bytes()

    def test_threads_do_not_change_results(self, tmp_path):
        payload = sweep_payload(shots=300, seed=4)
        run_experiment(resolve_config(payload, out_dir=tmp_path / "a"), threads=1)
        run_experiment(resolve_config(payload, out_dir=tmp_path / "b"), threads=4)
        assert (tmp_path / "a" / "results.json").read_bytes() == (
            tmp_path / "b" / "results.json"
        ).read_bytes()

    def test_sampled_sweep_counts_reproduce_estimates(self, tmp_path):
        payload = {
            "experiment": "sweep_theta", "num_paths": 4, "thetas": [1.1],
            "quantities": ["VC", "D"], "shots": 600, "seed": 13,
        }
        config = resolve_config(payload, out_dir=tmp_path)
        results = run_experiment(config)["results"]
        spec = InterferometerSpec(num_paths=4, theta=1.1)
        expected = estimate_D(spec, 600, 13 + (1 << 18))
        d_record = next(r for r in results if r["quantity"] == "D")
        assert d_record["value"] == expected.value
        assert d_record["std_error"] == expected.std_error
        header, rows = read_csv(tmp_path / "raw.csv")
        d_rows = [row for row in rows if row[1] == "D"]
        assert [row[2] for row in d_rows] == [f"path={k}" for k in range(4)]
        freqs = np.array([int(row[4]) for row in d_rows]) / 600.0
        radicand = 4.0 / 3.0 * (1.0 - freqs.mean())
        assert math.sqrt(max(radicand, 0.0)) == pytest.approx(
            expected.value, abs=1e-12
        )

    def test_fringes_exact(self, tmp_path):
        payload = {
            "experiment": "fringes", "num_paths": 2,
            "thetas": [0.0, 2.0943951023931953], "phase_grid": 20,
            "shots": None,
        }
        config = resolve_config(payload, out_dir=tmp_path)
        results = run_experiment(config)["results"]
        assert results[0]["visibility"] == pytest.approx(1.0, abs=1e-10)
        assert results[1]["visibility"] == pytest.approx(0.5, abs=1e-10)
        header, rows = read_csv(tmp_path / "raw.csv")
        assert header == ["theta", "phi", "zero_probability", "counts0",
                          "counts1", "shots"]
        for row in rows:
            if float(row[0]) == 0.0:
                expected = 0.5 * (1.0 + math.cos(float(row[1])))
                assert float(row[2]) == pytest.approx(expected, abs=1e-10)
            assert row[3] == "" and row[4] == ""
        svg = (tmp_path / "fringes.svg").read_text()
        assert "<!-- data" in svg and svg.rstrip().endswith("</svg>")

    def test_fringes_sampled_counts_match_recorder(self, tmp_path):
        payload = {
            "experiment": "fringes", "num_paths": 2, "thetas": [0.7],
            "phase_grid": 12, "shots": 250, "seed": 31,
        }
        config = resolve_config(payload, out_dir=tmp_path)
        run_experiment(config)
        header, rows = read_csv(tmp_path / "raw.csv")
        spec = InterferometerSpec(num_paths=2, theta=0.7)
        data = record_fringes(spec, np.array(config.phase_grid), 250, 31)
        assert [int(row[3]) for row in rows] == list(data.counts0)
        assert all(int(row[3]) + int(row[4]) == 250 for row in rows)

    def test_estimate_vp_experiment(self, tmp_path):
        payload = {
            "experiment": "estimate_vp", "num_paths": 4, "thetas": [0.9, 1.9],
            "shots": 200, "seed": 2,
        }
        config = resolve_config(payload, out_dir=tmp_path)
        results = run_experiment(config)["results"]
        assert [r["settings_used"] for r in results] == [16, 16]
        direct = estimate_VP(InterferometerSpec(num_paths=4, theta=0.9), 200, 2)
        assert results[0]["value"] == direct.value
        header, rows = read_csv(tmp_path / "raw.csv")
        assert len(rows) == 32
        assert rows[0][2] == "mask=0"

    def test_fit_exact_recovers_parameters(self, tmp_path):
        payload = {
            "experiment": "fit", "num_paths": 2,
            "thetas": {"start": 0.0, "stop": 3.45575, "count": 8},
            "quantities": ["VC", "D"], "shots": None,
            "noise": {"mixing": 0.072, "splitter": 0.767, "angle_scale": 0.873},
            "fit": {"multistarts": 4},
        }
        config = resolve_config(payload, out_dir=tmp_path)
        results = run_experiment(config)["results"]
        assert results["converged"] is True
        assert results["params"]["mixing"] == pytest.approx(0.072, abs=1e-3)
        assert results["params"]["splitter"] == pytest.approx(0.767, abs=1e-3)
        assert results["params"]["angle_scale"] == pytest.approx(0.873, abs=1e-3)
        assert results["residual_sum"] < 1e-8
        assert results["num_observations"] == 16
        header, rows = read_csv(tmp_path / "raw.csv")
        assert header == ["theta", "quantity", "value", "sigma"]
        assert len(rows) == 16
        svg = (tmp_path / "fit.svg").read_text()
        assert "<!-- data" in svg

    def test_fit_fixed_parameter_marked(self, tmp_path):
        payload = {
            "experiment": "fit", "num_paths": 2,
            "thetas": [0.3, 0.9, 1.5, 2.2, 2.9], "quantities": ["VC", "D"],
            "shots": None, "noise": {"mixing": 0.05, "angle_scale": 0.9},
            "fit": {"free": [True, False, True], "multistarts": 2},
        }
        config = resolve_config(payload, out_dir=tmp_path)
        results = run_experiment(config)["results"]
        assert results["free"]["splitter"] is False
        assert results["std_errors"]["splitter"] is None
        assert results["summary"]["splitter"].endswith("(fixed)")
        assert "(" in results["summary"]["mixing"]

    def test_oracle_check(self, tmp_path):
        payload = {
            "experiment": "oracle_check", "num_paths": 2, "thetas": [1.2],
            "num_phase_samples": 4000, "seed": 8,
        }
        config = resolve_config(payload, out_dir=tmp_path)
        payload_out = run_experiment(config)
        record = payload_out["results"][0]
        assert record["binary_protocol"] == pytest.approx(
            math.cos(0.6), abs=1e-10
        )
        assert abs(record["gap"]) < 0.03
        assert payload_out["artifacts"]["figures"] == []

    def test_unwritable_output_directory(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        config = resolve_config(sweep_payload(), out_dir=blocker / "sub")
        with pytest.raises(ConfigError, match="not writable"):
            run_experiment(config)

    def test_thread_count_validation(self, tmp_path):
        config = resolve_config(sweep_payload(), out_dir=tmp_path)
        with pytest.raises(ConfigError, match="--threads"):
            run_experiment(config, threads=0)


class TestDualityGuard:
    def test_fabricated_violation_raises(self):
        records = [
            {"theta": 0.5, "quantity": "D", "value": 1.0},
            {"theta": 0.5, "quantity": "VP", "value": 0.5},
        ]
        with pytest.raises(SimulationError, match="duality"):
            _check_sweep_duality(None, records)

    def test_fabricated_coherence_breach_raises(self):
        records = [
            {"theta": 0.5, "quantity": "D", "value": 0.9},
            {"theta": 0.5, "quantity": "VC", "value": 0.6},
        ]
        with pytest.raises(SimulationError, match="trade-off"):
            _check_sweep_duality(None, records)


class TestReport:
    def test_empty_input_rejected(self):
        with pytest.raises(ConfigError, match="no result files"):
            report([])

    def test_invalid_file_rejected(self, tmp_path):
        missing = tmp_path / "missing.json"
        with pytest.raises(ConfigError, match="cannot read"):
            report([missing])
        not_results = tmp_path / "other.json"
        not_results.write_text('{"a": 1}')
        with pytest.raises(ConfigError, match="not a results file"):
            report([not_results])

    def test_one_bad_file_blocks_all_output(self, tmp_path, capsys):
        config = resolve_config(sweep_payload(), out_dir=tmp_path / "good")
        run_experiment(config)
        with pytest.raises(ConfigError):
            report([tmp_path / "good" / "results.json", tmp_path / "bad.json"])
        assert capsys.readouterr().out == ""

    def test_exact_ideal_sweep_reports_ok(self, tmp_path):
        config = resolve_config(sweep_payload(), out_dir=tmp_path)
        run_experiment(config)
        text = report([tmp_path / "results.json"])
        assert "sweep_theta" in text
        lines = [line for line in text.splitlines() if line.endswith("ok")]
        assert len(lines) == 3

    def test_flags_fabricated_violations(self, tmp_path):
        config = resolve_config(sweep_payload(), out_dir=tmp_path)
        payload = run_experiment(config)
        for record in payload["results"]:
            if record["quantity"] == "VC":
                record["value"] = 1.2  # force the hierarchy breach
            if record["quantity"] == "VP":
                record["value"] = min(1.0, record["value"] + 0.3)
        (tmp_path / "results.json").write_text(json.dumps(payload))
        text = report([tmp_path / "results.json"])
        assert "hierarchy-violation" in text
        assert "duality-violation" in text

    def test_fit_report_uses_uncertainty_notation(self, tmp_path):
        payload = {
            "experiment": "fit", "num_paths": 2,
            "thetas": [0.3, 0.9, 1.5, 2.2, 2.9], "quantities": ["VC", "D"],
            "shots": None, "noise": {"mixing": 0.1},
            "fit": {"free": [True, False, False], "multistarts": 2},
        }
        config = resolve_config(payload, out_dir=tmp_path)
        run_experiment(config)
        text = report([tmp_path / "results.json"])
        assert "mixing" in text and "(fixed)" in text
        assert "converged" in text


class TestFormatUncertainty:
    @pytest.mark.parametrize(
        "value,sigma,expected",
        [
            (0.0716, 0.003, "0.072(3)"),
            (0.854, 0.013, "0.854(13)"),
            (1.018, 0.03, "1.02(3)"),
            (0.17, 0.02, "0.17(2)"),
            (0.858, 0.07, "0.86(7)"),
            (123.4, 12.0, "123(12)"),
            (5.6, 2.3, "6(2)"),
        ],
    )
    def test_examples(self, value, sigma, expected):
        assert format_uncertainty(value, sigma) == expected

    def test_without_uncertainty(self):
        assert format_uncertainty(0.25, None) == "0.25"
        assert format_uncertainty(0.25, 0.0) == "0.25"


class TestMain:
    def test_run_and_report_round_trip(self, tmp_path, capsys):
        path = write_config(tmp_path, "sweep.json", sweep_payload())
        assert main(["--config", str(path), "--out", str(tmp_path / "out")]) == 0
        assert main(["--report", str(tmp_path / "out" / "results.json")]) == 0
        assert "sweep_theta" in capsys.readouterr().out

    def test_seed_and_ideal_flags(self, tmp_path):
        path = write_config(
            tmp_path, "sweep.json",
            sweep_payload(shots=300, noise={"mixing": 0.2}, seed=1),
        )
        assert main(["--config", str(path), "--out", str(tmp_path / "a"),
                     "--seed", "77", "--ideal"]) == 0
        results = json.loads((tmp_path / "a" / "results.json").read_text())
        assert results["config"]["seed"] == 77
        assert results["config"]["noise"]["mixing"] == 0.0

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, "bad.json", {"experiment": "nope"})
        assert main(["--config", str(path)]) == 2
        assert "config error" in capsys.readouterr().err
        assert main([]) == 2
        assert main(["--config", str(path), "--report", "x.json"]) == 2

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        payload = {
            "experiment": "fringes", "num_paths": 2, "thetas": 0.5,
            "phase_grid": [0.1] * 8, "shots": None,
        }
        path = write_config(tmp_path, "degenerate.json", payload)
        assert main(["--config", str(path), "--out", str(tmp_path / "out")]) == 3
        assert "runtime error" in capsys.readouterr().err

    def test_console_entry_point(self, tmp_path):
        path = write_config(tmp_path, "sweep.json", sweep_payload())
        done = subprocess.run(
            [sys.executable, "-m", "npath", "--config", str(path),
             "--out", str(tmp_path / "out")],
            capture_output=True, text=True,
        )
        assert done.returncode == 0, done.stderr
        assert (tmp_path / "out" / "results.json").exists()
