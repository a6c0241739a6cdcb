"""Command-line front end for the interferometer simulation.

Experiments are described by a JSON configuration file; a handful of flags
override the seed, the output directory and the noise parameters.  Every run
writes three kinds of artifact into the output directory: ``results.json``
with the estimates and the fully resolved configuration, ``raw.csv`` with
the per-setting numbers behind them, and SVG figures carrying their plotted
data as embedded CSV comments.  Identical configuration and seed give
byte-identical ``results.json`` and ``raw.csv``.

Exit codes: 0 on success, 2 for configuration problems, 3 when the
simulation or an internal consistency check fails.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .circuit import (
    IDEAL_NOISE,
    DetectorReadout,
    InterferometerSpec,
    NoiseParams,
    ParticleReadout,
    run,
    sweep_particle_distributions,
)
from .estimator import (
    FitError,
    binary_phase_grid,
    estimate_D,
    estimate_VC,
    estimate_VP,
    fit_sine,
    phase_average_oracle,
    record_fringes,
)
from .noise import QUANTITIES, Observation, fit_noise_params, model_curves
from .statevec import SimulationError, sample_counts

__all__ = [
    "ConfigError",
    "EXPERIMENTS",
    "ExperimentConfig",
    "format_uncertainty",
    "load_config",
    "main",
    "report",
    "resolve_config",
    "run_experiment",
]

EXPERIMENTS = ("fringes", "sweep_theta", "estimate_vp", "fit", "oracle_check")

# seed layout: sweep point i starts at seed + i * stride, protocol q inside a
# point adds q * quantity stride; no estimator uses more than 2**16 settings
_POINT_STRIDE = 1 << 20
_QUANTITY_STRIDE = 1 << 18

_MAX_SEED = (1 << 64) - 1
_MAX_THETAS = 4096
_MAX_PHASES = 1 << 16
_MAX_SHOTS = 10**9
_MAX_PHASE_SAMPLES = 10**7

_DUALITY_TOL = 1e-10

_COMMON_KEYS = ("experiment", "num_paths", "thetas", "shots", "seed", "noise",
                "error_method", "out_dir")
_EXPERIMENT_KEYS = {
    "fringes": ("phase_grid",),
    "sweep_theta": ("quantities",),
    "estimate_vp": (),
    "fit": ("quantities", "fit"),
    "oracle_check": ("num_phase_samples",),
}
_NOISE_KEYS = ("mixing", "splitter", "angle_scale")
_FIT_KEYS = ("free", "initial", "weighted", "multistarts")

_ESTIMATORS = {"D": estimate_D, "VC": estimate_VC, "VP": estimate_VP}


class ConfigError(ValueError):
    """The configuration file or the command line cannot be used."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved description of one run.

    Fields that only apply to some experiments are ``None`` elsewhere.  The
    ``echo`` dictionary of an instance is embedded in ``results.json`` and
    is sufficient to repeat the run.
    """

    experiment: str
    num_paths: int
    thetas: tuple[float, ...]
    shots: int | None
    seed: int
    noise: NoiseParams
    error_method: str
    out_dir: Path
    phase_grid: tuple[float, ...] | None = None
    quantities: tuple[str, ...] | None = None
    fit_free: tuple[bool, bool, bool] | None = None
    fit_initial: NoiseParams | None = None
    fit_weighted: bool | None = None
    fit_multistarts: int | None = None
    num_phase_samples: int | None = None

    def echo(self) -> dict:
        """Resolved parameters, without the output-path plumbing."""
        data = {
            "experiment": self.experiment,
            "num_paths": self.num_paths,
            "thetas": list(self.thetas),
            "shots": self.shots,
            "seed": self.seed,
            "noise": _noise_dict(self.noise),
            "error_method": self.error_method,
        }
        if self.phase_grid is not None:
            data["phase_grid"] = list(self.phase_grid)
        if self.quantities is not None:
            data["quantities"] = list(self.quantities)
        if self.fit_free is not None:
            data["fit"] = {
                "free": list(self.fit_free),
                "initial": _noise_dict(self.fit_initial),
                "weighted": self.fit_weighted,
                "multistarts": self.fit_multistarts,
            }
        if self.num_phase_samples is not None:
            data["num_phase_samples"] = self.num_phase_samples
        return data


def _noise_dict(params: NoiseParams) -> dict:
    return {
        "mixing": params.mixing,
        "splitter": params.splitter,
        "angle_scale": params.angle_scale,
    }


def _fail(key: str, message: str):
    raise ConfigError(f"{key}: {message}")


def _as_int(value, key: str, minimum: int, maximum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        _fail(key, f"expected an integer, got {value!r}")
    if not minimum <= value <= maximum:
        _fail(key, f"must lie in [{minimum}, {maximum}], got {value}")
    return value


def _as_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(key, f"expected a number, got {value!r}")
    number = float(value)
    if not math.isfinite(number):
        _fail(key, f"must be finite, got {number!r}")
    return number


def _parse_thetas(value) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (_as_number(value, "thetas"),)
    if isinstance(value, dict):
        for key in value:
            if key not in ("start", "stop", "count"):
                _fail(f"thetas.{key}", "unknown key (use start, stop, count)")
        for key in ("start", "stop", "count"):
            if key not in value:
                _fail("thetas", f"grid object needs '{key}'")
        start = _as_number(value["start"], "thetas.start")
        stop = _as_number(value["stop"], "thetas.stop")
        count = _as_int(value["count"], "thetas.count", 1, _MAX_THETAS)
        return tuple(float(x) for x in np.linspace(start, stop, count))
    if isinstance(value, list):
        if not 1 <= len(value) <= _MAX_THETAS:
            _fail("thetas", f"need between 1 and {_MAX_THETAS} angles")
        return tuple(
            _as_number(entry, f"thetas[{index}]") for index, entry in enumerate(value)
        )
    _fail("thetas", f"expected a number, list or grid object, got {value!r}")


def _parse_phase_grid(value) -> tuple[float, ...]:
    if isinstance(value, int) and not isinstance(value, bool):
        count = _as_int(value, "phase_grid", 8, _MAX_PHASES)
        grid = np.linspace(0.0, 2.0 * math.pi, count, endpoint=False)
        return tuple(float(x) for x in grid)
    if isinstance(value, list):
        if len(value) < 8:
            _fail("phase_grid", "need at least 8 phases")
        if len(value) > _MAX_PHASES:
            _fail("phase_grid", f"at most {_MAX_PHASES} phases")
        return tuple(
            _as_number(entry, f"phase_grid[{index}]")
            for index, entry in enumerate(value)
        )
    _fail("phase_grid", f"expected a point count or a list of phases, got {value!r}")


def _parse_noise(value, key: str) -> NoiseParams:
    if value == "ideal":
        return IDEAL_NOISE
    if not isinstance(value, dict):
        _fail(key, f'expected "ideal" or an object, got {value!r}')
    values = _noise_dict(IDEAL_NOISE)
    for name, entry in value.items():
        if name not in _NOISE_KEYS:
            _fail(f"{key}.{name}", f"unknown key (use {', '.join(_NOISE_KEYS)})")
        values[name] = _as_number(entry, f"{key}.{name}")
    try:
        return NoiseParams(**values)
    except ValueError as error:
        raise ConfigError(f"{key}: {error}") from error


def _parse_quantities(value) -> tuple[str, ...]:
    if not isinstance(value, list) or not value:
        _fail("quantities", f"expected a non-empty list, got {value!r}")
    for index, entry in enumerate(value):
        if entry not in QUANTITIES:
            _fail(f"quantities[{index}]",
                  f"must be one of {', '.join(QUANTITIES)}, got {entry!r}")
    if len(set(value)) != len(value):
        _fail("quantities", "entries must be unique")
    return tuple(value)


def _parse_fit_options(value) -> tuple:
    free = (True, True, True)
    initial = IDEAL_NOISE
    weighted = True
    multistarts = 8
    if not isinstance(value, dict):
        _fail("fit", f"expected an object, got {value!r}")
    for name, entry in value.items():
        if name not in _FIT_KEYS:
            _fail(f"fit.{name}", f"unknown key (use {', '.join(_FIT_KEYS)})")
        if name == "free":
            if (not isinstance(entry, list) or len(entry) != 3
                    or any(not isinstance(flag, bool) for flag in entry)):
                _fail("fit.free", "expected a list of 3 booleans "
                                  "(mixing, splitter, angle_scale)")
            if not any(entry):
                _fail("fit.free", "at least one parameter must be free")
            free = tuple(entry)
        elif name == "initial":
            initial = _parse_noise(entry, "fit.initial")
        elif name == "weighted":
            if not isinstance(entry, bool):
                _fail("fit.weighted", f"expected a boolean, got {entry!r}")
            weighted = entry
        else:
            multistarts = _as_int(entry, "fit.multistarts", 1, 256)
    return free, initial, weighted, multistarts


def load_config(path: Path) -> dict:
    """Read a JSON configuration file, reporting syntax errors by position."""
    try:
        text = Path(path).read_text()
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error}") from error
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise ConfigError(
            f"{path}: line {error.lineno}, column {error.colno}: {error.msg}"
        ) from error
    return raw


def resolve_config(
    raw: dict,
    out_dir: str | Path | None = None,
    seed: int | None = None,
    ideal: bool = False,
) -> ExperimentConfig:
    """Validate a raw configuration mapping and apply command-line overrides.

    Unknown keys are rejected with their path; keys belonging to a different
    experiment count as unknown for the configured one.
    """
    if not isinstance(raw, dict):
        raise ConfigError(f"top level must be a JSON object, got {raw!r}")
    experiment = raw.get("experiment")
    if experiment is None:
        raise ConfigError("experiment: required key is missing")
    if experiment not in EXPERIMENTS:
        _fail("experiment", f"must be one of {', '.join(EXPERIMENTS)}, "
                            f"got {experiment!r}")
    allowed = set(_COMMON_KEYS) | set(_EXPERIMENT_KEYS[experiment])
    anywhere = set(_COMMON_KEYS)
    for keys in _EXPERIMENT_KEYS.values():
        anywhere.update(keys)
    for key in raw:
        if key in allowed:
            continue
        if key in anywhere:
            _fail(key, f"does not apply to experiment '{experiment}'")
        _fail(key, "unknown key")

    if "num_paths" not in raw:
        raise ConfigError("num_paths: required key is missing")
    num_paths = _as_int(raw["num_paths"], "num_paths", 2, 256)
    if num_paths & (num_paths - 1):
        _fail("num_paths", f"must be a power of two, got {num_paths}")
    if "thetas" not in raw:
        raise ConfigError("thetas: required key is missing")
    thetas = _parse_thetas(raw["thetas"])

    shots = raw.get("shots", 8000)
    if shots is not None:
        shots = _as_int(shots, "shots", 1, _MAX_SHOTS)
    config_seed = _as_int(raw.get("seed", 0), "seed", 0, _MAX_SEED)
    noise = _parse_noise(raw.get("noise", "ideal"), "noise")
    error_method = raw.get("error_method", "delta")
    if error_method not in ("delta", "bootstrap"):
        _fail("error_method", f"must be 'delta' or 'bootstrap', got {error_method!r}")
    config_out = raw.get("out_dir", "results")
    if not isinstance(config_out, str) or not config_out:
        _fail("out_dir", f"expected a non-empty string, got {config_out!r}")

    phase_grid = None
    quantities = None
    fit_options = (None, None, None, None)
    num_phase_samples = None
    if experiment == "fringes":
        if num_paths != 2:
            _fail("num_paths", "the fringes experiment scans a two-path "
                               "interferometer")
        phase_grid = _parse_phase_grid(raw.get("phase_grid", 16))
    elif experiment == "sweep_theta":
        quantities = _parse_quantities(raw.get("quantities", ["VC", "D"]))
    elif experiment == "fit":
        quantities = _parse_quantities(raw.get("quantities", ["VC", "D"]))
        fit_options = _parse_fit_options(raw.get("fit", {}))
        free_count = sum(fit_options[0])
        if len(thetas) * len(quantities) < free_count:
            _fail("thetas", f"{free_count} free parameters need at least "
                            f"{free_count} observations")
    elif experiment == "oracle_check":
        num_phase_samples = _as_int(
            raw.get("num_phase_samples", 100000), "num_phase_samples",
            1, _MAX_PHASE_SAMPLES,
        )
    needs_vp = experiment in ("estimate_vp", "oracle_check") or (
        quantities is not None and "VP" in quantities
    )
    if needs_vp and num_paths > 16:
        _fail("num_paths", "binary-phase enumeration is capped at 16 paths")

    if seed is not None:
        config_seed = _as_int(seed, "--seed", 0, _MAX_SEED)
    if ideal:
        noise = IDEAL_NOISE
    # mixing > 0 switches the circuit backend to density matrices, which are
    # capped at 12 qubits; only the exact fit mode avoids running circuits
    runs_circuits = not (experiment == "fit" and shots is None)
    if runs_circuits and noise.mixing > 0.0 and num_paths > 8:
        _fail("noise.mixing", "mixed-state circuit runs are capped at 8 paths; "
                              "use the exact fit mode or fewer paths")
    resolved_out = Path(out_dir) if out_dir is not None else Path(config_out)
    return ExperimentConfig(
        experiment=experiment,
        num_paths=num_paths,
        thetas=thetas,
        shots=shots,
        seed=config_seed,
        noise=noise,
        error_method=error_method,
        out_dir=resolved_out,
        phase_grid=phase_grid,
        quantities=quantities,
        fit_free=fit_options[0],
        fit_initial=fit_options[1],
        fit_weighted=fit_options[2],
        fit_multistarts=fit_options[3],
        num_phase_samples=num_phase_samples,
    )


def _jsonify(value):
    if isinstance(value, dict):
        return {str(key): _jsonify(entry) for key, entry in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(entry) for entry in value]
    if isinstance(value, np.ndarray):
        return [_jsonify(entry) for entry in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonify(payload), indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _map_points(function, count: int, threads: int) -> list:
    if threads <= 1:
        return [function(index) for index in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(function, range(count)))


def _point_spec(config: ExperimentConfig, theta: float) -> InterferometerSpec:
    return InterferometerSpec(
        num_paths=config.num_paths, theta=theta, noise=config.noise
    )


def _setting_distributions(spec: InterferometerSpec, quantity: str):
    """Setting labels and per-setting outcome distributions of one protocol.

    Uses the same setting order as the estimators, so sampling row ``i``
    with seed ``base + i`` reproduces their counts exactly.
    """
    if quantity == "D":
        labels = [f"path={k}" for k in range(spec.num_paths)]
        distributions = np.stack(
            [run(spec, DetectorReadout(path)) for path in range(spec.num_paths)]
        )
    elif quantity == "VC":
        labels = ["phases=zero"]
        distributions = run(spec, ParticleReadout(np.zeros(spec.num_paths)))[None, :]
    else:
        labels = [f"mask={m}" for m in range(1 << spec.num_paths)]
        distributions = sweep_particle_distributions(
            spec, binary_phase_grid(spec.num_paths)
        )
    return labels, distributions


def _raw_protocol_rows(spec, quantity, theta, shots, base_seed) -> list:
    labels, distributions = _setting_distributions(spec, quantity)
    rows = []
    for index, (label, row) in enumerate(zip(labels, distributions)):
        probability = float(row[0])
        if shots is None:
            rows.append((theta, quantity, label, probability, "", ""))
        else:
            counts = int(sample_counts(row, shots, base_seed + index)[0])
            rows.append((theta, quantity, label, probability, counts, shots))
    return rows


def _estimate_record(theta: float, quantity: str, estimate) -> dict:
    return {
        "theta": theta,
        "quantity": quantity,
        "value": estimate.value,
        "std_error": estimate.std_error,
        "clamped": estimate.clamped,
        "settings_used": estimate.settings_used,
        "shots_per_setting": estimate.shots_per_setting,
    }


_RAW_ESTIMATE_HEADER = ("theta", "quantity", "setting", "zero_probability",
                        "counts0", "shots")


def _run_fringes(config: ExperimentConfig, threads: int, out: Path):
    grid = np.array(config.phase_grid)
    scan_rows = np.column_stack([np.zeros_like(grid), grid])

    def point(index: int):
        theta = config.thetas[index]
        spec = _point_spec(config, theta)
        base = config.seed + index * _POINT_STRIDE
        data = record_fringes(spec, grid, config.shots, base)
        exact = sweep_particle_distributions(spec, scan_rows)[:, 0]
        return data, fit_sine(data), exact

    points = _map_points(point, len(config.thetas), threads)
    records = []
    rows = []
    panels = []
    for theta, (data, sine, exact) in zip(config.thetas, points):
        records.append({
            "theta": theta,
            "visibility": sine.visibility,
            "amplitude": sine.amplitude,
            "offset": sine.offset,
            "phase_shift": sine.phase_shift,
            "residual": sine.residual,
        })
        panels.append((theta, data.phi_grid, data.zero_rate, sine))
        for i, phi in enumerate(data.phi_grid):
            if data.shots:
                rows.append((theta, float(phi), float(exact[i]),
                             int(data.counts0[i]), int(data.counts1[i]),
                             data.shots))
            else:
                rows.append((theta, float(phi), float(exact[i]), "", "", ""))

    from . import plots

    plots.fringe_figure(panels, out / "fringes.svg")
    header = ("theta", "phi", "zero_probability", "counts0", "counts1", "shots")
    return records, header, rows, ["fringes.svg"]


def _check_sweep_duality(config: ExperimentConfig, records: list) -> None:
    """Exact ideal sweeps must satisfy the trade-off relations on the nose."""
    by_theta: dict[float, dict[str, float]] = {}
    for record in records:
        by_theta.setdefault(record["theta"], {})[record["quantity"]] = record["value"]
    for theta, values in by_theta.items():
        if "D" not in values:
            continue
        d_sq = values["D"] ** 2
        if "VP" in values:
            residual = d_sq + values["VP"] ** 2 - 1.0
            if abs(residual) > _DUALITY_TOL:
                raise SimulationError(
                    f"duality residual {residual:.3e} at theta={theta}"
                )
        if "VC" in values and d_sq + values["VC"] ** 2 > 1.0 + _DUALITY_TOL:
            raise SimulationError(
                f"coherence visibility breaches the trade-off bound at theta={theta}"
            )


def _duality_pairs(records: list) -> list:
    d_values = {
        record["theta"]: record["value"]
        for record in records
        if record["quantity"] == "D"
    }
    return [
        {**record, "d_value": d_values[record["theta"]]}
        for record in records
        if record["quantity"] in ("VC", "VP") and record["theta"] in d_values
    ]


def _run_sweep(config: ExperimentConfig, threads: int, out: Path):
    def point(index: int):
        theta = config.thetas[index]
        spec = _point_spec(config, theta)
        base = config.seed + index * _POINT_STRIDE
        records = []
        rows = []
        for q_index, quantity in enumerate(config.quantities):
            seed = base + q_index * _QUANTITY_STRIDE
            estimate = _ESTIMATORS[quantity](
                spec, config.shots, seed, config.error_method
            )
            records.append(_estimate_record(theta, quantity, estimate))
            rows.extend(
                _raw_protocol_rows(spec, quantity, theta, config.shots, seed)
            )
        return records, rows

    points = _map_points(point, len(config.thetas), threads)
    records = [record for point_records, _ in points for record in point_records]
    rows = [row for _, point_rows in points for row in point_rows]
    if config.shots is None and config.noise.is_ideal:
        _check_sweep_duality(config, records)

    from . import plots

    figures = ["sweep.svg"]
    plots.sweep_figure(records, out / "sweep.svg")
    pairs = _duality_pairs(records)
    if pairs:
        figures.append("duality.svg")
        plots.duality_figure(pairs, out / "duality.svg")
    return records, _RAW_ESTIMATE_HEADER, rows, figures


def _run_estimate_vp(config: ExperimentConfig, threads: int, out: Path):
    def point(index: int):
        theta = config.thetas[index]
        spec = _point_spec(config, theta)
        base = config.seed + index * _POINT_STRIDE
        estimate = estimate_VP(spec, config.shots, base, config.error_method)
        rows = _raw_protocol_rows(spec, "VP", theta, config.shots, base)
        return _estimate_record(theta, "VP", estimate), rows

    points = _map_points(point, len(config.thetas), threads)
    records = [record for record, _ in points]
    rows = [row for _, point_rows in points for row in point_rows]

    from . import plots

    plots.sweep_figure(records, out / "estimate_vp.svg")
    return records, _RAW_ESTIMATE_HEADER, rows, ["estimate_vp.svg"]


def _run_fit(config: ExperimentConfig, threads: int, out: Path):
    def point(index: int):
        theta = config.thetas[index]
        base = config.seed + index * _POINT_STRIDE
        observations = []
        for q_index, quantity in enumerate(config.quantities):
            if config.shots is None:
                value = float(
                    model_curves(config.num_paths, [theta], config.noise, quantity)[0]
                )
                observations.append(Observation(theta, quantity, value, 1.0))
            else:
                estimate = _ESTIMATORS[quantity](
                    _point_spec(config, theta), config.shots,
                    base + q_index * _QUANTITY_STRIDE, config.error_method,
                )
                # a run of all-zero outcomes would report zero uncertainty
                sigma = max(estimate.std_error, 1.0 / config.shots)
                observations.append(
                    Observation(theta, quantity, estimate.value, sigma)
                )
        return observations

    points = _map_points(point, len(config.thetas), threads)
    observations = [obs for point_obs in points for obs in point_obs]
    fit = fit_noise_params(
        observations,
        config.num_paths,
        free=config.fit_free,
        initial=config.fit_initial,
        weighted=config.fit_weighted,
        multistarts=config.fit_multistarts,
        seed=config.seed,
    )
    names = ("mixing", "splitter", "angle_scale")
    values = fit.params.as_tuple()
    results = {
        "params": _noise_dict(fit.params),
        "std_errors": dict(zip(names, fit.std_errors)),
        "free": dict(zip(names, fit.free)),
        "converged": fit.converged,
        "residual_sum": fit.residual_sum,
        "num_observations": len(observations),
        "summary": {
            name: format_uncertainty(value, error) if flag else f"{value} (fixed)"
            for name, value, error, flag in zip(
                names, values, fit.std_errors, fit.free
            )
        },
    }
    rows = [
        (obs.theta, obs.quantity, obs.value, obs.sigma) for obs in observations
    ]

    from . import plots

    plots.fit_figure(observations, fit.params, config.num_paths, out / "fit.svg")
    return results, ("theta", "quantity", "value", "sigma"), rows, ["fit.svg"]


def _run_oracle_check(config: ExperimentConfig, threads: int, out: Path):
    def point(index: int):
        theta = config.thetas[index]
        spec = _point_spec(config, theta)
        base = config.seed + index * _POINT_STRIDE
        oracle = phase_average_oracle(spec, config.num_phase_samples, base)
        binary = estimate_VP(spec).value
        model = float(model_curves(config.num_paths, [theta], config.noise, "VP")[0])
        return {
            "theta": theta,
            "oracle": oracle,
            "binary_protocol": binary,
            "model": model,
            "gap": binary - oracle,
        }

    records = _map_points(point, len(config.thetas), threads)
    rows = [
        (r["theta"], r["oracle"], r["binary_protocol"], r["model"], r["gap"])
        for r in records
    ]
    header = ("theta", "oracle", "binary_protocol", "model", "gap")
    return records, header, rows, []


_RUNNERS = {
    "fringes": _run_fringes,
    "sweep_theta": _run_sweep,
    "estimate_vp": _run_estimate_vp,
    "fit": _run_fit,
    "oracle_check": _run_oracle_check,
}


def run_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """Run one configured experiment and write its artifacts.

    Returns the ``results.json`` payload.  Raises ``ConfigError`` for an
    unusable output directory and lets simulation errors propagate.
    """
    if threads < 1:
        raise ConfigError(f"--threads: must be at least 1, got {threads}")
    out = config.out_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as error:
        raise ConfigError(f"output directory {out} is not writable: {error}")
    results, header, rows, figures = _RUNNERS[config.experiment](
        config, threads, out
    )
    payload = {
        "config": config.echo(),
        "results": results,
        "artifacts": {"raw": "raw.csv", "figures": figures},
    }
    _write_json(out / "results.json", payload)
    _write_csv(out / "raw.csv", header, rows)
    return payload


def format_uncertainty(value: float, sigma: float | None) -> str:
    """Concise one-sigma notation: value 0.0716, sigma 0.003 reads 0.072(3).

    The uncertainty keeps one significant digit, or two when the leading
    digit would be 1; the value is rounded to the same decimal place.
    """
    if sigma is None or not math.isfinite(sigma) or sigma <= 0.0:
        return f"{value:.6g}"
    exponent = math.floor(math.log10(sigma))
    if round(sigma / 10.0**exponent) >= 10:
        exponent += 1
    if sigma / 10.0**exponent < 1.95:
        exponent -= 1
    digits = round(sigma / 10.0**exponent)
    decimals = max(-exponent, 0)
    if exponent > 0:
        scale = 10.0**exponent
        return f"{round(value / scale) * scale:.0f}({digits * scale:.0f})"
    return f"{value:.{decimals}f}({digits})"


def _load_results(path: Path) -> dict:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as error:
        raise ConfigError(f"cannot read {path}: {error}") from error
    except json.JSONDecodeError as error:
        raise ConfigError(
            f"{path}: line {error.lineno}, column {error.colno}: {error.msg}"
        ) from error
    if (
        not isinstance(payload, dict)
        or not isinstance(payload.get("config"), dict)
        or "results" not in payload
        or payload["config"].get("experiment") not in EXPERIMENTS
    ):
        raise ConfigError(f"{path}: not a results file written by this tool")
    return payload


def _report_estimates(payload: dict, lines: list) -> None:
    records = payload["results"]
    exact = payload["config"].get("shots") is None
    noise = payload["config"]["noise"]
    # noise moves the (D**2, V**2) locus inside the unit circle, so only the
    # ideal parameters promise saturation; the bound itself holds always
    ideal = (
        noise["mixing"] == 0.0
        and noise["angle_scale"] == 1.0
        and abs(noise["splitter"] - 2.0**-0.5) < 1e-9
    )
    by_theta: dict[float, dict[str, tuple[float, float]]] = {}
    for record in records:
        by_theta.setdefault(record["theta"], {})[record["quantity"]] = (
            record["value"], record["std_error"],
        )
    lines.append(f"  {'theta':>10}  {'D':>10}  {'V_C':>10}  {'V_P':>10}"
                 f"  {'residual':>10}  flags")
    for theta in sorted(by_theta):
        values = by_theta[theta]
        cells = []
        for quantity in ("D", "VC", "VP"):
            cells.append(
                f"{values[quantity][0]:10.6f}" if quantity in values
                else f"{'-':>10}"
            )
        residual_text = f"{'-':>10}"
        flags = []
        if "D" in values and "VP" in values:
            (d, d_std), (vp, vp_std) = values["D"], values["VP"]
            residual = d * d + vp * vp - 1.0
            residual_text = f"{residual:10.2e}"
            spread = 2.0 * math.hypot(d * d_std, vp * vp_std)
            tolerance = _DUALITY_TOL if exact else max(4.0 * spread, _DUALITY_TOL)
            if residual > tolerance:
                flags.append("duality-violation")
            elif ideal and abs(residual) > tolerance:
                flags.append("duality-deviation")
        if "VC" in values and "VP" in values:
            (vc, vc_std), (vp, vp_std) = values["VC"], values["VP"]
            slack = _DUALITY_TOL if exact else max(
                4.0 * math.hypot(vc_std, vp_std), _DUALITY_TOL
            )
            if vc > vp + slack:
                flags.append("hierarchy-violation")
        lines.append(
            f"  {theta:10.6f}  {cells[0]}  {cells[1]}  {cells[2]}"
            f"  {residual_text}  {' '.join(flags) if flags else 'ok'}"
        )


def _report_fringes(payload: dict, lines: list) -> None:
    lines.append(f"  {'theta':>10}  {'visibility':>10}  {'offset':>10}"
                 f"  {'residual':>10}")
    for record in payload["results"]:
        lines.append(
            f"  {record['theta']:10.6f}  {record['visibility']:10.6f}"
            f"  {record['offset']:10.6f}  {record['residual']:10.2e}"
        )


def _report_fit(payload: dict, lines: list) -> None:
    results = payload["results"]
    for name in ("mixing", "splitter", "angle_scale"):
        lines.append(f"  {name:>12}: {results['summary'][name]}")
    lines.append(f"  {'residual':>12}: {results['residual_sum']:.6g}")
    lines.append(f"  {'converged':>12}: {results['converged']}")


def _report_oracle(payload: dict, lines: list) -> None:
    lines.append(f"  {'theta':>10}  {'oracle':>10}  {'binary':>10}  {'gap':>10}")
    for record in payload["results"]:
        lines.append(
            f"  {record['theta']:10.6f}  {record['oracle']:10.6f}"
            f"  {record['binary_protocol']:10.6f}  {record['gap']:10.2e}"
        )


def report(paths) -> str:
    """Summary table for one or more ``results.json`` files.

    All files are validated before any output is produced, so a bad file
    yields an error instead of a partial table.
    """
    paths = list(paths)
    if not paths:
        raise ConfigError("no result files to report")
    payloads = [_load_results(path) for path in paths]
    lines = []
    for path, payload in zip(paths, payloads):
        experiment = payload["config"]["experiment"]
        noise = payload["config"]["noise"]
        lines.append(f"{path} [{experiment}, N={payload['config']['num_paths']}, "
                     f"mixing={noise['mixing']}, splitter={noise['splitter']:.6g}, "
                     f"angle_scale={noise['angle_scale']}]")
        if experiment in ("sweep_theta", "estimate_vp"):
            _report_estimates(payload, lines)
        elif experiment == "fringes":
            _report_fringes(payload, lines)
        elif experiment == "fit":
            _report_fit(payload, lines)
        else:
            _report_oracle(payload, lines)
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="npath-sim",
        description="Simulate wave-particle duality tests in multi-path "
                    "interferometers.",
    )
    parser.add_argument("--config", metavar="PATH",
                        help="JSON experiment configuration")
    parser.add_argument("--out", metavar="DIR",
                        help="output directory (overrides the config)")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="random seed (overrides the config)")
    parser.add_argument("--threads", type=int, default=1, metavar="K",
                        help="worker threads across sweep points (default 1)")
    parser.add_argument("--ideal", action="store_true",
                        help="force the ideal noise parameters")
    parser.add_argument("--report", nargs="+", metavar="RESULTS",
                        help="summarize existing results.json files and exit")
    args = parser.parse_args(argv)
    try:
        if args.report is not None:
            if args.config is not None:
                raise ConfigError("--report cannot be combined with --config")
            print(report([Path(p) for p in args.report]))
            return 0
        if args.config is None:
            raise ConfigError("either --config or --report is required")
        raw = load_config(Path(args.config))
        config = resolve_config(
            raw, out_dir=args.out, seed=args.seed, ideal=args.ideal
        )
        run_experiment(config, threads=args.threads)
        return 0
    except ConfigError as error:
        print(f"config error: {error}", file=sys.stderr)
        return 2
    except (SimulationError, FitError) as error:
        print(f"runtime error: {error}", file=sys.stderr)
        return 3
