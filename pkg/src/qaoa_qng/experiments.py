"""
Benchmark experiments: manifests, seeded trial sweeps and result files.

A manifest describes a grid of problem sizes, depths and optimizer methods.
Every (N, P, trial) cell draws its initial angles from a seed derived from
the master seed, so all methods start from the same point for a given trial
index and any row can be re-run on its own.
"""

import dataclasses
import json
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from qaoa_qng.backends import GRADIENT_ANALYTIC, GRADIENT_FD, make_backend
from qaoa_qng.noise import load_calibration
from qaoa_qng.optimizers import METHODS, OptimizerConfig, optimize
from qaoa_qng.rydberg import AnalogSettings
from qaoa_qng.tfim import GroundState, TfimSpec, exact_diagonalize
from qaoa_qng.util import MAX_DENSITY_QUBITS, MAX_STATE_QUBITS

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

PROTOCOL_FIDELITY = "fidelity-vs-depth"
PROTOCOL_CONVERGENCE = "convergence"
PROTOCOL_ACCURACY = "accuracy-distribution"
PROTOCOLS = (PROTOCOL_FIDELITY, PROTOCOL_CONVERGENCE, PROTOCOL_ACCURACY)

DEPTH_RULES = ("explicit", "half", "half_plus_one")
BACKEND_ALIASES = {"digital-noise": "digital"}
MAX_QUBITS = {"noiseless": MAX_STATE_QUBITS, "digital": MAX_DENSITY_QUBITS, "analog": MAX_DENSITY_QUBITS}

NOISELESS_THRESHOLD = 1e-9
NOISY_THRESHOLD = 1e-6
NOISELESS_EPS_STOP = 1e-12
NOISY_EPS_STOP = 1e-8

# Frozen column order of every result table.
RESULT_COLUMNS = (
    "experiment",
    "protocol",
    "backend",
    "n_qubits",
    "depth",
    "method",
    "trial",
    "seed",
    "steps",
    "stop_reason",
    "final_energy",
    "exact_energy",
    "best_accuracy",
    "success",
    "fidelity",
    "wall_time",
    "error",
)


def _version() -> str:
    from qaoa_qng import __version__

    return __version__


@dataclass(frozen=True)
class ExperimentSpec:
    """Parsed experiment manifest.

    ``optimizers`` maps each compared method to its settings. Thresholds and
    stopping tolerances not given in the manifest default to the noiseless
    values (1e-9, 1e-12) or the noisy ones (1e-6, 1e-8) depending on the
    backend.
    """

    protocol: str
    backend: str = "noiseless"
    n_range: Tuple[int, ...] = (4,)
    depth_rule: str = "half"
    depths: Tuple[int, ...] = ()
    extra_layers: int = 2
    trials: int = 50
    optimizers: Dict[str, OptimizerConfig] = field(default_factory=dict)
    success_threshold: Optional[float] = None
    master_seed: int = 0
    init_range: Tuple[float, float] = (-math.pi, math.pi)
    h: float = 0.5
    j: float = 1.0
    calibration: Optional[str] = None
    analog: AnalogSettings = field(default_factory=AnalogSettings)
    name: str = "experiment"

    def __post_init__(self):
        backend = BACKEND_ALIASES.get(self.backend, self.backend)
        object.__setattr__(self, "backend", backend)
        object.__setattr__(self, "n_range", tuple(int(n) for n in self.n_range))
        object.__setattr__(self, "depths", tuple(int(p) for p in self.depths))
        object.__setattr__(self, "init_range", tuple(float(x) for x in self.init_range))
        if not self.optimizers:
            methods = METHODS if self.protocol == PROTOCOL_CONVERGENCE else ("qng-full",)
            object.__setattr__(
                self, "optimizers", {m: self._default_optimizer(m, {}) for m in methods}
            )
        validate_spec(self)

    @property
    def is_noisy(self) -> bool:
        if self.backend == "analog":
            return not self.analog.noise.is_noiseless
        return self.backend != "noiseless"

    @property
    def methods(self) -> Tuple[str, ...]:
        return tuple(m for m in METHODS if m in self.optimizers)

    @property
    def threshold(self) -> float:
        if self.success_threshold is not None:
            return float(self.success_threshold)
        return NOISY_THRESHOLD if self.is_noisy else NOISELESS_THRESHOLD

    def _default_optimizer(self, method: str, overrides: dict) -> OptimizerConfig:
        data = {
            "eps_stop": NOISY_EPS_STOP if self.is_noisy else NOISELESS_EPS_STOP,
            "gradient_mode": GRADIENT_ANALYTIC if self.backend == "noiseless" else GRADIENT_FD,
        }
        data.update(overrides)
        data["method"] = method
        return OptimizerConfig.from_dict(data)

    def depths_for(self, n_qubits: int) -> Tuple[int, ...]:
        """Depths run for an ``n_qubits`` problem.

        The fidelity protocol sweeps ``P = 1 .. base + extra_layers`` where
        ``base`` is the rule's depth; explicit depths are used as given.
        """
        if self.depth_rule == "explicit":
            return self.depths
        base = n_qubits // 2 if self.depth_rule == "half" else n_qubits // 2 + 1
        if self.protocol == PROTOCOL_FIDELITY:
            return tuple(range(1, base + self.extra_layers + 1))
        return (base,)

    def tfim(self, n_qubits: int) -> TfimSpec:
        return TfimSpec(n_qubits, coupling=self.j, field=self.h)

    def to_dict(self) -> dict:
        """Manifest form, the inverse of :func:`spec_from_dict`."""
        data = {
            "name": self.name,
            "protocol": self.protocol,
            "backend": self.backend,
            "n_range": list(self.n_range),
            "depth_rule": self.depth_rule,
            "depths": list(self.depths),
            "extra_layers": self.extra_layers,
            "trials": self.trials,
            "success_threshold": self.threshold,
            "master_seed": self.master_seed,
            "init_range": list(self.init_range),
            "h": self.h,
            "j": self.j,
            "optimizer": {
                m: {k: v for k, v in cfg.to_dict().items() if k != "method"}
                for m, cfg in self.optimizers.items()
            },
        }
        if self.backend == "digital":
            data["digital"] = {"calibration": self.calibration or ""}
        if self.backend == "analog":
            data["analog"] = {k: v for k, v in self.analog.to_dict().items() if v is not None}
        return data


def validate_spec(spec: ExperimentSpec) -> ExperimentSpec:
    """Check a spec before anything runs; raise on the first problem."""
    if spec.protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol '{spec.protocol}', expected one of {PROTOCOLS}")
    if spec.backend not in MAX_QUBITS:
        raise KeyError(f"unknown backend '{spec.backend}', expected one of {tuple(MAX_QUBITS)}")
    if spec.depth_rule not in DEPTH_RULES:
        raise ValueError(f"unknown depth rule '{spec.depth_rule}', expected one of {DEPTH_RULES}")
    if spec.depth_rule == "explicit" and (not spec.depths or min(spec.depths) < 1):
        raise ValueError("the explicit depth rule needs a list of positive depths")
    if spec.extra_layers < 0:
        raise ValueError(f"extra_layers must be non-negative, got {spec.extra_layers}")
    if spec.trials < 1:
        raise ValueError(f"trials must be at least 1, got {spec.trials}")
    if not spec.n_range:
        raise ValueError("n_range is empty")
    low = 3 if spec.backend == "analog" and spec.analog.layout == "ring" else 2
    high = MAX_QUBITS[spec.backend]
    for n in spec.n_range:
        if not low <= n <= high:
            raise ValueError(f"N={n} outside [{low}, {high}] for the {spec.backend} backend")
    unknown = set(spec.optimizers) - set(METHODS)
    if unknown:
        raise KeyError(f"unknown optimizer methods {sorted(unknown)}")
    if spec.protocol == PROTOCOL_CONVERGENCE and set(spec.methods) != set(METHODS):
        raise ValueError(f"the convergence protocol compares all of {METHODS}")
    lo, hi = spec.init_range
    if not lo < hi:
        raise ValueError(f"init_range must be increasing, got {spec.init_range}")
    if spec.backend != "noiseless":
        for m, cfg in spec.optimizers.items():
            if cfg.gradient_mode == GRADIENT_ANALYTIC:
                raise ValueError(f"optimizer '{m}': the {spec.backend} backend needs '{GRADIENT_FD}'")
    return spec


def spec_from_dict(data: dict, name: str = "experiment") -> ExperimentSpec:
    """Build an :class:`ExperimentSpec` from parsed manifest data."""
    data = dict(data)
    optimizer = data.pop("optimizer", {})
    digital = data.pop("digital", {})
    analog = data.pop("analog", {})
    name = data.pop("name", name)
    known = {f.name for f in dataclasses.fields(ExperimentSpec)} - {
        "optimizers",
        "calibration",
        "analog",
        "name",
    }
    unknown = set(data) - known
    if unknown:
        raise KeyError(f"unknown manifest keys {sorted(unknown)}")
    spec = ExperimentSpec(
        name=name,
        calibration=digital.get("calibration") or None,
        analog=AnalogSettings.from_dict(analog),
        **data,
    )
    if optimizer:
        configs = {m: spec._default_optimizer(m, dict(o)) for m, o in optimizer.items()}
        spec = dataclasses.replace(spec, optimizers=configs)
    return spec


def load_manifest(path: Union[str, Path]) -> ExperimentSpec:
    """Read a TOML manifest; the experiment is named after the file."""
    path = Path(path)
    with path.open("rb") as f:
        data = tomllib.load(f)
    return spec_from_dict(data, name=path.stem)


# -- trials


def trial_seed(master_seed: int, n_qubits: int, depth: int, trial: int) -> int:
    """Seed of one (N, P, trial) cell; independent of the method."""
    sequence = np.random.SeedSequence([master_seed, n_qubits, depth, trial])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def initial_theta(seed: int, depth: int, init_range=(-math.pi, math.pi)) -> np.ndarray:
    lo, hi = init_range
    return np.random.default_rng(seed).uniform(lo, hi, 2 * depth)


@dataclass
class ResultRecord:
    """One row of a result table, fields in :data:`RESULT_COLUMNS` order."""

    experiment: str
    protocol: str
    backend: str
    n_qubits: int
    depth: int
    method: str
    trial: int
    seed: int
    steps: Optional[int] = None
    stop_reason: str = ""
    final_energy: float = math.nan
    exact_energy: float = math.nan
    best_accuracy: float = math.nan
    success: bool = False
    fidelity: float = math.nan
    wall_time: Optional[float] = None
    error: str = ""

    @property
    def key(self) -> Tuple[int, int, int, int]:
        return (self.n_qubits, self.depth, METHODS.index(self.method), self.trial)

    def matches(self, other: "ResultRecord", rtol: float = 0.0) -> bool:
        """Field-wise equality ignoring wall time; NaN equals NaN."""
        for name in RESULT_COLUMNS:
            if name == "wall_time":
                continue
            a, b = getattr(self, name), getattr(other, name)
            if isinstance(a, float) and isinstance(b, float):
                if math.isnan(a) and math.isnan(b):
                    continue
                if not math.isclose(a, b, rel_tol=rtol, abs_tol=0.0):
                    return False
            elif a != b:
                return False
        return True


@dataclass(frozen=True)
class TrialTask:
    spec: ExperimentSpec
    n_qubits: int
    depth: int
    method: str
    trial: int
    seed: int
    timing: bool = False


@lru_cache(maxsize=16)
def _ground_state(tfim: TfimSpec) -> GroundState:
    return exact_diagonalize(tfim)


@lru_cache(maxsize=4)
def _calibration(path: Optional[str]):
    return load_calibration(path)


def run_trial(task: TrialTask) -> ResultRecord:
    """Optimize one cell; failures are logged and recorded in ``error``."""
    spec = task.spec
    record = ResultRecord(
        experiment=spec.name,
        protocol=spec.protocol,
        backend=spec.backend,
        n_qubits=task.n_qubits,
        depth=task.depth,
        method=task.method,
        trial=task.trial,
        seed=task.seed,
    )
    start = time.perf_counter()
    try:
        tfim = spec.tfim(task.n_qubits)
        ground = _ground_state(tfim)
        backend = make_backend(
            spec.backend,
            tfim,
            calibration=_calibration(spec.calibration) if spec.backend == "digital" else None,
            analog=spec.analog,
            seed=task.seed,
        )
        result = optimize(
            initial_theta(task.seed, task.depth, spec.init_range),
            tfim,
            spec.optimizers[task.method],
            backend,
            exact_energy=ground.energy,
            threshold=spec.threshold,
        )
        record.steps = result.steps_taken
        record.stop_reason = result.stop_reason
        record.final_energy = result.final_energy
        record.exact_energy = result.exact_energy
        record.best_accuracy = result.best_accuracy
        record.success = result.success
        record.fidelity = backend.fidelity(result.best_theta, ground)
    except Exception as exc:
        logger.error(
            "N=%d P=%d %s trial %d failed: %s",
            task.n_qubits,
            task.depth,
            task.method,
            task.trial,
            exc,
        )
        record.error = f"{type(exc).__name__}: {exc}"
    if task.timing:
        record.wall_time = time.perf_counter() - start
    logger.info(
        "N=%d P=%d %s trial %d: steps=%s accuracy=%.3g",
        task.n_qubits,
        task.depth,
        task.method,
        task.trial,
        record.steps,
        record.best_accuracy,
    )
    return record


def trial_tasks(spec: ExperimentSpec, timing: bool = False) -> List[TrialTask]:
    tasks = []
    for n in spec.n_range:
        for p in spec.depths_for(n):
            for trial in range(spec.trials):
                seed = trial_seed(spec.master_seed, n, p, trial)
                for method in spec.methods:
                    tasks.append(TrialTask(spec, n, p, method, trial, seed, timing))
    return tasks


def _execute(tasks: List[TrialTask], threads: int) -> List[ResultRecord]:
    if threads < 1:
        raise ValueError(f"threads must be at least 1, got {threads}")
    if threads == 1 or len(tasks) < 2:
        records = [run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(run_trial, tasks))
    return sorted(records, key=lambda r: r.key)


@dataclass
class BenchmarkResult:
    """Records of a run plus the experiment that produced them."""

    spec: ExperimentSpec
    records: List[ResultRecord]

    def table(self) -> pd.DataFrame:
        rows = [dataclasses.astuple(r) for r in self.records]
        return pd.DataFrame(rows, columns=list(RESULT_COLUMNS))

    def summary(self) -> pd.DataFrame:
        """Protocol-specific summary through the ``qng`` DataFrame
        accessor."""
        table = self.table()
        if self.spec.protocol == PROTOCOL_FIDELITY:
            return table.qng.fidelity_summary()
        if self.spec.protocol == PROTOCOL_CONVERGENCE:
            return table.qng.convergence_summary(self.spec.threshold)
        return table.qng.accuracy_summary()


def _run_protocol(
    spec: ExperimentSpec, protocol: str, threads: int, timing: bool
) -> BenchmarkResult:
    if spec.protocol != protocol:
        raise ValueError(f"manifest protocol is '{spec.protocol}', expected '{protocol}'")
    tasks = trial_tasks(spec, timing)
    logger.info("running %s: %d trials on %d worker(s)", spec.name, len(tasks), threads)
    return BenchmarkResult(spec, _execute(tasks, threads))


def run_fidelity_vs_depth(spec: ExperimentSpec, threads: int = 1, timing: bool = False) -> BenchmarkResult:
    """Best fidelity with the ground state per trial, for every depth up to
    the rule's depth plus ``extra_layers``."""
    return _run_protocol(spec, PROTOCOL_FIDELITY, threads, timing)


def run_convergence_benchmark(
    spec: ExperimentSpec, threads: int = 1, timing: bool = False
) -> BenchmarkResult:
    """Steps to convergence and success rate of every method."""
    return _run_protocol(spec, PROTOCOL_CONVERGENCE, threads, timing)


def run_accuracy_distribution(
    spec: ExperimentSpec, threads: int = 1, timing: bool = False
) -> BenchmarkResult:
    """Best accuracy of every trial, for distribution plots."""
    return _run_protocol(spec, PROTOCOL_ACCURACY, threads, timing)


_RUNNERS = {
    PROTOCOL_FIDELITY: run_fidelity_vs_depth,
    PROTOCOL_CONVERGENCE: run_convergence_benchmark,
    PROTOCOL_ACCURACY: run_accuracy_distribution,
}


def run_experiment(spec: ExperimentSpec, threads: int = 1, timing: bool = False) -> BenchmarkResult:
    return _RUNNERS[spec.protocol](spec, threads, timing)


# -- result files


def _json_value(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, (np.integer, np.floating, np.bool_)):
        return value.item()
    return value


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    tmp.replace(path)


def emit(result: BenchmarkResult, fmt: str, path: Union[str, Path]) -> Path:
    """Write the result table as CSV, or as JSON with the manifest, master
    seed and package version embedded."""
    if not result.records:
        raise ValueError("no records to emit")
    path = Path(path)
    if fmt == "csv":
        _atomic_write(path, result.table().to_csv(index=False))
    elif fmt == "json":
        payload = {
            "version": _version(),
            "master_seed": result.spec.master_seed,
            "manifest": result.spec.to_dict(),
            "columns": list(RESULT_COLUMNS),
            "records": [
                {k: _json_value(v) for k, v in dataclasses.asdict(r).items()}
                for r in result.records
            ],
        }
        _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        raise ValueError(f"unknown format '{fmt}', expected 'csv' or 'json'")
    logger.info("wrote %d records to %s", len(result.records), path)
    return path


_FLOAT_FIELDS = ("final_energy", "exact_energy", "best_accuracy", "fidelity")


def load_results(path: Union[str, Path]) -> BenchmarkResult:
    """Read a JSON result file written by :func:`emit`."""
    payload = json.loads(Path(path).read_text())
    spec = spec_from_dict(payload["manifest"])
    records = []
    for row in payload["records"]:
        row = dict(row)
        for name in _FLOAT_FIELDS:
            row[name] = math.nan if row[name] is None else float(row[name])
        records.append(ResultRecord(**row))
    return BenchmarkResult(spec, records)


@dataclass
class ReplayReport:
    n_records: int
    mismatches: List[Tuple[ResultRecord, ResultRecord]]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay(path: Union[str, Path], threads: int = 1) -> ReplayReport:
    """Re-run every stored trial from its seed and compare with the file."""
    stored = load_results(path)
    tasks = [
        TrialTask(stored.spec, r.n_qubits, r.depth, r.method, r.trial, r.seed)
        for r in stored.records
    ]
    rerun = {r.key: r for r in _execute(tasks, threads)}
    mismatches = [(r, rerun[r.key]) for r in stored.records if not r.matches(rerun[r.key])]
    for old, new in mismatches:
        logger.warning("replay mismatch at %s: stored %s, got %s", old.key, old, new)
    return ReplayReport(len(stored.records), mismatches)
