"""Seeded data-generating processes and Monte Carlo experiment drivers.

Every generator iterates ``X_i = mu(X_{i-1}) + eps_i`` from ``X_0 = 0``,
discards a burn-in and returns ``n`` values.  Replication ``r`` of an
experiment with master seed ``s`` draws from ``SeedSequence([s, r])`` for
the series and ``SeedSequence([s, r, 1])`` for the bootstrap, so reports
do not depend on how replications are scheduled.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Callable

import numpy as np

from .detector import accuracy_metrics, detect_change_points
from .errors import ConfigError, SimulationError, StateCPError
from .estimators import TimeSeries, cv_bandwidth_mu, cv_bandwidth_sigma
from .kernels import default_kernel
from .statetest import BandwidthPair, bootstrap_critical, make_grid, sup_statistic

MODEL_IDS = ("A", "B", "C", "D", "E", "F1", "F2", "Case1", "Case2", "TAR", "TAR-est")
EXPLOSION = 1e12
CALIBRATION_LENGTH = 100_000
CALIBRATION_SEED = 20_200_401


def _logistic(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x)) if x >= 0 else math.exp(x) / (1.0 + math.exp(x))


@dataclass(frozen=True)
class ModelSpec:
    """A data-generating process and its sampling settings.

    ``kappa`` is the Model A coefficient or the TAR upper-regime slope;
    ``delta`` the jump size of F1/F2.  ``sigma_scale`` multiplies the
    noise (a tiny value gives a near-deterministic path).
    """

    id: str
    n: int = 500
    burn_in: int = 1000
    seed: int | tuple[int, ...] = 0
    kappa: float | None = None
    delta: float | None = None
    sigma_scale: float = 1.0

    def __post_init__(self):
        if self.id not in MODEL_IDS:
            raise ConfigError(f"unknown model {self.id!r}; choose from {', '.join(MODEL_IDS)}")
        if self.burn_in < 500:
            raise ConfigError("burn-in must be at least 500")
        if self.n < 2:
            raise ConfigError("need n >= 2")
        if self.delta is not None and self.delta < 0:
            raise ConfigError("jump size delta must be nonnegative")
        if self.id == "A" and self.kappa is None:
            object.__setattr__(self, "kappa", 0.2)
        if self.id == "TAR" and self.kappa is None:
            object.__setattr__(self, "kappa", 0.5)
        if self.id in ("F1", "F2") and self.delta is None:
            object.__setattr__(self, "delta", 0.0)

    @property
    def label(self) -> str:
        if self.id in ("A", "TAR"):
            return f"{self.id}({self.kappa:g})"
        if self.id in ("F1", "F2"):
            return f"{self.id}({self.delta:g})"
        return self.id

    def mean_function(self) -> Callable[[float], float]:
        return _MU[self.id](self)

    def scale_function(self) -> Callable[[float], float]:
        return _SIGMA[self.id]

    def change_points(self) -> tuple[float, ...]:
        """True jump locations of the mean function."""
        if self.id == "Case1":
            return (0.0,)
        if self.id == "Case2":
            return (-0.3, 0.0)
        if self.id in ("F1", "F2"):
            return (0.0,) if self.delta > 0 else ()
        if self.id == "TAR-est":
            return (0.25,)
        if self.id == "TAR":
            return (0.25,) if self.kappa != 0.5 else ()
        return ()


def _mu_a(s):
    k = s.kappa
    return lambda x: k * x**3 if abs(x) <= 1 else (k if x > 1 else -k)


def _mu_tar(s):
    k = s.kappa
    return lambda x: 0.5 * (x + 1) if x < 0.25 else k * (x + 1)


def _case2(x):
    if x < -0.3:
        return 0.8 * x + 0.8
    if x < 0.0:
        return -1.0
    return -0.2 * x + 0.5


_MU = {
    "A": _mu_a,
    "B": lambda s: lambda x: 0.2 * math.exp(-0.5 * x * x),
    "C": lambda s: lambda x: 0.3 * _logistic(x),
    "D": lambda s: lambda x: 0.8 * math.sin(x),
    "E": lambda s: lambda x: 0.5 * math.cos(x),
    "F1": lambda s: lambda x: 0.5 * math.exp(-x * x) - (s.delta if x >= 0 else 0.0),
    "F2": lambda s: lambda x: 0.3 - (s.delta if x < 0 else 0.0),
    "Case1": lambda s: lambda x: 0.7 * math.exp(-x * x) - (1.6 if x >= 0 else 0.0),
    "Case2": lambda s: _case2,
    "TAR": _mu_tar,
    "TAR-est": lambda s: lambda x: (2 / 3) * (x + 1) if x < 0.25 else -(2 / 3) * (x + 1),
}

_SIGMA = {
    "A": lambda x: 1.5 * math.exp(-0.5 * x * x),
    "B": lambda x: 1.5 * _logistic(x),
    "C": lambda x: 0.7 * (1 + x * x) if abs(x) <= 1 else 1.4,
    "D": lambda x: 1.0,
    "E": lambda x: 1.0,  # unused: Model E has its own noise
    "F1": lambda x: math.exp(-0.5 * x * x),
    "F2": _logistic,
    "Case1": lambda x: math.exp(-0.5 * x * x),
    "Case2": _logistic,
    "TAR": lambda x: 0.75,
    "TAR-est": lambda x: 0.75,
}


def simulate(spec: ModelSpec) -> TimeSeries:
    """Generate ``spec.n`` observations after ``spec.burn_in`` discarded steps.

    Raises
    ------
    SimulationError
        If the path leaves ``[-1e12, 1e12]`` or stops being finite.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    total = spec.burn_in + spec.n
    mu = spec.mean_function()
    scale = spec.sigma_scale
    out = np.empty(total)
    x = 0.0
    if spec.id == "E":
        # seven-deep history of the innovations feeds the seasonal noise
        eta = rng.standard_normal(total + 7).tolist()
        for i in range(total):
            x = mu(x) + scale * 0.5 * eta[i + 7] * (eta[i] + 1.5)
            if not abs(x) <= EXPLOSION:
                raise SimulationError(f"path diverged at step {i}", i)
            out[i] = x
    else:
        sigma = spec.scale_function()
        noise = rng.standard_normal(total).tolist()
        for i in range(total):
            x = mu(x) + scale * sigma(x) * noise[i]
            if not abs(x) <= EXPLOSION:
                raise SimulationError(f"path diverged at step {i}", i)
            out[i] = x
    return TimeSeries(out[spec.burn_in:], name=spec.label)


@lru_cache(maxsize=64)
def _calibration(spec_key: tuple) -> tuple[float, float]:
    spec = ModelSpec(*spec_key)
    path = simulate(spec).values
    lo, hi = np.quantile(path, [_QUANTILES[0], _QUANTILES[1]])
    return float(lo), float(hi)


_QUANTILES = (0.10, 0.90)


def calibrated_interval(spec: ModelSpec) -> tuple[float, float]:
    """Central 80% quantile span of a long fixed-seed path of the same model."""
    key = (spec.id, CALIBRATION_LENGTH, 1000, CALIBRATION_SEED, spec.kappa, spec.delta, spec.sigma_scale)
    return _calibration(key)


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class TestConfig:
    """How each replication is tested.

    ``bandwidth`` is ``"cv"`` (selected per replication) or a fixed
    ``(b, h)``; ``interval`` is ``"calibrated"`` or a fixed ``(l, u)``.
    """

    alpha: float = 0.05
    boot_replicates: int = 500
    bandwidth: str | tuple[float, float] = "cv"
    interval: str | tuple[float, float] = "calibrated"
    grid_step: float | None = None
    boot_raw: bool = False
    kernel_a: str | float = "auto"
    workers: int = 1

    __test__ = False


DESK = {"replications": 200, "boot_replicates": 500}
FULL = {"replications": 1000, "boot_replicates": 2000}


@dataclass
class ReplicationResult:
    index: int
    sup: float
    critical: float
    reject: bool
    b: float
    h: float
    locations: tuple[float, ...] = ()
    error: str | None = None


@dataclass
class ExperimentReport:
    """Monte Carlo summary for one design."""

    design: dict
    replications: int
    metrics: dict
    mc_stderr: dict
    interval: tuple[float, float]
    seed: int
    failures: int = 0
    results: list[ReplicationResult] = field(default_factory=list, repr=False)

    def to_dict(self, with_results: bool = False) -> dict:
        d = {
            "design": self.design, "replications": self.replications, "metrics": self.metrics,
            "mc_stderr": self.mc_stderr, "interval": list(self.interval), "seed": self.seed,
            "failures": self.failures,
        }
        if with_results:
            d["results"] = [asdict(r) for r in self.results]
        return d


def rate_stderr(p: float, reps: int) -> float:
    return math.sqrt(p * (1.0 - p) / reps) if reps else float("nan")


def select_bandwidths(series: TimeSeries, config: TestConfig) -> BandwidthPair:
    """``(b, h)`` per the config; cross-validated ``h`` is capped at ``b``."""
    if config.bandwidth == "cv":
        b = cv_bandwidth_mu(series)
        h = min(cv_bandwidth_sigma(series, b_mu=b), b)
        return BandwidthPair(b, h)
    b, h = config.bandwidth
    return BandwidthPair(float(b), float(h))


def _resolve_interval(spec: ModelSpec, config: TestConfig) -> tuple[float, float]:
    if config.interval == "calibrated":
        return calibrated_interval(spec)
    lo, hi = config.interval
    return float(lo), float(hi)


def run_replication(spec: ModelSpec, config: TestConfig, seed: int, r: int, detect: bool = False) -> ReplicationResult:
    """Simulate, test and optionally localise one replication."""
    rep_spec = replace(spec, seed=(seed, r))
    interval = _resolve_interval(spec, config)
    kernel = default_kernel(config.kernel_a)
    try:
        series = simulate(rep_spec)
        bw = select_bandwidths(series, config)
        pairs = series.pairs("lag")
        curve, sup = sup_statistic(pairs, interval, bw, kernel, grid_step=config.grid_step)
        crit, _ = bootstrap_critical(
            pairs.n, bw.b, interval, kernel, config.alpha, config.boot_replicates,
            seed=_boot_seed(seed, r), sample=None if config.boot_raw else pairs.x,
            grid_points=len(curve.grid),
        )
    except StateCPError as exc:
        return ReplicationResult(r, float("nan"), float("nan"), False, float("nan"), float("nan"), error=str(exc))
    locations: tuple[float, ...] = ()
    if detect:
        try:
            report = detect_change_points(pairs, interval, bw, kernel, critical=crit, curve=curve)
            locations = tuple(report.locations)
        except StateCPError as exc:
            return ReplicationResult(r, sup, crit.value, sup > crit.value, bw.b, bw.h, error=str(exc))
    return ReplicationResult(r, sup, crit.value, sup > crit.value, bw.b, bw.h, locations)


def _boot_seed(seed: int, r: int) -> int:
    return int(np.random.SeedSequence([seed, r, 1]).generate_state(1)[0])


def _run_all(spec, config, replications, seed, detect):
    idx = range(replications)
    if config.workers <= 1:
        return [run_replication(spec, config, seed, r, detect) for r in idx]
    from joblib import Parallel, delayed

    return list(Parallel(n_jobs=config.workers)(delayed(run_replication)(spec, config, seed, r, detect) for r in idx))


def _design(spec: ModelSpec, config: TestConfig) -> dict:
    d = {"model": asdict(spec), "config": asdict(config)}
    d["model"]["seed"] = None
    d["config"].pop("workers")  # scheduling only; results do not depend on it
    return d


def size_experiment(spec: ModelSpec, config: TestConfig = TestConfig(), replications: int = 200, seed: int = 0) -> ExperimentReport:
    """Rejection frequency of the bootstrap test (a size under a null model)."""
    results = _run_all(spec, config, replications, seed, detect=False)
    ok = [r for r in results if r.error is None]
    rate = sum(r.reject for r in ok) / len(ok) if ok else float("nan")
    # a replication whose statistic is undefined cannot reject
    rate_all = sum(r.reject for r in ok) / len(results) if results else float("nan")
    return ExperimentReport(
        _design(spec, config), len(ok), {"rejection_rate": rate, "rejection_rate_all": rate_all},
        {"rejection_rate": rate_stderr(rate, len(ok))}, _resolve_interval(spec, config), seed,
        len(results) - len(ok), results,
    )


def power_experiment(
    spec: ModelSpec, deltas, config: TestConfig = TestConfig(), replications: int = 200, seed: int = 0,
) -> list[ExperimentReport]:
    """Rejection rate at each jump size; the seed is shared across sizes."""
    if spec.id not in ("F1", "F2"):
        raise ConfigError("power experiments use models F1 or F2")
    return [size_experiment(replace(spec, delta=float(d)), config, replications, seed) for d in deltas]


def estimation_experiment(spec: ModelSpec, config: TestConfig = TestConfig(), replications: int = 200, seed: int = 0) -> ExperimentReport:
    """Correct-count percentage and location errors over the replications that got it right."""
    truth = spec.change_points()
    results = _run_all(spec, config, replications, seed, detect=True)
    ok = [r for r in results if r.error is None]
    correct = [r for r in ok if len(r.locations) == len(truth)]
    pct = len(correct) / len(ok) if ok else float("nan")
    metrics: dict = {"correct_pct": pct, "correct_pct_all": len(correct) / len(results) if results else float("nan")}
    if correct and truth:
        err = np.array([[e - t for e, t in zip(r.locations, truth)] for r in correct])
        metrics["made"] = np.abs(err).mean(axis=0).tolist()
        metrics["mse"] = (err**2).mean(axis=0).tolist()
        metrics["median_abs_error"] = np.median(np.abs(err), axis=0).tolist()
    else:
        metrics["made"] = metrics["mse"] = metrics["median_abs_error"] = None
    return ExperimentReport(
        _design(spec, config), len(ok), metrics, {"correct_pct": rate_stderr(pct, len(ok))},
        _resolve_interval(spec, config), seed, len(results) - len(ok), results,
    )


def tar_comparison(spec: ModelSpec, config: TestConfig = TestConfig(), replications: int = 200, seed: int = 0) -> ExperimentReport:
    """Nonparametric side of the threshold-AR comparison.

    ``TAR`` gives a rejection rate, ``TAR-est`` a location-accuracy report.
    """
    if spec.id == "TAR":
        return size_experiment(spec, config, replications, seed)
    if spec.id == "TAR-est":
        return estimation_experiment(spec, config, replications, seed)
    raise ConfigError("threshold comparison needs model TAR or TAR-est")


# ---------------------------------------------------------------- output


def config_hash(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def provenance(reports: list[ExperimentReport]) -> dict:
    designs = [r.to_dict() for r in reports]
    kernel = default_kernel().summary()
    return {"kernel": kernel, "reports": designs, "config_hash": config_hash({"d": designs, "k": kernel})}


def write_table(reports: list[ExperimentReport], path) -> None:
    """Flat CSV, one row per design."""
    keys = sorted({k for r in reports for k in r.metrics})
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "n", "alpha", "replications", "failures", *keys, "mc_stderr"])
        for r in reports:
            m = r.design["model"]
            label = ModelSpec(m["id"], m["n"], m["burn_in"], 0, m["kappa"], m["delta"], m["sigma_scale"]).label
            cells = [r.metrics[k] for k in keys]
            se = next(iter(r.mc_stderr.values()), None)
            w.writerow([label, m["n"], r.design["config"]["alpha"], r.replications, r.failures, *cells, se])
