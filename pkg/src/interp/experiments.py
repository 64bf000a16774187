"""Declarative Monte Carlo sweeps, CSV emission and static plots.

A run is described by an :class:`ExperimentConfig`. Every ``(n, d, trial)``
cell draws its data from its own seeded stream, fits each requested
estimator on the same draw, and produces one :class:`MetricsRecord` per
estimator. Records are sorted before writing, so the CSV does not depend on
the number of worker threads.
"""

from __future__ import annotations

import configparser
import csv
import enum
import io
import json
import math
import os
import re
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import bounds as bnd
from .core_model import (
    InterpError,
    Rng,
    SparseLinearInstance,
    TrainingSet,
    WhitenedView,
    derive_seed,
    make_training_set,
    sample_noise,
)
from .features import FeatureFamily, SamplingScheme, build_design
from .fourier_theory import empirical_survival_contamination, spiked_weights
from .interpolators import (
    InterpolatorResult,
    WeightScheme,
    least_squares,
    min_l2_interpolate,
    weighted_min_l2_interpolate,
)
from .interpolators.oracle import ideal_interpolate, ideal_noise_fit
from .sparse import (
    LassoConfig,
    OmpConfig,
    basis_pursuit,
    default_lasso_lambda,
    default_sqrt_lasso_gamma,
    hybrid_interpolate,
    lasso_cd,
    omp,
    sqrt_lasso,
)

SCHEMA_VERSION = 1
RECORDS_SCHEMA = f"interp-records/{SCHEMA_VERSION}"
SUMMARY_SCHEMA = f"interp-summary/{SCHEMA_VERSION}"
FAILURE_BUDGET = 0.10
NULL = "null"


class ConfigError(InterpError):
    pass


class MissingColumn(InterpError):
    pass


class EmptySummary(InterpError):
    pass


class Scenario(enum.Enum):
    SPARSE_GAUSSIAN_SWEEP = "SparseGaussianSweep"
    WIGGLY_DOUBLE_DESCENT = "WigglyDoubleDescent"
    PURE_NOISE_PARSIMONY = "PureNoiseParsimony"
    FOURIER_CONVERSE = "FourierConverse"
    SPIKED_PRIOR_SWEEP = "SpikedPriorSweep"
    THRESHOLD_REGULAR_VS_RANDOM = "ThresholdRegularVsRandom"
    POLY_WHITENING = "PolyWhitening"


class Statistic(enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    BOTH = "both"


# stable small integers mixed into every cell seed
_SCENARIO_KEY = {s: i + 1 for i, s in enumerate(Scenario)}

ESTIMATORS = ("least_squares", "min_l2", "ideal", "omp", "bp", "weighted_l2",
              "hybrid_lasso", "hybrid_omp", "hybrid_sqrt_lasso")

# variants each scenario understands; None means no bracketed variant
_VARIANTS = {
    Scenario.SPARSE_GAUSSIAN_SWEEP: (None,),
    Scenario.WIGGLY_DOUBLE_DESCENT: (None,),
    Scenario.PURE_NOISE_PARSIMONY: (None,),
    Scenario.FOURIER_CONVERSE: ("gaussian", "fourier_regular", "fourier_random"),
    Scenario.SPIKED_PRIOR_SWEEP: (None,),
    Scenario.THRESHOLD_REGULAR_VS_RANDOM: ("regular", "random"),
    Scenario.POLY_WHITENING: ("vandermonde", "legendre", "gaussian"),
}

_OPTION_KEYS = {
    Scenario.PURE_NOISE_PARSIMONY: {"regime"},
    Scenario.SPIKED_PRIOR_SWEEP: {"gammas", "spike_width", "k_star"},
    Scenario.WIGGLY_DOUBLE_DESCENT: {"feature_mean", "feature_var"},
}

REGIMES = ("fixed_n", "quadratic", "exponential")


def _geom(n, factors):
    return tuple(int(n * f) for f in factors)


# Desk-scale defaults; --full-scale switches three scenarios to large sizes.
_DEFAULTS = {
    Scenario.SPARSE_GAUSSIAN_SWEEP: dict(
        estimators=("min_l2", "ideal", "omp", "bp"), n=500, k=50, sigma2=0.01, trials=20,
        d_grid=(100, 250, 400, 500, 1000, 2000, 4000, 8000)),
    Scenario.WIGGLY_DOUBLE_DESCENT: dict(
        estimators=("min_l2",), n=10, k=0, sigma2=0.01, trials=50,
        d_grid=(1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 20, 30, 50, 100, 200, 500, 1000),
        options={"feature_mean": 1.0, "feature_var": 0.01}),
    Scenario.PURE_NOISE_PARSIMONY: dict(
        estimators=("ideal", "omp", "bp"), n=50, k=0, sigma2=0.01, trials=50,
        d_grid=_geom(50, (1, 2, 4, 8, 16, 32, 64)), options={"regime": "fixed_n"}),
    Scenario.FOURIER_CONVERSE: dict(
        estimators=("ideal[gaussian]", "min_l2[fourier_regular]", "min_l2[fourier_random]"),
        n=15, k=0, sigma2=1.0, trials=50,
        d_grid=(5, 10, 15, 20, 30, 45, 60, 90, 150, 300, 600, 1500)),
    Scenario.SPIKED_PRIOR_SWEEP: dict(
        estimators=("min_l2", "weighted_l2"), n=32, k=1, sigma2=0.01, trials=50,
        d_grid=_geom(32, (1, 2, 4, 8, 16, 32)),
        options={"gammas": (0.99, 0.9, 0.5), "spike_width": 4, "k_star": 1}),
    Scenario.THRESHOLD_REGULAR_VS_RANDOM: dict(
        estimators=("ideal[regular]", "ideal[random]"), n=10, k=1, sigma2=0.01, trials=50,
        d_grid=(3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 14, 16, 20, 30, 50, 100)),
    Scenario.POLY_WHITENING: dict(
        estimators=("ideal[vandermonde]", "ideal[legendre]", "ideal[gaussian]"),
        n=10, k=2, sigma2=1e-4, trials=50,
        d_grid=(2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 15, 20, 30, 50, 100)),
}

_FULL_SCALE = {
    Scenario.SPARSE_GAUSSIAN_SWEEP: dict(
        n=5000, k=500, trials=50,
        d_grid=(1000, 2500, 4000, 5000, 7500, 10000, 15000, 20000, 30000)),
    Scenario.PURE_NOISE_PARSIMONY: dict(
        n=1000, d_grid=_geom(1000, (1, 2, 4, 8, 16, 32))),
    Scenario.SPIKED_PRIOR_SWEEP: dict(n=500, d_grid=(500, 1000, 2000, 5500, 11000)),
}

# required length of the true coefficient vector per scenario
_MIN_D = {
    Scenario.THRESHOLD_REGULAR_VS_RANDOM: 3,
    Scenario.POLY_WHITENING: 2,
}


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: Scenario
    estimators: tuple
    n: int
    d_grid: tuple
    k: int
    sigma2: float
    trials: int
    master_seed: int = 0
    statistic: Statistic = Statistic.BOTH
    output_dir: str = "results"
    threads: int = 1
    record_timing: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.scenario, Scenario):
            raise ConfigError(f"bad scenario {self.scenario!r}")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.n < 1:
            raise ConfigError("n must be positive")
        if self.sigma2 < 0:
            raise ConfigError("sigma2 must be nonnegative")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        grid = tuple(int(d) for d in self.d_grid)
        if not grid:
            raise ConfigError("d_grid is empty")
        if grid[0] < 1 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError(f"d_grid must be positive and strictly increasing: {grid}")
        if grid[0] < _MIN_D.get(self.scenario, 1):
            raise ConfigError(f"{self.scenario.value} needs d >= {_MIN_D[self.scenario]}")
        object.__setattr__(self, "d_grid", grid)
        if not self.estimators:
            raise ConfigError("no estimators requested")
        for label in self.estimators:
            parse_estimator(label, self.scenario)
        allowed = _OPTION_KEYS.get(self.scenario, set())
        extra = set(self.options) - allowed
        if extra:
            raise ConfigError(f"unknown options for {self.scenario.value}: {sorted(extra)}")
        if self.scenario is Scenario.PURE_NOISE_PARSIMONY:
            if self.options.get("regime", "fixed_n") not in REGIMES:
                raise ConfigError(f"regime must be one of {REGIMES}")
        if self.scenario is Scenario.SPIKED_PRIOR_SWEEP:
            s = int(self.options.get("spike_width", 4))
            ks = int(self.options.get("k_star", 1))
            if not 0 <= ks < s < self.n:
                raise ConfigError("need 0 <= k_star < spike_width < n")
            if any(d % self.n for d in grid):
                raise ConfigError("SpikedPriorSweep needs every d to be a multiple of n")
            for g in self.options.get("gammas", (0.9,)):
                if not 0 < float(g) < 1:
                    raise ConfigError("gammas must lie in (0, 1)")

    @classmethod
    def default(cls, scenario, full_scale: bool = False, **overrides) -> "ExperimentConfig":
        scenario = _scenario(scenario)
        base = dict(_DEFAULTS[scenario])
        base["options"] = dict(base.get("options", {}))
        if full_scale:
            base.update(_FULL_SCALE.get(scenario, {}))
        base.update(overrides)
        return cls(scenario=scenario, **base)

    def cells(self):
        """``(n, d)`` pairs in sweep order."""
        regime = self.options.get("regime", "fixed_n")
        out = []
        for d in self.d_grid:
            if self.scenario is Scenario.PURE_NOISE_PARSIMONY and regime == "quadratic":
                n = max(1, int(round(math.sqrt(d))))
            elif self.scenario is Scenario.PURE_NOISE_PARSIMONY and regime == "exponential":
                n = max(1, int(round(math.log(d))))
            else:
                n = self.n
            out.append((n, d))
        return out

    def to_dict(self, provenance_only: bool = False) -> dict:
        """Plain dict; ``provenance_only`` drops keys that do not affect results."""
        out = {
            "scenario": self.scenario.value,
            "estimators": list(self.estimators),
            "n": self.n,
            "d_grid": list(self.d_grid),
            "k": self.k,
            "sigma2": self.sigma2,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "statistic": self.statistic.value,
            "record_timing": self.record_timing,
            "options": {k: list(v) if isinstance(v, tuple) else v
                        for k, v in sorted(self.options.items())},
        }
        if not provenance_only:
            out["output_dir"] = self.output_dir
            out["threads"] = self.threads
        return out


def _scenario(value) -> Scenario:
    if isinstance(value, Scenario):
        return value
    for s in Scenario:
        if value in (s.value, s.name):
            return s
    raise ConfigError(f"unknown scenario {value!r}; choose from {[s.value for s in Scenario]}")


_LABEL = re.compile(r"^([a-z_0-9]+)(?:\[([a-z_0-9.=]+)\])?$")


def parse_estimator(label: str, scenario: Scenario):
    """Split ``name[variant]`` and check both parts against the scenario."""
    m = _LABEL.match(label)
    if not m:
        raise ConfigError(f"malformed estimator label {label!r}")
    name, variant = m.group(1), m.group(2)
    if name not in ESTIMATORS:
        raise ConfigError(f"unknown estimator {name!r}")
    variants = _VARIANTS[scenario]
    if variant is None and None not in variants:
        raise ConfigError(f"{scenario.value} needs a variant, e.g. {name}[{variants[0]}]")
    if variant is not None and variant not in variants:
        raise ConfigError(f"{scenario.value} has no variant {variant!r}")
    if scenario is Scenario.SPIKED_PRIOR_SWEEP and name not in ("min_l2", "weighted_l2"):
        raise ConfigError("SpikedPriorSweep runs min_l2 and weighted_l2 only")
    if scenario is not Scenario.SPIKED_PRIOR_SWEEP and name == "weighted_l2":
        raise ConfigError("weighted_l2 is only defined for SpikedPriorSweep")
    if scenario is Scenario.WIGGLY_DOUBLE_DESCENT and name != "min_l2" and name != "least_squares":
        raise ConfigError("the constant target has no sparse truth; use min_l2")
    return name, variant


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------

_INT_KEYS = {"n", "k", "trials", "master_seed", "threads"}
_FLOAT_KEYS = {"sigma2"}
_LIST_INT_KEYS = {"d_grid"}
_BOOL_KEYS = {"record_timing"}
_OPTION_PARSERS = {
    "regime": str,
    "gammas": lambda s: tuple(float(x) for x in _split(s)),
    "spike_width": int,
    "k_star": int,
    "feature_mean": float,
    "feature_var": float,
}


def _split(value: str):
    return [p.strip() for p in value.split(",") if p.strip()]


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _LIST_INT_KEYS:
            return tuple(int(x) for x in _split(raw))
        if key in _BOOL_KEYS:
            low = raw.strip().lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if key == "estimators":
            return tuple(_split(raw))
        if key == "statistic":
            return Statistic(raw.strip())
        if key in ("scenario", "output_dir"):
            return raw.strip()
        if key in _OPTION_PARSERS:
            return _OPTION_PARSERS[key](raw.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str, overrides=(), full_scale: bool = False) -> ExperimentConfig:
    """Build a config from ``key = value`` lines plus ``key=value`` overrides.

    Only ``scenario`` is required; everything else falls back to the
    scenario's default. ``INTERP_SEED`` in the environment wins over both.
    """
    parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    raw = dict(parser["config"])
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        raw[key.strip()] = value
    if "scenario" not in raw:
        raise ConfigError("config must name a scenario")
    values = {key: _coerce(key, value) for key, value in raw.items()}
    scenario = _scenario(values.pop("scenario"))
    options = {k: values.pop(k) for k in list(values) if k in _OPTION_PARSERS}
    env_seed = os.environ.get("INTERP_SEED")
    if env_seed is not None:
        try:
            values["master_seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"INTERP_SEED={env_seed!r} is not an integer") from exc
    base = dict(_DEFAULTS[scenario])
    if full_scale:
        base.update(_FULL_SCALE.get(scenario, {}))
    merged_options = dict(base.pop("options", {}))
    merged_options.update(options)
    base.update(values)
    try:
        return ExperimentConfig(scenario=scenario, options=merged_options, **base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, overrides=(), full_scale: bool = False) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config_text(path.read_text(encoding="utf-8"), overrides, full_scale)


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

@dataclass
class MetricsRecord:
    scenario: str
    estimator: str
    n: int
    d: int
    seed: int
    trial: int
    test_mse: float | None = None
    ideal_mse: float | None = None
    survival: float | None = None
    contamination: float | None = None
    support_size: int | None = None
    wall_time_ms: float | None = None
    error: str | None = None

    def to_row(self) -> list:
        return [_fmt(getattr(self, f.name)) for f in fields(self)]


RECORD_COLUMNS = [f.name for f in fields(MetricsRecord)]


def _fmt(value) -> str:
    if value is None:
        return NULL
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return NULL
        return format(value, ".17g")
    return str(value)


def _parse_float(s: str):
    return None if s == NULL or s == "" else float(s)


# ---------------------------------------------------------------------------
# One cell
# ---------------------------------------------------------------------------

@dataclass
class _Problem:
    ts: TrainingSet
    inst: SparseLinearInstance | None
    view: WhitenedView | None
    mse: object  # alpha -> excess test MSE
    k_star: int | None = None
    view_is_whitening: bool = True


def _gaussian_problem(n, d, inst, rng_design, rng_noise):
    A, _, view = build_design(FeatureFamily.gaussian(d), None, n, rng_design)
    ts = make_training_set(A, inst, rng_noise)
    return _Problem(ts, inst, view, lambda a: float(np.sum(np.abs(a - inst.alpha_star) ** 2)))


def _build_problem(cfg: ExperimentConfig, n, d, variant, variant_key, rng: Rng) -> _Problem:
    sc = cfg.scenario
    rng_design = rng.child(variant_key, 1)
    rng_noise = rng.child(0, 2)  # shared by all variants of the cell
    sigma2 = cfg.sigma2

    if sc is Scenario.SPARSE_GAUSSIAN_SWEEP:
        k = min(cfg.k, d)
        inst = SparseLinearInstance.unit_support(d, k, sigma2)
        return _gaussian_problem(n, d, inst, rng_design, rng_noise)

    if sc is Scenario.PURE_NOISE_PARSIMONY:
        return _gaussian_problem(n, d, SparseLinearInstance.pure_noise(d, sigma2),
                                 rng_design, rng_noise)

    if sc is Scenario.WIGGLY_DOUBLE_DESCENT:
        mean = float(cfg.options.get("feature_mean", 1.0))
        var = float(cfg.options.get("feature_var", 0.01))
        fam = FeatureFamily.shifted_mean(d, mean, var)
        A, _, _ = build_design(fam, None, n, rng_design, whiten=False)
        W = sample_noise(rng_noise, n, sigma2)
        ts = TrainingSet(A, 1.0 + W, W)

        def mse(a):
            # test feature ~ N(mean 1, var I): E(1 - a^T alpha)^2
            return float((1.0 - mean * np.sum(a)) ** 2 + var * np.sum(a ** 2))
        return _Problem(ts, None, None, mse)

    if sc is Scenario.FOURIER_CONVERSE:
        inst = SparseLinearInstance.pure_noise(d, sigma2)
        if variant == "gaussian":
            return _gaussian_problem(n, d, inst, rng_design, rng_noise)
        scheme = SamplingScheme.regular() if variant == "fourier_regular" else SamplingScheme.uniform()
        A, _, view = build_design(FeatureFamily.fourier(d), scheme, n, rng_design)
        ts = make_training_set(A, inst, rng_noise)
        return _Problem(ts, inst, view, lambda a: float(np.sum(np.abs(a) ** 2)))

    if sc is Scenario.SPIKED_PRIOR_SWEEP:
        ks = int(cfg.options.get("k_star", 1))
        alpha = np.zeros(d)
        alpha[ks] = 1.0
        inst = SparseLinearInstance.from_alpha(alpha, sigma2)
        A, _, view = build_design(FeatureFamily.fourier(d), SamplingScheme.regular(), n, rng_design)
        ts = make_training_set(A, inst, rng_noise)
        return _Problem(ts, inst, view,
                        lambda a: float(np.sum(np.abs(a - inst.alpha_star) ** 2)), k_star=ks)

    if sc is Scenario.THRESHOLD_REGULAR_VS_RANDOM:
        alpha = np.zeros(d)
        alpha[2] = 1.0
        inst = SparseLinearInstance.from_alpha(alpha, sigma2)
        scheme = SamplingScheme.regular() if variant == "regular" else SamplingScheme.uniform()
        A, _, view = build_design(FeatureFamily.legendre(d), scheme, n, rng_design)
        ts = make_training_set(A, inst, rng_noise)
        return _Problem(ts, inst, view, lambda a: float(np.sum((a - inst.alpha_star) ** 2)))

    if sc is Scenario.POLY_WHITENING:
        # target 1 + x written in each basis
        alpha = np.zeros(d)
        if variant == "legendre":
            alpha[:2] = (1.0, 1.0 / math.sqrt(3.0))
        else:
            alpha[:2] = 1.0
        inst = SparseLinearInstance.from_alpha(alpha, sigma2)
        if variant == "gaussian":
            return _gaussian_problem(n, d, inst, rng_design, rng_noise)
        if variant == "legendre":
            fam = FeatureFamily.legendre(d)
            A, _, view = build_design(fam, SamplingScheme.uniform(), n, rng_design)
            ts = make_training_set(A, inst, rng_noise)
            return _Problem(ts, inst, view, lambda a: float(np.sum((a - inst.alpha_star) ** 2)))
        fam = FeatureFamily.vandermonde(d)
        A, _, _ = build_design(fam, SamplingScheme.uniform(), n, rng_design, whiten=False)
        ts = make_training_set(A, inst, rng_noise)
        M = fam.covariance()
        # unwhitened: the "ideal" fit treats the raw monomials as if orthonormal
        return _Problem(ts, inst, WhitenedView.identity(A),
                        lambda a: float((a - inst.alpha_star) @ M @ (a - inst.alpha_star)),
                        view_is_whitening=False)

    raise ConfigError(f"unhandled scenario {sc}")


def _fit(name, variant, prob: _Problem, cfg: ExperimentConfig) -> InterpolatorResult:
    ts = prob.ts
    n, d = ts.n, ts.d
    if d < n or name == "least_squares":
        return least_squares(ts)
    if name == "min_l2":
        return min_l2_interpolate(ts)
    if name == "ideal":
        res, _ = ideal_interpolate(ts, prob.view, prob.inst)
        return res
    if name == "omp":
        return omp(ts, OmpConfig.to_completion())
    if name == "bp":
        return basis_pursuit(ts)
    if name == "weighted_l2":
        raise AssertionError("weighted_l2 is expanded per gamma")
    sigma = math.sqrt(cfg.sigma2)
    if name == "hybrid_lasso":
        lam = default_lasso_lambda(sigma, n, d)
        return hybrid_interpolate(ts, lambda t: lasso_cd(t, LassoConfig(lambda_n=lam)), prob.inst)
    if name == "hybrid_omp":
        k0 = max(1, cfg.k)
        return hybrid_interpolate(ts, lambda t: omp(t, OmpConfig.fixed_steps(k0)), prob.inst)
    if name == "hybrid_sqrt_lasso":
        g = default_sqrt_lasso_gamma(n, d)
        return hybrid_interpolate(ts, lambda t: sqrt_lasso(t, LassoConfig(gamma_n=g)), prob.inst)
    raise ConfigError(f"unknown estimator {name!r}")


def _expand_labels(cfg: ExperimentConfig):
    """``(label, name, variant, weights_gamma)`` for every curve of the run."""
    out = []
    for label in cfg.estimators:
        name, variant = parse_estimator(label, cfg.scenario)
        if name == "weighted_l2":
            for g in cfg.options.get("gammas", (0.9,)):
                out.append((f"weighted_l2[gamma={float(g):g}]", name, variant, float(g)))
        else:
            out.append((label, name, variant, None))
    return out


def _run_cell(cfg: ExperimentConfig, n: int, d: int, trial: int, labels) -> list:
    seed = derive_seed(cfg.master_seed, _SCENARIO_KEY[cfg.scenario], n, d, trial)
    rng = Rng(seed)
    variants = _VARIANTS[cfg.scenario]
    problems = {}
    ideal_cache = {}
    rows = []
    for label, name, variant, gamma in labels:
        rec = MetricsRecord(cfg.scenario.value, label, n, d, seed, trial)
        t0 = time.perf_counter()
        try:
            if variant not in problems:
                problems[variant] = _build_problem(cfg, n, d, variant,
                                                   variants.index(variant), rng)
            prob = problems[variant]
            if gamma is not None and d >= n:
                s = int(cfg.options.get("spike_width", 4))
                res = weighted_min_l2_interpolate(prob.ts, WeightScheme(spiked_weights(d, s, gamma)))
            else:
                res = _fit(name, variant, prob, cfg)
            rec.test_mse = prob.mse(res.alpha_hat)
            rec.support_size = int(res.support.size)
            if prob.view is not None and prob.view_is_whitening and d >= n and prob.inst is not None:
                if variant not in ideal_cache:
                    ideal_cache[variant] = ideal_noise_fit(prob.view.B, prob.ts.W)
                rec.ideal_mse = ideal_cache[variant]
            if prob.k_star is not None:
                rec.survival, rec.contamination = empirical_survival_contamination(
                    prob.ts, res.alpha_hat, prob.k_star)
            if not np.isfinite(rec.test_mse):
                raise FloatingPointError("non-finite test MSE")
        except (InterpError, np.linalg.LinAlgError, ValueError, FloatingPointError,
                ArithmeticError) as exc:
            rec.test_mse = rec.ideal_mse = rec.survival = rec.contamination = None
            rec.support_size = None
            rec.error = f"{type(exc).__name__}: {exc}".replace("\n", " ")
        if cfg.record_timing:
            rec.wall_time_ms = 1000.0 * (time.perf_counter() - t0)
        rows.append(rec)
    return rows


# ---------------------------------------------------------------------------
# Run
# ---------------------------------------------------------------------------

@dataclass
class RunResult:
    records_path: Path
    summary_path: Path
    n_records: int
    n_failed: int

    @property
    def failed_fraction(self) -> float:
        return self.n_failed / self.n_records if self.n_records else 0.0

    @property
    def over_budget(self) -> bool:
        return self.failed_fraction > FAILURE_BUDGET


def collect_records(cfg: ExperimentConfig) -> list:
    """All records of a run, sorted by ``(n, d, trial, estimator order)``."""
    labels = _expand_labels(cfg)
    order = {lab[0]: i for i, lab in enumerate(labels)}
    jobs = [(n, d, t) for (n, d) in cfg.cells() for t in range(cfg.trials)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if cfg.threads == 1:
            chunks = [_run_cell(cfg, n, d, t, labels) for n, d, t in jobs]
        else:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                chunks = list(pool.map(lambda job: _run_cell(cfg, *job, labels), jobs))
    rows = [r for chunk in chunks for r in chunk]
    rows.sort(key=lambda r: (r.n, r.d, r.trial, order[r.estimator]))
    return rows


def _header_lines(schema: str, cfg: ExperimentConfig) -> list:
    return [f"# schema: {schema}",
            "# config: " + json.dumps(cfg.to_dict(provenance_only=True), sort_keys=True)]


def write_records(path, rows, cfg: ExperimentConfig) -> None:
    buf = io.StringIO()
    for line in _header_lines(RECORDS_SCHEMA, cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(RECORD_COLUMNS)
    for r in rows:
        w.writerow(r.to_row())
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def read_csv(path):
    """``(comment_lines, header, rows)`` of a file written by this module."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    comments = [ln.rstrip("\r\n") for ln in lines if ln.startswith("#")]
    body = "".join(ln for ln in lines if not ln.startswith("#"))
    reader = csv.reader(io.StringIO(body))
    try:
        header = next(reader)
    except StopIteration:
        return comments, [], []
    return comments, header, [row for row in reader if row]


def config_from_header(comments) -> dict | None:
    for line in comments:
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    return None


SUMMARY_COLUMNS = ["scenario", "estimator", "n", "d", "sigma2", "trials", "failures",
                   "mean", "median", "p07_5", "p92_5",
                   "ideal_mean", "ideal_median", "survival_median", "contamination_median"]


def _stats(values):
    if not values:
        return [None] * 4
    v = np.array(values, dtype=float)
    return [float(v.mean()), float(np.median(v)),
            float(np.percentile(v, 7.5)), float(np.percentile(v, 92.5))]


def summarize(records_path, summary_path=None):
    """Per ``(estimator, n, d)`` statistics computed from the records file alone."""
    comments, header, rows = read_csv(records_path)
    missing = [c for c in RECORD_COLUMNS if c not in header]
    if missing:
        raise MissingColumn(f"records file lacks columns {missing}")
    conf = config_from_header(comments) or {}
    sigma2 = conf.get("sigma2")
    col = {c: header.index(c) for c in RECORD_COLUMNS}
    groups = {}
    order = []
    for row in rows:
        key = (row[col["scenario"]], row[col["estimator"]], int(row[col["n"]]), int(row[col["d"]]))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    est_order = {}
    for key in order:
        est_order.setdefault(key[1], len(est_order))
    order.sort(key=lambda k: (est_order[k[1]], k[2], k[3]))
    out = []
    for key in order:
        grp = groups[key]

        def vals(name):
            return [x for x in (_parse_float(r[col[name]]) for r in grp) if x is not None]
        test = vals("test_mse")
        ideal = vals("ideal_mse")
        surv = vals("survival")
        cont = vals("contamination")
        failures = sum(1 for r in grp if r[col["error"]] != NULL)
        out.append([key[0], key[1], key[2], key[3], sigma2, len(grp), failures]
                   + _stats(test)
                   + _stats(ideal)[:2]
                   + [float(np.median(surv)) if surv else None,
                      float(np.median(cont)) if cont else None])
    if summary_path is not None:
        buf = io.StringIO()
        buf.write(f"# schema: {SUMMARY_SCHEMA}\n")
        for line in comments:
            if line.startswith("# config: "):
                buf.write(line + "\n")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in out:
            w.writerow([_fmt(v) for v in r])
        Path(summary_path).write_bytes(buf.getvalue().encode("utf-8"))
    return out


def run(cfg: ExperimentConfig, output_dir=None) -> RunResult:
    """Execute the sweep; write ``records.csv`` and ``summary.csv``."""
    out = Path(output_dir if output_dir is not None else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = collect_records(cfg)
    rec_path = out / "records.csv"
    sum_path = out / "summary.csv"
    write_records(rec_path, rows, cfg)
    summarize(rec_path, sum_path)
    failed = sum(1 for r in rows if r.error is not None)
    return RunResult(rec_path, sum_path, len(rows), failed)


# ---------------------------------------------------------------------------
# Plots
# ---------------------------------------------------------------------------

PLOT_STYLES = ("paired", "median", "mean", "errorbars")
_OVERLAY_SCENARIOS = {Scenario.SPARSE_GAUSSIAN_SWEEP.value, Scenario.PURE_NOISE_PARSIMONY.value,
                      Scenario.FOURIER_CONVERSE.value}
_PLOT_REQUIRED = ("scenario", "estimator", "n", "d", "median", "mean", "p07_5", "p92_5")


def _bound_curves(n_values, d_values, sigma2, scenario):
    xs, lo, hi, floor = [], [], [], []
    for n, d in zip(n_values, d_values):
        if d < n:
            continue
        p = bnd.BoundParams(n, d, sigma2 if sigma2 else 1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            xs.append(d)
            lo.append(bnd.ideal_mse_lower_gaussian(p))
            hi.append(bnd.ideal_mse_upper_gaussian(p))
            floor.append(bnd.parsimonious_floor(p) if d > n else math.nan)
    curves = {"ideal lower bound": (xs, lo), "ideal upper bound": (xs, hi)}
    if scenario == Scenario.PURE_NOISE_PARSIMONY.value:
        curves["parsimonious floor"] = (xs, floor)
    return curves


def plot(summary_path, style: str = "paired", out_path=None, overlay=None) -> Path:
    """Render a summary file as one SVG. Returns the path written.

    ``paired`` puts median curves and the same curves with 7.5-92.5
    percentile bars side by side. Bound curves are overlaid for Gaussian
    scenarios unless ``overlay`` is False.
    """
    if style not in PLOT_STYLES:
        raise ValueError(f"style must be one of {PLOT_STYLES}")
    comments, header, rows = read_csv(summary_path)
    if not header:
        raise EmptySummary(f"{summary_path} has no header")
    missing = [c for c in _PLOT_REQUIRED if c not in header]
    if missing:
        raise MissingColumn(f"summary lacks columns {missing}")
    if not rows:
        raise EmptySummary(f"{summary_path} has no rows")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    col = {c: header.index(c) for c in header}
    scenario = rows[0][col["scenario"]]
    sigma2 = _parse_float(rows[0][col["sigma2"]]) if "sigma2" in col else None
    series = {}
    for r in rows:
        series.setdefault(r[col["estimator"]], []).append(r)
    n_vary = len({r[col["n"]] for r in rows}) > 1
    xkey = "n" if n_vary else "d"
    stat = "mean" if style == "mean" else "median"
    if overlay is None:
        overlay = scenario in _OVERLAY_SCENARIOS

    panels = ("plain", "bars") if style == "paired" else (
        ("bars",) if style == "errorbars" else ("plain",))
    fig, axes = plt.subplots(1, len(panels), figsize=(6.0 * len(panels), 4.5), squeeze=False)
    for ax, panel in zip(axes[0], panels):
        for label, grp in series.items():
            x = np.array([float(r[col[xkey]]) for r in grp])
            y = np.array([_parse_float(r[col[stat]]) or math.nan for r in grp])
            keep = np.isfinite(y) & (y > 0)
            if panel == "bars":
                lo = np.array([_parse_float(r[col["p07_5"]]) or math.nan for r in grp])
                hi = np.array([_parse_float(r[col["p92_5"]]) or math.nan for r in grp])
                err = np.vstack([np.clip(y - lo, 0, None), np.clip(hi - y, 0, None)])
                ax.errorbar(x[keep], y[keep], yerr=err[:, keep], marker="o", ms=3,
                            capsize=2, label=label)
            else:
                ax.plot(x[keep], y[keep], marker="o", ms=3, label=label)
        if overlay and not n_vary:
            ns = [int(r[col["n"]]) for r in rows]
            ds = [int(r[col["d"]]) for r in rows]
            pairs = sorted(set(zip(ns, ds)), key=lambda t: t[1])
            curves = _bound_curves([p[0] for p in pairs], [p[1] for p in pairs], sigma2, scenario)
            for name, (bx, by) in curves.items():
                by = np.array(by, dtype=float)
                ok = np.isfinite(by) & (by > 0)
                if ok.any():
                    ax.plot(np.array(bx)[ok], by[ok], ls="--", lw=1, label=name)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(xkey)
        ax.set_ylabel(f"test MSE ({stat})")
        ax.set_title(scenario + (" (7.5-92.5 pct bars)" if panel == "bars" else ""))
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(fontsize=7)
    fig.tight_layout()
    if out_path is None:
        out_path = Path(summary_path).with_name(f"{Path(summary_path).stem}_{style}.svg")
    out_path = Path(out_path)
    # fixed metadata and id salt keep the SVG reproducible
    with matplotlib.rc_context({"svg.hashsalt": "interp"}):
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path


__all__ = [
    "ConfigError", "MissingColumn", "EmptySummary", "Scenario", "Statistic",
    "ExperimentConfig", "MetricsRecord", "RunResult", "parse_config_text", "load_config",
    "collect_records", "write_records", "summarize", "run", "plot", "parse_estimator",
    "RECORD_COLUMNS", "SUMMARY_COLUMNS",
]
