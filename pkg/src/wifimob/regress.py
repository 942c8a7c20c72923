"""Gaussian process regression from Wi-Fi stability to moving speed.

One-dimensional GP with a squared-exponential kernel, zero prior mean and
Gaussian observation noise. Hyperparameters are chosen by maximising the log
marginal likelihood over a logarithmic grid followed by coordinate-wise
refinement, which keeps fits reproducible bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import linalg

from . import modelio
from .features import FeatureRecord, SpeedProvenance

log = logging.getLogger(__name__)

JITTER_START = 1e-8
JITTER_MAX = 1e-2
NOISE_FLOOR = 1e-8
# Most negative pre-clamp posterior variance tolerated before the
# factorization is considered broken.
VARIANCE_TOLERANCE = 1e-8


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GprHyperparams:
    signal_variance: float
    length_scale: float
    noise_variance: float

    def __post_init__(self):
        for name in ("signal_variance", "length_scale", "noise_variance"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and positive, got {v}")
        if self.noise_variance < NOISE_FLOOR:
            raise ValueError(f"noise_variance {self.noise_variance} below floor {NOISE_FLOOR}")


def kernel(x1, x2, hp: GprHyperparams):
    """Squared-exponential covariance; broadcasts over array inputs."""
    d = np.subtract.outer(np.asarray(x1, float), np.asarray(x2, float))
    return hp.signal_variance * np.exp(-(d**2) / (2.0 * hp.length_scale**2))


def _factor(x: np.ndarray, hp: GprHyperparams):
    """Cholesky of K + (noise + jitter) I with jitter escalation.

    Returns (lower factor, jitter used).
    """
    K = kernel(x, x, hp)
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-12):
        try:
            L = linalg.cholesky(K + (hp.noise_variance + jitter) * np.eye(len(x)), lower=True)
            return L, jitter
        except linalg.LinAlgError:
            jitter *= 10.0
    raise NumericalError(f"kernel matrix not positive definite with jitter up to {JITTER_MAX} ({hp})")


def log_marginal_likelihood(x, y, hp: GprHyperparams) -> float:
    x, y = np.asarray(x, float), np.asarray(y, float)
    L, _ = _factor(x, hp)
    alpha = linalg.cho_solve((L, True), y)
    return float(-0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * len(x) * math.log(2 * math.pi))


@dataclass(frozen=True, eq=False)
class GprModel:
    hyperparams: GprHyperparams
    train_x: np.ndarray
    train_y: np.ndarray
    jitter: float = field(init=False)
    chol: np.ndarray = field(init=False, repr=False)
    alpha: np.ndarray = field(init=False, repr=False)
    log_likelihood: float = field(init=False)

    def __post_init__(self):
        x = np.array(self.train_x, dtype=float)
        y = np.array(self.train_y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or len(x) < 1:
            raise ValueError("train_x and train_y must be equal-length 1-d arrays with >= 1 point")
        if not (np.isfinite(x).all() and np.isfinite(y).all()):
            raise ValueError("training data must be finite")
        x.flags.writeable = False
        y.flags.writeable = False
        L, jitter = _factor(x, self.hyperparams)
        alpha = linalg.cho_solve((L, True), y)
        lml = -0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * len(x) * math.log(2 * math.pi)
        for name, value in (
            ("train_x", x),
            ("train_y", y),
            ("jitter", jitter),
            ("chol", L),
            ("alpha", alpha),
            ("log_likelihood", float(lml)),
        ):
            object.__setattr__(self, name, value)

    def residual(self) -> float:
        """max |(K + s I) alpha - y|; small when the factorization is consistent."""
        K = kernel(self.train_x, self.train_x, self.hyperparams)
        K[np.diag_indices_from(K)] += self.hyperparams.noise_variance + self.jitter
        return float(np.abs(K @ self.alpha - self.train_y).max())


@dataclass(frozen=True)
class SearchConfig:
    """Log-spaced grids (low, high, steps) and refinement controls."""

    signal_variance: tuple[float, float, int] = (1e-2, 1e2, 9)
    length_scale: tuple[float, float, int] = (1e-2, 3.0, 9)
    noise_variance: tuple[float, float, int] = (1e-4, 1.0, 7)
    refine_tol: float = 1e-4
    max_sweeps: int = 500

    def grids(self) -> list[np.ndarray]:
        return [np.geomspace(lo, hi, n) for lo, hi, n in self.axes()]

    def axes(self):
        return (self.signal_variance, self.length_scale, self.noise_variance)


def _lml_or_inf(x, y, log_params) -> float:
    hp = GprHyperparams(*(10.0**p for p in log_params))
    try:
        return log_marginal_likelihood(x, y, hp)
    except NumericalError:
        return -math.inf


def search_hyperparams(x, y, search: SearchConfig = SearchConfig()) -> tuple[GprHyperparams, float]:
    """Grid search then coordinate refinement in log10 space.

    Refinement tries +/- one step on each coordinate in turn, moving on strict
    improvement; when a full sweep makes no move every step is halved. Steps
    start at half the grid spacing and refinement stops below ``refine_tol``.
    Parameters stay inside the grid bounds.
    """
    x, y = np.asarray(x, float), np.asarray(y, float)
    best, best_lml = None, -math.inf
    g_sf, g_ls, g_sn = search.grids()
    for sf in g_sf:
        for ls in g_ls:
            for sn in g_sn:
                lml = _lml_or_inf(x, y, (math.log10(sf), math.log10(ls), math.log10(sn)))
                if lml > best_lml:
                    best, best_lml = [math.log10(sf), math.log10(ls), math.log10(sn)], lml
    if best is None:
        raise NumericalError("no grid point gave a positive-definite kernel matrix")

    bounds = [(math.log10(lo), math.log10(hi)) for lo, hi, _ in search.axes()]
    steps = [(b - a) / max(n - 1, 1) / 2 for (a, b), (_, _, n) in zip(bounds, search.axes())]
    for _ in range(search.max_sweeps):
        if max(steps) < search.refine_tol:
            break
        moved = False
        for i in range(3):
            for direction in (1.0, -1.0):
                trial = list(best)
                trial[i] = min(max(best[i] + direction * steps[i], bounds[i][0]), bounds[i][1])
                if trial[i] == best[i]:
                    continue
                lml = _lml_or_inf(x, y, trial)
                if lml > best_lml:
                    best, best_lml, moved = trial, lml, True
                    break
        if not moved:
            steps = [s / 2 for s in steps]
    # 10**log10(v) can overshoot a bound by an ulp; clamp in linear space.
    values = (min(max(10.0**p, lo), hi) for p, (lo, hi, _) in zip(best, search.axes()))
    return GprHyperparams(*values), best_lml


def fit(train_x: Sequence[float], train_y: Sequence[float], search: SearchConfig = SearchConfig()) -> GprModel:
    """Fit a GP mapping stability in [0, 1] to non-negative speed."""
    x = np.asarray(train_x, dtype=float)
    y = np.asarray(train_y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("train_x and train_y must be 1-d and equal length")
    if len(x) < 2:
        raise ValueError(f"need at least 2 training points, got {len(x)}")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("training data must be finite")
    if x.min() < 0 or x.max() > 1:
        raise ValueError("stability inputs must lie in [0, 1]")
    if y.min() < 0:
        raise ValueError("speeds must be non-negative")
    hp, _ = search_hyperparams(x, y, search)
    return GprModel(hp, x, y)


def predict(model: GprModel, x_star):
    """Posterior mean and variance at ``x_star`` (scalar or array).

    Inputs outside [0, 1] are allowed and logged as extrapolation.
    """
    xs = np.asarray(x_star, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    if not np.isfinite(xs).all():
        raise ValueError("query points must be finite")
    if xs.size and (xs.min() < 0 or xs.max() > 1):
        log.warning("GP query outside [0, 1] stability range: [%g, %g]", xs.min(), xs.max())
    k_star = kernel(model.train_x, xs, model.hyperparams)
    mean = k_star.T @ model.alpha
    v = linalg.solve_triangular(model.chol, k_star, lower=True)
    var = model.hyperparams.signal_variance - np.einsum("ij,ij->j", v, v)
    if var.size and var.min() < -VARIANCE_TOLERANCE:
        raise NumericalError(f"posterior variance {var.min():g} is significantly negative")
    var = np.maximum(var, 0.0)
    if scalar:
        return float(mean[0]), float(var[0])
    return mean, var


def training_pairs(records: Sequence[FeatureRecord]) -> tuple[np.ndarray, np.ndarray]:
    """(stability_mean, speed) over records with observed speed and defined stability."""
    pairs = [
        (r.stability_mean, r.speed)
        for r in records
        if r.stability_mean is not None and r.speed_provenance is SpeedProvenance.OBSERVED
    ]
    if not pairs:
        return np.empty(0), np.empty(0)
    x, y = zip(*pairs)
    return np.array(x), np.array(y)


def fit_records(records: Sequence[FeatureRecord], search: SearchConfig = SearchConfig()) -> GprModel:
    x, y = training_pairs(records)
    return fit(x, y, search)


def impute_speeds(records: Sequence[FeatureRecord], model: GprModel) -> list[FeatureRecord]:
    """Fill absent speeds from the posterior mean (clamped at 0).

    Records with an observed speed or undefined stability pass through.
    """
    todo = [
        i
        for i, r in enumerate(records)
        if r.speed_provenance is SpeedProvenance.ABSENT and r.stability_mean is not None
    ]
    out = list(records)
    if not todo:
        return out
    means, _ = predict(model, np.array([records[i].stability_mean for i in todo]))
    for i, m in zip(todo, means):
        out[i] = replace(out[i], speed=max(0.0, float(m)), speed_provenance=SpeedProvenance.IMPUTED)
    return out


def curve(model: GprModel, grid: Sequence[float] | None = None):
    """(x, mean, variance) samples of the posterior over a stability grid."""
    xs = np.linspace(0.0, 1.0, 101) if grid is None else np.asarray(grid, float)
    mean, var = predict(model, xs)
    return xs, mean, var


def dumps_model(model: GprModel, config: dict | None = None) -> str:
    hp = model.hyperparams
    payload = {
        "signal_variance": hp.signal_variance,
        "length_scale": hp.length_scale,
        "noise_variance": hp.noise_variance,
        "train_x": model.train_x.tolist(),
        "train_y": model.train_y.tolist(),
    }
    return modelio.dumps("gpr", payload, config)


def loads_model(text: str) -> GprModel:
    """Rebuild a GP from its envelope; the factorization is recomputed."""
    _, p, _ = modelio.loads(text, "gpr")
    hp = GprHyperparams(p["signal_variance"], p["length_scale"], p["noise_variance"])
    return GprModel(hp, np.array(p["train_x"], float), np.array(p["train_y"], float))
