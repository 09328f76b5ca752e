"""Empirical integrated density of states.

``IntegratedDensityOfStates`` follows the scikit-learn estimator protocol:
``fit`` takes pooled eigenvalues, ``transform`` evaluates ``N(E)``,
``inverse_transform`` is the generalized inverse ``N^{-1}``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import warnings
from dataclasses import asdict
from typing import Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_energies
from .eigensolve import full_spectrum
from .hamiltonian import Boundary, DisorderConfig, LatticeCube, assemble, sample_potential

__all__ = [
    "IntegratedDensityOfStates",
    "IdsModel",
    "WEAK_SAMPLE_SIZE",
    "estimate_ids",
    "ids_window",
    "local_exponents",
    "disorder_digest",
]

WEAK_SAMPLE_SIZE = 100


class IntegratedDensityOfStates(TransformerMixin, BaseEstimator):
    """Monotone piecewise-linear estimate of ``N(E)`` (states per site).

    Parameters
    ----------
    max_knots : int
        Knots are placed at pooled order statistics, thinned to at most this
        many points.
    bandwidth : float, optional
        Default half-width ``h`` for :meth:`density`. ``None`` uses
        ``4 * span / n_knots``.

    Attributes
    ----------
    knots_ : ndarray
        Strictly increasing energies.
    values_ : ndarray
        ``N`` at the knots; ``values_[0] == 0`` and ``values_[-1] == 1``.
    n_samples_ : int
        Number of pooled eigenvalues.
    weak_ : bool
        True when fewer than ``WEAK_SAMPLE_SIZE`` eigenvalues were pooled.
    """

    def __init__(self, max_knots: int = 20000, bandwidth: Optional[float] = None):
        self.max_knots = max_knots
        self.bandwidth = bandwidth

    def fit(self, X, y=None, metadata: Optional[dict] = None):
        e = np.sort(as_energies(X))
        n = len(e)
        if n < 2:
            raise ValueError("need at least two eigenvalues to estimate an IDS")
        if self.max_knots < 2:
            raise ValueError("max_knots must be >= 2")
        uniq = np.unique(e)
        if len(uniq) > self.max_knots:
            pick = np.unique(np.round(np.linspace(0, len(uniq) - 1, self.max_knots)).astype(int))
            uniq = uniq[pick]
        # fraction of eigenvalues <= knot, rescaled so the extremes map to 0 and 1
        le = np.searchsorted(e, uniq, side="right")
        values = (le - 1) / (n - 1)
        values[0] = 0.0
        values[-1] = 1.0
        self.knots_ = uniq
        self.values_ = values
        self.n_samples_ = n
        self.weak_ = n < WEAK_SAMPLE_SIZE
        if self.weak_:
            warnings.warn(f"IDS estimated from only {n} eigenvalues", RuntimeWarning, stacklevel=2)
        self.metadata_ = dict(metadata or {})
        return self

    def transform(self, X):
        """``N(E)``, clamped to 0 below the first knot and 1 above the last."""
        check_is_fitted(self, "knots_")
        E = np.asarray(X, dtype=np.float64)
        return np.interp(E, self.knots_, self.values_, left=0.0, right=1.0)

    evaluate = transform

    def inverse_transform(self, X):
        """Smallest ``E`` with ``N(E) >= y`` (left-continuous generalized inverse)."""
        check_is_fitted(self, "knots_")
        y = np.asarray(X, dtype=np.float64)
        if np.any((y < 0) | (y > 1)):
            raise ValueError("IDS levels must lie in [0, 1]")
        k, v = self.knots_, self.values_
        j = np.searchsorted(v, y, side="left")
        j = np.clip(j, 0, len(v) - 1)
        prev = np.clip(j - 1, 0, len(v) - 1)
        dv = v[j] - v[prev]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(dv > 0, (y - v[prev]) / dv, 1.0)
        out = np.where(j == 0, k[0], k[prev] + t * (k[j] - k[prev]))
        return out if out.ndim else float(out)

    inverse = inverse_transform

    @property
    def span(self) -> float:
        check_is_fitted(self, "knots_")
        return float(self.knots_[-1] - self.knots_[0])

    @property
    def default_bandwidth(self) -> float:
        if self.bandwidth is not None:
            return float(self.bandwidth)
        return 4.0 * self.span / len(self.knots_)

    def density(self, E, h: Optional[float] = None):
        """Symmetric difference quotient ``(N(E+h) - N(E-h)) / 2h``, floored at 0."""
        check_is_fitted(self, "knots_")
        h = self.default_bandwidth if h is None else float(h)
        spacing = self.span / max(len(self.knots_) - 1, 1)
        if not h > 0:
            raise ValueError("bandwidth must be positive")
        if h < spacing * (1 - 1e-12):
            raise ValueError(
                f"bandwidth {h:g} is below the mean knot spacing {spacing:g}; "
                "the difference quotient would resolve individual order statistics"
            )
        E = np.asarray(E, dtype=np.float64)
        nu = (self.transform(E + h) - self.transform(E - h)) / (2 * h)
        return np.maximum(nu, 0.0)

    def mass(self, interval: Tuple[float, float]) -> float:
        """``N(I) = N(b) - N(a)``."""
        a, b = interval
        return float(self.transform(b) - self.transform(a))

    def slopes(self) -> Tuple[np.ndarray, np.ndarray]:
        """Knot cells and the constant derivative of the interpolant on each."""
        check_is_fitted(self, "knots_")
        return self.knots_, np.diff(self.values_) / np.diff(self.knots_)

    def sup_distance(self, other: "IntegratedDensityOfStates") -> float:
        grid = np.union1d(self.knots_, other.knots_)
        return float(np.max(np.abs(self.transform(grid) - other.transform(grid))))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["knot", "value"])
            for k, v in zip(self.knots_, self.values_):
                w.writerow([repr(float(k)), repr(float(v))])

    def metadata_json(self) -> str:
        meta = {"n_samples": int(self.n_samples_), "n_knots": int(len(self.knots_)), "weak": bool(self.weak_)}
        meta.update(self.metadata_)
        return json.dumps(meta, indent=2, sort_keys=True, default=str)

    @classmethod
    def from_table(cls, knots: Sequence[float], values: Sequence[float], **kw) -> "IntegratedDensityOfStates":
        """Model with prescribed knots and values (no re-estimation)."""
        knots = np.asarray(knots, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise ValueError("values must be nondecreasing")
        model = cls(**kw)
        model.knots_, model.values_ = knots, values
        model.n_samples_, model.weak_, model.metadata_ = len(knots), False, {}
        return model

    @classmethod
    def from_csv(cls, path, **kw) -> "IntegratedDensityOfStates":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls.from_table(rows[:, 0], rows[:, 1], **kw)


IdsModel = IntegratedDensityOfStates


def disorder_digest(cfg: DisorderConfig) -> str:
    payload = {"type": type(cfg.distribution).__name__, **asdict(cfg)}
    payload.pop("realization_index", None)
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def ids_realization(d: int, side: int, boundary, disorder: DisorderConfig, index: int) -> np.ndarray:
    cube = LatticeCube(d, side, boundary)
    field = sample_potential(cube, disorder.realization(index))
    return full_spectrum(assemble(cube, field)).eigenvalues


def estimate_ids(
    d: int,
    side: int,
    boundary=Boundary.PERIODIC,
    disorder: Optional[DisorderConfig] = None,
    realizations: int = 200,
    max_knots: int = 20000,
    first_index: int = 0,
    mapper=map,
) -> IntegratedDensityOfStates:
    """Pool the spectra of ``realizations`` independent boxes into an IDS model.

    Realization ``r`` uses ``disorder.realization(first_index + r)``. ``mapper``
    may be any order-preserving map (e.g. an executor's), so the pooled sample
    does not depend on how the work is scheduled.
    """
    if realizations < 1:
        raise ValueError("need at least one realization")
    disorder = disorder or DisorderConfig()
    from functools import partial

    fn = partial(ids_realization, d, side, Boundary.coerce(boundary), disorder)
    spectra = list(mapper(fn, range(first_index, first_index + realizations)))
    meta = {
        "realizations": realizations,
        "side": side,
        "d": d,
        "boundary": Boundary.coerce(boundary).value,
        "disorder_digest": disorder_digest(disorder),
    }
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = IntegratedDensityOfStates(max_knots=max_knots).fit(np.concatenate(spectra), metadata=meta)
    if model.weak_:
        warnings.warn(
            f"IDS estimated from only {model.n_samples_} eigenvalues (< {WEAK_SAMPLE_SIZE})",
            RuntimeWarning,
            stacklevel=2,
        )
    return model


def ids_window(ids: IntegratedDensityOfStates, E0: float, mass: float) -> Tuple[float, float]:
    """Energy interval whose IDS image is centred at ``N(E0)`` with length ``mass``.

    Near the band edges the IDS image is clipped to ``[0, 1]``.
    """
    c = float(ids.transform(E0))
    lo = max(c - mass / 2, 0.0)
    hi = min(c + mass / 2, 1.0)
    return float(ids.inverse_transform(lo)), float(ids.inverse_transform(hi))


def alpha_window(ids: IntegratedDensityOfStates, E0: float, volume: int, alpha: float) -> Tuple[float, float]:
    """Window with ``N(I) = 2 |Lambda|^{-alpha}`` centred (in IDS units) at ``E0``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return ids_window(ids, E0, 2.0 * volume ** (-alpha))


def local_exponents(ids: IntegratedDensityOfStates, E0: float, eps: Sequence[float], a: float = 1.0) -> np.ndarray:
    """Diagnostic table of ``log|N(E0+a eps) - N(E0)| / log eps`` per ``eps``.

    Values near 1 indicate a nonvanishing density at ``E0``; this does not
    certify any lower bound on ``N``.
    """
    eps = np.asarray(eps, dtype=np.float64)
    inc = np.abs(ids.transform(E0 + a * eps) - ids.transform(E0))
    with np.errstate(divide="ignore"):
        expo = np.log(inc) / np.log(eps)
    return np.column_stack([eps, inc, expo])
