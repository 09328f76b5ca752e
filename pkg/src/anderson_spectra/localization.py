"""Localization centers and decay profiles of eigenvectors."""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import List, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .eigensolve import SpectralData
from .hamiltonian import LatticeCube

__all__ = [
    "TIE_TOLERANCE",
    "AMPLITUDE_FLOOR",
    "CenterRecord",
    "DecayFit",
    "lattice_distance",
    "centers",
    "center_diameter",
    "diameter_bound",
    "decay_fit",
    "spectrum_centers",
    "CenterExtractor",
    "write_centers_csv",
]

TIE_TOLERANCE = 1e-10
AMPLITUDE_FLOOR = 1e-14


@dataclass(frozen=True)
class DecayFit:
    log_amplitude: float
    rate: float
    stretch: float
    residual: float
    n_sites: int


@dataclass(frozen=True, eq=False)
class CenterRecord:
    center: np.ndarray
    center_set: np.ndarray
    index: Optional[int] = None
    energy: Optional[float] = None
    decay: Optional[DecayFit] = None

    @property
    def localized(self) -> bool:
        return self.decay is not None and self.decay.rate > 0


def lattice_distance(a, b, cube: LatticeCube) -> np.ndarray:
    """Torus distance under periodic boundary, Euclidean distance otherwise.

    ``a`` and ``b`` broadcast over leading axes; the last axis is the coordinate.
    """
    diff = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    if cube.periodic:
        diff = np.mod(diff, cube.L)
        diff = np.minimum(diff, cube.L - diff)
    return np.sqrt(np.sum(diff**2, axis=-1))


def centers(vector, cube: LatticeCube, tie_tol: float = TIE_TOLERANCE) -> CenterRecord:
    """Sites where ``|phi(x)|`` attains its maximum.

    Sites within a factor ``1 - tie_tol`` of the maximum join the set. The
    designated center is the lexicographically smallest site of the set.
    """
    phi = np.asarray(vector)
    if phi.shape != (cube.volume,):
        raise ValueError(f"vector has shape {phi.shape}, cube has {cube.volume} sites")
    amp = np.abs(phi)
    top = amp.max() if amp.size else 0.0
    if top == 0:
        raise ValueError("zero vector has no localization center")
    norm = np.linalg.norm(phi)
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"vector must be normalized (norm = {norm:.12g})")
    idx = np.flatnonzero(amp >= top * (1 - tie_tol))
    # row-major index order is lexicographic order of coordinates
    coords = cube.coords(idx)
    return CenterRecord(center=coords[0], center_set=coords)


def center_diameter(record: CenterRecord, cube: LatticeCube) -> float:
    pts = np.asarray(record.center_set)
    if len(pts) < 2:
        return 0.0
    dist = lattice_distance(pts[:, None, :], pts[None, :, :], cube)
    return float(dist.max())


def diameter_bound(cube: LatticeCube, const: float = 1.0, stretch: float = 1.0) -> float:
    """Reference scale ``const * (log |Lambda|)^(1/stretch)`` for center-set diameters."""
    return const * np.log(cube.volume) ** (1.0 / stretch)


def decay_fit(
    vector,
    center,
    cube: LatticeCube,
    stretch: float = 1.0,
    floor: float = AMPLITUDE_FLOOR,
) -> DecayFit:
    """Least-squares fit of ``log|phi(x)| = c - rate * dist(x, center)**stretch``.

    Only sites with ``|phi(x)| > floor`` enter the regression. ``rate`` is the
    inverse localization length in the stretched metric; ``residual`` is the
    RMS misfit in the log domain.
    """
    if not 0 < stretch <= 1:
        raise ValueError(f"stretch exponent must lie in (0, 1], got {stretch}")
    amp = np.abs(np.asarray(vector, dtype=np.float64))
    use = np.flatnonzero(amp > floor)
    if len(use) < 4:
        raise ValueError(f"only {len(use)} sites above the amplitude floor {floor:g}; need at least 4")
    r = lattice_distance(cube.coords(use), np.asarray(center), cube) ** stretch
    if np.ptp(r) == 0:
        raise ValueError("all usable sites are equidistant from the center; rate is undetermined")
    y = np.log(amp[use])
    A = np.column_stack([np.ones_like(r), -r])
    (c, rate), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([c, rate])
    return DecayFit(float(c), float(rate), float(stretch), float(np.sqrt(np.mean(resid**2))), len(use))


def spectrum_centers(
    spec: SpectralData,
    stretch: Optional[float] = None,
    tie_tol: float = TIE_TOLERANCE,
) -> List[CenterRecord]:
    """Center records for every stored eigenvector (optionally with decay fits)."""
    if spec.eigenvectors is None:
        raise ValueError("spectrum carries no eigenvectors")
    cube = spec.cube
    energies = spec.eigenvalues[np.searchsorted(spec.indices, spec.vector_indices)]
    out = []
    for col, (gi, e) in enumerate(zip(spec.vector_indices, energies)):
        v = spec.eigenvectors[:, col]
        rec = replace(centers(v, cube, tie_tol), index=int(gi), energy=float(e))
        if stretch is not None:
            rec = replace(rec, decay=decay_fit(v, rec.center, cube, stretch))
        out.append(rec)
    return out


class CenterExtractor(TransformerMixin, BaseEstimator):
    """Map eigenvector columns ``(n_sites, k)`` to center coordinates ``(k, d)``.

    Stateless apart from the lattice geometry; ``fit`` only validates it.
    """

    def __init__(self, cube: Optional[LatticeCube] = None, tie_tol: float = TIE_TOLERANCE):
        self.cube = cube
        self.tie_tol = tie_tol

    def fit(self, X=None, y=None):
        if not isinstance(self.cube, LatticeCube):
            raise ValueError("CenterExtractor needs a LatticeCube")
        self.n_sites_ = self.cube.volume
        return self

    def transform(self, X):
        V = np.asarray(X)
        if V.ndim == 1:
            V = V[:, None]
        if V.shape[0] != self.cube.volume:
            raise ValueError(f"expected {self.cube.volume} rows, got {V.shape[0]}")
        if V.shape[1] == 0:
            return np.empty((0, self.cube.d), dtype=np.int64)
        return np.stack([centers(V[:, k], self.cube, self.tie_tol).center for k in range(V.shape[1])])


def write_centers_csv(records: List[CenterRecord], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        d = len(records[0].center) if records else 1
        w.writerow(["j", "E"] + [f"x{i}" for i in range(d)] + ["gamma", "residual"])
        for r in records:
            g = "" if r.decay is None else repr(r.decay.rate)
            res = "" if r.decay is None else repr(r.decay.residual)
            e = "" if r.energy is None else repr(r.energy)
            w.writerow([r.index, e, *map(int, r.center), g, res])
