"""Unfolding, level-spacing and center-spacing statistics, local point processes."""

from __future__ import annotations

from dataclasses import dataclass
from math import gamma as gamma_fn
from math import pi
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .._validation import check_interval
from ..eigensolve import SpectralData
from ..hamiltonian import LatticeCube
from ..ids import IntegratedDensityOfStates
from .stepfunction import StepFunction

__all__ = [
    "PointSample",
    "counting",
    "unfold",
    "local_process",
    "dls",
    "dls_macroscopic",
    "limit_g",
    "dcs",
    "nearest_center_distances",
    "dcs_limit",
    "poisson_nn_survival",
    "joint_process",
    "count_in_boxes",
    "count_ratio",
    "centered_coordinates",
]


@dataclass(frozen=True, eq=False)
class PointSample:
    """Unfolded points with the window and scaling that produced them.

    ``positions`` (optional) are rescaled localization centers aligned with
    ``points``; ``indices`` are the global eigenvalue indices.
    """

    points: np.ndarray
    E0: float
    scale: float
    window: Optional[Tuple[float, float]] = None
    indices: Optional[np.ndarray] = None
    positions: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.points)


def counting(spec, interval) -> int:
    """Number of eigenvalues (with multiplicity) in the closed ``interval``."""
    a, b = check_interval(interval)
    ev = getattr(spec, "eigenvalues", spec)
    ev = np.asarray(ev)
    return int(np.count_nonzero((ev >= a) & (ev <= b)))


def _in_window(spec: SpectralData, interval) -> np.ndarray:
    if interval is None:
        return np.ones(len(spec.eigenvalues), dtype=bool)
    a, b = check_interval(interval)
    return (spec.eigenvalues >= a) & (spec.eigenvalues <= b)


def unfold(
    spec: SpectralData,
    ids: IntegratedDensityOfStates,
    E0: float,
    scale: float,
    window=None,
) -> PointSample:
    """``xi_j = scale * (N(E_j) - N(E0))`` for eigenvalues in ``window`` (all if None)."""
    mask = _in_window(spec, window)
    xi = scale * (ids.transform(spec.eigenvalues[mask]) - ids.transform(E0))
    win = None if window is None else check_interval(window)
    return PointSample(np.asarray(xi), float(E0), float(scale), win, np.asarray(spec.indices)[mask])


def local_process(
    spec: SpectralData,
    ids: IntegratedDensityOfStates,
    E0: float,
    scale: Optional[float] = None,
    window=None,
) -> PointSample:
    """Unfolded local level process near ``E0``; ``scale`` defaults to ``|Lambda|``."""
    scale = spec.cube.volume if scale is None else scale
    return unfold(spec, ids, E0, scale, window)


def _spacings(spec: SpectralData, interval, transform, drop_edge: bool):
    """Spacings to the next eigenvalue of the full spectrum for in-window levels."""
    a, b = check_interval(interval)
    ev = spec.eigenvalues
    full = np.arange(len(ev))
    inside = full[(ev >= a) & (ev <= b)]
    if len(inside) == 0:
        raise ValueError(f"no eigenvalues in the window [{a}, {b}]")
    has_next = inside[inside + 1 < len(ev)]
    if drop_edge:
        has_next = has_next[ev[np.minimum(has_next + 1, len(ev) - 1)] <= b]
    t = transform(ev)
    gaps = t[has_next + 1] - t[has_next]
    return np.maximum(gaps, 0.0), len(inside)


def dls(
    spec: SpectralData,
    ids: IntegratedDensityOfStates,
    interval,
    volume: Optional[int] = None,
    drop_edge: bool = False,
) -> StepFunction:
    """Empirical distribution of unfolded spacings ``|Lambda| (N(E_{j+1}) - N(E_j))``.

    ``j`` runs over eigenvalues in ``interval``; ``E_{j+1}`` is the next
    eigenvalue of the whole spectrum even when it lies outside the window
    (``drop_edge=True`` discards such spacings instead). The denominator is the
    number of eigenvalues in the window.
    """
    volume = spec.cube.volume if volume is None else volume
    gaps, n = _spacings(spec, interval, ids.transform, drop_edge)
    return StepFunction(volume * gaps, n if not drop_edge else max(len(gaps), 1))


def dls_macroscopic(
    spec: SpectralData,
    ids: IntegratedDensityOfStates,
    J,
    volume: Optional[int] = None,
    drop_edge: bool = False,
) -> StepFunction:
    """Spacings scaled by the mean density over ``J``: ``N(J)/|J| * |Lambda| * (E_{j+1}-E_j)``."""
    a, b = check_interval(J, "J")
    mass = ids.mass((a, b))
    if not mass > 0 or not b > a:
        raise ValueError(f"J = [{a}, {b}] carries no IDS mass")
    volume = spec.cube.volume if volume is None else volume
    gaps, n = _spacings(spec, (a, b), lambda e: e, drop_edge)
    return StepFunction(mass / (b - a) * volume * gaps, n if not drop_edge else max(len(gaps), 1))


def limit_g(ids: IntegratedDensityOfStates, J, x) -> np.ndarray:
    """``g(x) = int_J exp(-nu_J(l) |J| x) nu_J(l) dl`` with ``nu_J = nu / N(J)``.

    ``nu`` is the derivative of the piecewise-linear IDS, constant on each
    knot cell, so the trapezoid rule on the knot grid (with ``J``'s endpoints
    inserted) integrates it exactly. ``g(0) = 1``.
    """
    a, b = check_interval(J, "J")
    knots, slopes = ids.slopes()
    grid = np.union1d(knots[(knots > a) & (knots < b)], [a, b])
    mid = 0.5 * (grid[1:] + grid[:-1])
    cell = np.clip(np.searchsorted(knots, mid, side="right") - 1, -1, len(slopes))
    nu = np.where((cell >= 0) & (cell < len(slopes)), slopes[np.clip(cell, 0, len(slopes) - 1)], 0.0)
    w = np.diff(grid)
    mass = np.sum(nu * w)
    if not mass > 0:
        raise ValueError(f"J = [{a}, {b}] carries no IDS mass")
    nuJ = nu / mass
    x = np.asarray(x, dtype=np.float64)
    flat = x.ravel()
    out = np.empty_like(flat)
    # bound the (points x cells) work array to a few million entries
    step = max(1, 4_000_000 // max(len(nuJ), 1))
    for i in range(0, len(flat), step):
        out[i : i + step] = np.exp(-np.multiply.outer(flat[i : i + step], nuJ) * (b - a)) @ (nuJ * w)
    return out.reshape(x.shape)


def nearest_center_distances(positions, cube: LatticeCube) -> np.ndarray:
    """Distance from each center to its nearest other center (torus metric if periodic)."""
    pts = np.asarray(positions, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) < 2:
        raise ValueError("need at least two centers")
    if cube.periodic:
        local = np.mod(pts - np.asarray(cube.origin), cube.L)
        tree = cKDTree(local, boxsize=cube.L)
    else:
        local = pts
        tree = cKDTree(local)
    dist, _ = tree.query(local, k=2)
    return dist[:, 1]


def dcs(positions, mass: float, cube: LatticeCube) -> StepFunction:
    """Distribution of ``mass**(1/d) * min_{i != j} |x_i - x_j|`` over window centers.

    ``mass`` is the IDS mass ``N(E0 + I)`` of the energy window the centers
    belong to.
    """
    if not mass > 0:
        raise ValueError("IDS mass of the window must be positive")
    dist = nearest_center_distances(positions, cube)
    return StepFunction(mass ** (1.0 / cube.d) * dist)


def dcs_limit(s, d: int = 1):
    """``exp(-s**d)``."""
    s = np.asarray(s, dtype=np.float64)
    return np.exp(-(np.maximum(s, 0.0) ** d))


def poisson_nn_survival(s, d: int = 1):
    """Nearest-neighbour survival ``exp(-|B_1| s^d)`` of a unit-intensity Poisson process.

    ``|B_1|`` is the volume of the Euclidean unit ball (2 in one dimension).
    """
    s = np.asarray(s, dtype=np.float64)
    ball = pi ** (d / 2) / gamma_fn(d / 2 + 1)
    return np.exp(-ball * np.maximum(s, 0.0) ** d)


def centered_coordinates(coords, cube: LatticeCube) -> np.ndarray:
    """Site coordinates relative to the cube's central site ``origin + L // 2``."""
    return np.asarray(coords, dtype=np.float64) - (np.asarray(cube.origin) + cube.L // 2)


def joint_process(
    spec: SpectralData,
    ids: IntegratedDensityOfStates,
    positions,
    E0: float,
    ell: float,
    ell_tilde: Optional[float] = None,
    window=None,
) -> PointSample:
    """Pairs ``(ell^d (N(E_j) - N(E0)), x_j / ell_tilde)`` for window eigenvalues.

    ``positions`` holds one center per in-window eigenvalue, in eigenvalue
    order. ``ell_tilde`` defaults to ``ell`` (covariant scaling); with
    ``ell = ell_tilde = L`` the centers land in ``[-1/2, 1/2]^d``.
    """
    ell_tilde = ell if ell_tilde is None else ell_tilde
    if ell < 1 or ell_tilde < 1:
        raise ValueError("length scales must be >= 1")
    cube = spec.cube
    base = unfold(spec, ids, E0, float(ell) ** cube.d, window)
    pos = np.asarray(positions, dtype=np.float64).reshape(len(base.points), cube.d)
    scaled = centered_coordinates(pos, cube) / ell_tilde
    return PointSample(base.points, base.E0, base.scale, base.window, base.indices, scaled)


def count_in_boxes(sample: PointSample, boxes: Sequence) -> np.ndarray:
    """Counts of points in half-open boxes ``[a, b) x prod_i [lo_i, hi_i)``.

    Each box is ``(interval, cube)`` where ``cube`` is a sequence of per-axis
    ``(lo, hi)`` pairs, or ``None`` to ignore positions.
    """
    pts = np.asarray(sample.points)
    out = np.zeros(len(boxes), dtype=np.int64)
    for n, (interval, region) in enumerate(boxes):
        a, b = check_interval(interval)
        mask = (pts >= a) & (pts < b)
        if region is not None:
            if sample.positions is None:
                raise ValueError("sample has no positions to test against a spatial box")
            pos = np.asarray(sample.positions)
            for axis, (lo, hi) in enumerate(region):
                mask &= (pos[:, axis] >= lo) & (pos[:, axis] < hi)
        out[n] = int(np.count_nonzero(mask))
    return out


def count_ratio(sample: PointSample, boxes: Sequence, ell: float, ell_tilde: float, d: int = 1) -> np.ndarray:
    """Box counts multiplied by ``(ell / ell_tilde)**(-d)``.

    For the non-covariant scaling ``ell_tilde != ell`` this is the count
    normalization compared against the box volume; no almost-sure limit is
    implied.
    """
    if ell < 1 or ell_tilde < 1:
        raise ValueError("length scales must be >= 1")
    return count_in_boxes(sample, boxes) * (float(ell) / float(ell_tilde)) ** (-d)
