"""Two-scale approximation: tile a cube by sub-cubes separated by buffers, solve each
sub-cube on the shared potential and pair big-box eigenvalues with sub-box ones.

Per axis the layout is ``buffer, cube, buffer, cube, ..., cube, buffer`` with
``k`` cubes of side ``ell`` and buffers of width ``ell_prime``; any rounding
remainder widens the last buffer, so ``(ell + ell_prime) k + ell_prime + r = L``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from functools import partial
from itertools import product
from math import exp, floor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from ._validation import check_interval
from .eigensolve import DEFAULT_DIMENSION_CAP, SpectralData, full_spectrum, window
from .hamiltonian import Boundary, LatticeCube, PotentialField, assemble, subcube
from .localization import centers

__all__ = [
    "InfeasibleGeometryError",
    "Decomposition",
    "decompose",
    "decompose_lengths",
    "CubeSpectrum",
    "local_eigen",
    "monotone_assignment",
    "MatchPair",
    "Unmatched",
    "MatchReport",
    "match",
    "match_realization",
    "BernoulliStats",
    "bernoulli_stats",
]

DEFAULT_TOLERANCE = 1e-6


class InfeasibleGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Decomposition:
    """Sub-cube layout of a parent cube of side ``L``.

    ``remainder`` is the extra width of the last buffer on every axis.
    ``origins`` lists the lowest corner of each sub-cube in row-major order
    of the ``k**d`` grid, in the parent's coordinates.
    """

    L: int
    ell: int
    ell_prime: int
    k: int
    d: int = 1
    remainder: int = 0
    beta: Optional[float] = None
    beta_prime: Optional[float] = None
    parent_origin: Tuple[int, ...] = ()

    def __post_init__(self):
        if not self.parent_origin:
            object.__setattr__(self, "parent_origin", (0,) * self.d)
        if (self.ell + self.ell_prime) * self.k + self.ell_prime + self.remainder != self.L:
            raise InfeasibleGeometryError("layout identity (ell + ell') k + ell' + r = L violated")
        if self.remainder < 0:
            raise InfeasibleGeometryError("negative remainder in the last buffer")

    @property
    def starts(self) -> np.ndarray:
        """Per-axis offsets of the sub-cubes relative to the parent origin."""
        return self.ell_prime + np.arange(self.k) * (self.ell + self.ell_prime)

    @property
    def n_cubes(self) -> int:
        return self.k**self.d

    @property
    def origins(self) -> List[Tuple[int, ...]]:
        base = np.asarray(self.parent_origin)
        return [tuple(int(v) for v in base + np.array(c)) for c in product(self.starts.tolist(), repeat=self.d)]

    def layout(self) -> List[int]:
        """Per-axis segment widths, alternating buffer and cube."""
        out = [self.ell_prime]
        for i in range(self.k):
            out += [self.ell, self.ell_prime + (self.remainder if i == self.k - 1 else 0)]
        return out

    def cubes(self, boundary=Boundary.PERIODIC) -> List[LatticeCube]:
        return [LatticeCube(self.d, self.ell, boundary, o) for o in self.origins]

    @property
    def uncovered_volume(self) -> int:
        return self.L**self.d - self.n_cubes * self.ell**self.d

    def core_bounds(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Closed per-axis bounds of the core of cube ``j``: sites at distance >= ell' from its exterior."""
        o = np.asarray(self.origins[j])
        return o + self.ell_prime - 1, o + self.ell - self.ell_prime

    def locate(self, x) -> Tuple[Optional[int], bool]:
        """Cube whose core contains site ``x`` (closed membership) and a borderline flag."""
        x = np.asarray(x) - np.asarray(self.parent_origin)
        idx = []
        border = False
        for c in x:
            i = int(np.searchsorted(self.starts, c, side="right")) - 1
            if i < 0:
                return None, False
            local = c - self.starts[i]
            if not (self.ell_prime - 1 <= local <= self.ell - self.ell_prime):
                return None, False
            border |= local in (self.ell_prime - 1, self.ell - self.ell_prime)
            idx.append(i)
        return int(np.ravel_multi_index(tuple(idx), (self.k,) * self.d)), bool(border)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "ell": self.ell,
            "ell_prime": self.ell_prime,
            "k": self.k,
            "d": self.d,
            "remainder": self.remainder,
            "beta": self.beta,
            "beta_prime": self.beta_prime,
        }


def decompose_lengths(L: int, ell: int, ell_prime: int, d: int = 1, origin=None) -> Decomposition:
    """Fit as many cubes of side ``ell`` as possible with buffers ``ell_prime``."""
    if ell_prime < 1:
        raise InfeasibleGeometryError(f"buffer ell' = {ell_prime} violates ell' >= 1")
    if ell < 1:
        raise InfeasibleGeometryError(f"cube side ell = {ell} violates ell >= 1")
    k = (L - ell_prime) // (ell + ell_prime)
    if k < 1:
        raise InfeasibleGeometryError(f"L = {L} violates L >= ell + 2 ell' = {ell + 2 * ell_prime}")
    r = L - (ell + ell_prime) * k - ell_prime
    return Decomposition(L, ell, ell_prime, k, d, r, parent_origin=tuple(origin) if origin is not None else ())


def decompose(L: int, beta: float, beta_prime: float, d: int = 1, origin=None) -> Decomposition:
    """Layout with ``ell' = round(L**beta')``, ``k = floor(L**(1-beta))``.

    ``ell = floor((L - (k+1) ell') / k)``; the remainder widens the last buffer.
    """
    if not 0 < beta_prime < beta < 1:
        raise ValueError(f"need 0 < beta' < beta < 1, got beta={beta}, beta'={beta_prime}")
    ell_prime = int(round(L**beta_prime))
    k = int(floor(L ** (1 - beta)))
    if ell_prime < 1:
        raise InfeasibleGeometryError(f"ell' = round(L^beta') = {ell_prime} violates ell' >= 1")
    if k < 1:
        raise InfeasibleGeometryError(f"k = floor(L^(1-beta)) = {k} violates k >= 1")
    ell = (L - (k + 1) * ell_prime) // k
    if ell <= 0:
        raise InfeasibleGeometryError(f"ell = (L - (k+1) ell') / k = {ell} violates ell > 0 (L={L}, k={k}, ell'={ell_prime})")
    r = L - (ell + ell_prime) * k - ell_prime
    return Decomposition(L, ell, ell_prime, k, d, r, beta, beta_prime, tuple(origin) if origin is not None else ())


@dataclass(frozen=True, eq=False)
class CubeSpectrum:
    """In-window eigenpairs of one sub-cube.

    ``spectrum`` covers the window widened by the matching margin;
    ``in_window`` marks the eigenvalues inside the window proper. ``centers``
    are in parent coordinates. ``X`` is the indicator: exactly one eigenvalue
    in the window and its center inside the cube's core.
    """

    j: int
    origin: Tuple[int, ...]
    spectrum: SpectralData
    centers: np.ndarray
    in_window: np.ndarray
    in_core: np.ndarray

    @property
    def energies(self) -> np.ndarray:
        return self.spectrum.eigenvalues

    @property
    def n_in_window(self) -> int:
        return int(np.count_nonzero(self.in_window))

    @property
    def X(self) -> int:
        return int(self.n_in_window == 1 and bool(self.in_core[self.in_window][0]))


def _solve_cube(field: PotentialField, decomp: Decomposition, win, wide, boundary, cap, j) -> CubeSpectrum:
    origin = decomp.origins[j]
    H = subcube(field, origin, decomp.ell, boundary)
    spec = window(full_spectrum(H, vector_window=wide, dimension_cap=cap), wide)
    cube = H.cube
    lo, hi = decomp.core_bounds(j)
    if len(spec):
        pos = np.stack([centers(spec.vector(g), cube).center for g in spec.indices])
        core = np.all((pos >= lo) & (pos <= hi), axis=1)
    else:
        pos = np.empty((0, decomp.d), dtype=np.int64)
        core = np.empty(0, dtype=bool)
    inside = (spec.eigenvalues >= win[0]) & (spec.eigenvalues <= win[1])
    return CubeSpectrum(j, origin, spec, pos, inside, core)


def local_eigen(
    field: PotentialField,
    decomp: Decomposition,
    interval,
    boundary=Boundary.PERIODIC,
    margin: float = 0.0,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    mapper=map,
) -> List[CubeSpectrum]:
    """Windowed spectra, centers and indicators for every sub-cube.

    Each sub-cube Hamiltonian reads the potential restricted to it, so its
    spectrum depends on nothing outside. ``margin`` widens the window by that
    amount on both sides to give the matcher partners for big eigenvalues near
    the window edges; the indicators use the window itself.
    """
    a, b = check_interval(interval)
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    fn = partial(_solve_cube, field, decomp, (a, b), (a - margin, b + margin), Boundary.coerce(boundary), dimension_cap)
    return list(mapper(fn, range(decomp.n_cubes)))


def monotone_assignment(a, b) -> List[Tuple[int, int]]:
    """Order-preserving injective pairing of sorted ``a`` and ``b`` minimizing ``sum |a_i - b_j|``.

    ``min(len(a), len(b))`` pairs are formed. Returns index pairs ``(i, j)``.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    swap = len(a) > len(b)
    if swap:
        a, b = b, a
    m, n = len(a), len(b)
    if m == 0:
        return []
    # cost[i, j]: best cost pairing a[:i] into b[:j]
    cost = np.full((m + 1, n + 1), np.inf)
    cost[0, :] = 0.0
    for i in range(1, m + 1):
        for j in range(i, n + 1):
            take = cost[i - 1, j - 1] + abs(a[i - 1] - b[j - 1])
            cost[i, j] = min(cost[i, j - 1], take)
    pairs = []
    i, j = m, n
    while i > 0:
        if j > i and cost[i, j] == cost[i, j - 1]:
            j -= 1
        else:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
    pairs.reverse()
    return [(q, p) for p, q in pairs] if swap else pairs


@dataclass(frozen=True)
class MatchPair:
    big_index: int
    energy: float
    cube: int
    local_energy: float
    dE: float


@dataclass(frozen=True)
class Unmatched:
    big_index: int
    energy: float
    reason: str
    cube: Optional[int] = None


@dataclass(frozen=True, eq=False)
class MatchReport:
    decomposition: Decomposition
    window: Tuple[float, float]
    tol: float
    pairs: Tuple[MatchPair, ...]
    unmatched: Tuple[Unmatched, ...]
    X: np.ndarray
    multi_cubes: Tuple[int, ...]
    borderline: Tuple[int, ...] = ()
    n_big: int = 0

    @property
    def n_matched(self) -> int:
        return len(self.pairs)

    @property
    def n_eligible(self) -> int:
        """Big eigenvalues whose center lies in some sub-cube core."""
        return self.n_matched + sum(u.reason != "buffer" for u in self.unmatched)

    @property
    def matched_fraction(self) -> float:
        return self.n_matched / self.n_eligible if self.n_eligible else float("nan")

    @property
    def coverage(self) -> float:
        return self.n_eligible / self.n_big if self.n_big else float("nan")

    @property
    def overall_fraction(self) -> float:
        return self.n_matched / self.n_big if self.n_big else float("nan")

    @property
    def dE(self) -> np.ndarray:
        return np.array([p.dE for p in self.pairs], dtype=np.float64)

    @property
    def median_dE(self) -> float:
        return float(np.median(self.dE)) if self.pairs else float("nan")

    @property
    def max_dE(self) -> float:
        return float(np.max(self.dE)) if self.pairs else float("nan")

    @property
    def n_multi_cubes(self) -> int:
        return len(self.multi_cubes)

    def summary(self) -> dict:
        dec = self.decomposition
        return {
            "L": dec.L,
            "ell": dec.ell,
            "ell_prime": dec.ell_prime,
            "k": dec.k,
            "window": list(self.window),
            "tol": self.tol,
            "asymptotic_bound": exp(-dec.ell_prime),
            "n_big": self.n_big,
            "n_eligible": self.n_eligible,
            "n_matched": self.n_matched,
            "matched_fraction": self.matched_fraction,
            "coverage": self.coverage,
            "overall_fraction": self.overall_fraction,
            "median_dE": self.median_dE,
            "max_dE": self.max_dE,
            "n_multi_cubes": self.n_multi_cubes,
            "n_unmatched": len(self.unmatched),
            "n_borderline": len(self.borderline),
        }

    def to_json(self, path=None) -> str:
        text = json.dumps(self.summary(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text

    def pairs_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["big_index", "E", "cube", "E_local", "dE"])
            for p in self.pairs:
                w.writerow([p.big_index, repr(p.energy), p.cube, repr(p.local_energy), repr(p.dE)])


def match(
    big: SpectralData,
    big_centers,
    cubes: Sequence[CubeSpectrum],
    decomp: Decomposition,
    interval,
    tol: float = DEFAULT_TOLERANCE,
) -> MatchReport:
    """Pair in-window big-box eigenvalues with sub-cube eigenvalues.

    A big eigenvalue is eligible when its center lies in the core of some
    sub-cube; it is then paired, by monotone assignment within that cube,
    with a local eigenvalue (window plus margin) and kept if ``|dE| <= tol``.

    Parameters
    ----------
    big : SpectralData
        Big-box spectrum; only eigenvalues inside ``interval`` are matched.
    big_centers : array, shape (n, d)
        Centers aligned with the in-window eigenvalues of ``big``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    a, b = check_interval(interval)
    mask = (big.eigenvalues >= a) & (big.eigenvalues <= b)
    energies = big.eigenvalues[mask]
    gidx = np.asarray(big.indices)[mask]
    pos = np.asarray(big_centers).reshape(len(energies), decomp.d)
    by_cube = {}
    unmatched: List[Unmatched] = []
    borderline = []
    for e, g, x in zip(energies, gidx, pos):
        j, border = decomp.locate(x)
        if j is None:
            unmatched.append(Unmatched(int(g), float(e), "buffer"))
            continue
        if border:
            borderline.append(int(g))
        by_cube.setdefault(j, []).append((float(e), int(g)))
    pairs: List[MatchPair] = []
    for j in sorted(by_cube):
        members = sorted(by_cube[j])
        local = cubes[j].energies
        assigned = dict(monotone_assignment([m[0] for m in members], local))
        for i, (e, g) in enumerate(members):
            if i not in assigned:
                unmatched.append(Unmatched(g, e, "no_local_eigenvalue", j))
                continue
            le = float(local[assigned[i]])
            dE = abs(e - le)
            if dE <= tol:
                pairs.append(MatchPair(g, e, j, le, dE))
            else:
                unmatched.append(Unmatched(g, e, "tolerance", j))
    pairs.sort(key=lambda p: p.big_index)
    unmatched.sort(key=lambda u: u.big_index)
    X = np.array([c.X for c in cubes], dtype=np.int8)
    multi = tuple(c.j for c in cubes if c.n_in_window >= 2)
    return MatchReport(decomp, (a, b), float(tol), tuple(pairs), tuple(unmatched), X, multi, tuple(borderline), len(energies))


def match_realization(
    field: PotentialField,
    decomp: Decomposition,
    interval,
    boundary=Boundary.PERIODIC,
    tol: float = DEFAULT_TOLERANCE,
    margin: Optional[float] = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
    mapper=map,
) -> Tuple[MatchReport, List[CubeSpectrum]]:
    """Solve the big box and every sub-cube on ``field`` and match them.

    ``margin`` defaults to ``tol``: a local partner further outside the
    window could not pass the tolerance anyway.
    """
    a, b = check_interval(interval)
    margin = tol if margin is None else margin
    big = window(full_spectrum(assemble(field.parent, field), vector_window=(a, b), dimension_cap=dimension_cap), (a, b))
    if len(big):
        pos = np.stack([centers(big.vector(g), field.parent).center for g in big.indices])
    else:
        pos = np.empty((0, decomp.d), dtype=np.int64)
    cubes = local_eigen(field, decomp, (a, b), boundary, margin, dimension_cap, mapper)
    return match(big, pos, cubes, decomp, (a, b), tol), cubes


@dataclass(frozen=True)
class BernoulliStats:
    n: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    expected: float
    p_multi: float
    confidence: float = 0.95

    def within(self, allowance: float = 0.0) -> bool:
        """Whether ``expected`` lies in the CI widened by ``allowance * expected``."""
        slack = allowance * self.expected
        return self.ci_low - slack <= self.expected <= self.ci_high + slack

    @property
    def deviation(self) -> float:
        return abs(self.p_hat - self.expected)


def bernoulli_stats(
    X,
    mass: float,
    ell: int,
    d: int = 1,
    multi=None,
    confidence: float = 0.95,
) -> BernoulliStats:
    """Empirical ``P(X = 1)`` with a Clopper-Pearson interval against ``N(I) ell^d``.

    ``multi`` optionally holds per-cube flags for two or more in-window
    eigenvalues; its mean is reported as ``p_multi``.
    """
    x = np.asarray(X).ravel()
    if len(x) < 50:
        raise ValueError(f"ensemble of {len(x)} sub-cubes is too small (need >= 50)")
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("indicators must be 0 or 1")
    s = int(x.sum())
    ci = stats.binomtest(s, len(x)).proportion_ci(confidence_level=confidence, method="exact")
    pm = float(np.mean(np.asarray(multi).ravel())) if multi is not None else float("nan")
    return BernoulliStats(len(x), s, s / len(x), float(ci.low), float(ci.high), float(mass) * ell**d, pm, confidence)
