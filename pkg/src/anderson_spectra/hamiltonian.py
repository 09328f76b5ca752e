"""Lattice cubes, random potentials and finite-volume Anderson Hamiltonians.

The operator is ``H = -Delta + V`` on a cube of ``Z^d`` where the discrete
Laplacian acts as ``(-Delta u)_n = sum_{|m-n|=1} u_m``. Hopping entries are
therefore ``+1``. Many codes use ``-1`` instead; that only reflects the
spectrum through zero and leaves all spacing statistics unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Boundary",
    "LatticeCube",
    "Uniform",
    "SmoothBump",
    "DisorderConfig",
    "PotentialField",
    "HamiltonianMatrix",
    "uniform_stream",
    "build_laplacian",
    "sample_potential",
    "assemble",
    "subcube",
]

_MASK64 = (1 << 64) - 1
BUMP_TABLE_NODES = 4096


class Boundary(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"

    @classmethod
    def coerce(cls, value: Union[str, "Boundary"]) -> "Boundary":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown boundary condition {value!r}; expected 'periodic' or 'dirichlet'"
            ) from None


@dataclass(frozen=True)
class LatticeCube:
    """A cube of ``L**d`` lattice sites with its lowest corner at ``origin``.

    Sites are enumerated row-major over the local coordinates
    ``site - origin``, so index ``0`` is the origin and index ``L**d - 1`` is
    the opposite corner.
    """

    d: int
    L: int
    boundary: Boundary = Boundary.PERIODIC
    origin: tuple = None

    def __post_init__(self):
        if int(self.d) < 1:
            raise ValueError(f"dimension must be positive, got d={self.d}")
        if int(self.L) < 1:
            raise ValueError(f"side must be positive, got L={self.L}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "boundary", Boundary.coerce(self.boundary))
        origin = (0,) * self.d if self.origin is None else tuple(int(o) for o in self.origin)
        if len(origin) != self.d:
            raise ValueError(f"origin has length {len(origin)}, expected {self.d}")
        object.__setattr__(self, "origin", origin)
        if self.boundary is Boundary.PERIODIC and self.L < 3:
            raise ValueError(
                f"periodic boundary needs L >= 3 (got L={self.L}): for L <= 2 the "
                "wrap-around bond coincides with an existing bond and its weight is "
                "ambiguous; use boundary='dirichlet' for tiny cubes"
            )

    @property
    def shape(self) -> tuple:
        return (self.L,) * self.d

    @property
    def volume(self) -> int:
        return self.L**self.d

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def index(self, coords) -> np.ndarray:
        """Row-major index of absolute lattice coordinates (shape ``(..., d)``)."""
        local = np.asarray(coords, dtype=np.int64) - np.asarray(self.origin)
        local = np.atleast_2d(local)
        return np.ravel_multi_index(tuple(local.T), self.shape)

    def coords(self, index) -> np.ndarray:
        """Absolute lattice coordinates of row-major indices, shape ``(n, d)``."""
        local = np.stack(np.unravel_index(np.asarray(index, dtype=np.int64), self.shape), axis=-1)
        return local + np.asarray(self.origin)

    def sites(self) -> np.ndarray:
        return self.coords(np.arange(self.volume))

    def contains(self, other: "LatticeCube") -> bool:
        lo = np.asarray(other.origin) - np.asarray(self.origin)
        return other.d == self.d and bool(np.all(lo >= 0) and np.all(lo + other.L <= self.L))


@dataclass(frozen=True)
class Uniform:
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"Uniform needs lo < hi, got ({self.lo}, {self.hi})")

    @property
    def support(self) -> tuple:
        return (self.lo, self.hi)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        return self.lo + (self.hi - self.lo) * u


@dataclass(frozen=True)
class SmoothBump:
    """Compactly supported C-infinity density ``~ exp(-1/(1-t^2))``, ``t=(x-center)/halfwidth``."""

    center: float = 0.0
    halfwidth: float = 1.0

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError(f"SmoothBump needs halfwidth > 0, got {self.halfwidth}")

    @property
    def support(self) -> tuple:
        return (self.center - self.halfwidth, self.center + self.halfwidth)

    def from_unit(self, u: np.ndarray) -> np.ndarray:
        cdf, t = _bump_table()
        return self.center + self.halfwidth * np.interp(u, cdf, t)


@lru_cache(maxsize=1)
def _bump_table():
    t = np.linspace(-1.0, 1.0, BUMP_TABLE_NODES)
    inner = t[1:-1]
    dens = np.zeros_like(t)
    dens[1:-1] = np.exp(-1.0 / (1.0 - inner**2))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))])
    cdf /= cdf[-1]
    return cdf, t


Distribution = Union[Uniform, SmoothBump]


@dataclass(frozen=True)
class DisorderConfig:
    """On-site disorder ``lambda * omega_n`` with ``omega_n`` i.i.d. from ``distribution``."""

    distribution: Distribution = field(default_factory=Uniform)
    coupling: float = 1.0
    master_seed: int = 0
    realization_index: int = 0

    def __post_init__(self):
        if self.coupling < 0:
            raise ValueError(f"coupling must be >= 0, got {self.coupling}")
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if int(self.realization_index) < 0:
            raise ValueError("realization_index must be nonnegative")

    def realization(self, index: int) -> "DisorderConfig":
        return replace(self, realization_index=int(index))

    @property
    def support(self) -> tuple:
        lo, hi = self.distribution.support
        return (self.coupling * lo, self.coupling * hi)


def uniform_stream(master_seed: int, realization_index: int, n: int) -> np.ndarray:
    """Doubles in ``[0, 1)``; entry ``k`` depends only on (seed, index, k).

    Philox-4x64 keyed on ``(master_seed, realization_index)``; counter position
    ``k`` is the flattened site index, so any slice or any evaluation order
    reproduces the same bits.
    """
    key = (int(master_seed) & _MASK64) | ((int(realization_index) & _MASK64) << 64)
    raw = np.random.Philox(key=key).random_raw(int(n))
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True, eq=False)
class PotentialField:
    """Potential values on every site of ``parent``, stored with shape ``parent.shape``."""

    parent: LatticeCube
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).reshape(self.parent.shape)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def restrict(self, cube: LatticeCube) -> np.ndarray:
        """Values on ``cube`` flattened in the cube's row-major order."""
        if not self.parent.contains(cube):
            raise ValueError(
                f"cube with origin {cube.origin} and side {cube.L} exceeds the parent "
                f"cube (origin {self.parent.origin}, side {self.parent.L})"
            )
        lo = np.asarray(cube.origin) - np.asarray(self.parent.origin)
        sl = tuple(slice(a, a + cube.L) for a in lo)
        return self.values[sl].reshape(-1)

    def with_values(self, values: np.ndarray) -> "PotentialField":
        return PotentialField(self.parent, values)

    def to_csv(self, path) -> None:
        coords = self.parent.sites()
        flat = self.values.reshape(-1)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i}" for i in range(self.parent.d)] + ["value"])
            for c, v in zip(coords, flat):
                w.writerow([*map(int, c), repr(float(v))])

    @classmethod
    def from_csv(cls, path, L: int, boundary=Boundary.PERIODIC) -> "PotentialField":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        d = rows.shape[1] - 1
        coords = rows[:, :d].astype(np.int64)
        origin = tuple(coords.min(axis=0))
        cube = LatticeCube(d, L, boundary, origin)
        values = np.empty(cube.volume)
        values[cube.index(coords)] = rows[:, d]
        return cls(cube, values)

    def save(self, path) -> None:
        """Flat binary (``.npy``): values in row-major site order."""
        np.save(Path(path), self.values.reshape(-1))

    @classmethod
    def load(cls, path, parent: LatticeCube) -> "PotentialField":
        return cls(parent, np.load(Path(path)))


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    cube: LatticeCube
    matrix: sp.csr_matrix
    diagonal: np.ndarray

    @property
    def dim(self) -> int:
        return self.cube.volume

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def trace(self) -> float:
        return float(np.sum(self.diagonal))

    def frobenius_sq(self) -> float:
        return float(np.sum(self.matrix.data**2))


def _neighbor_pairs(cube: LatticeCube):
    idx = np.arange(cube.volume).reshape(cube.shape)
    rows, cols = [], []
    for axis in range(cube.d):
        if cube.periodic:
            nxt = np.roll(idx, -1, axis=axis)
            a, b = idx, nxt
        else:
            a = np.take(idx, np.arange(cube.L - 1), axis=axis)
            b = np.take(idx, np.arange(1, cube.L), axis=axis)
        rows.append(a.reshape(-1))
        cols.append(b.reshape(-1))
    if not rows:
        return np.empty(0, int), np.empty(0, int)
    return np.concatenate(rows), np.concatenate(cols)


def _operator(cube: LatticeCube, diagonal: np.ndarray) -> HamiltonianMatrix:
    i, j = _neighbor_pairs(cube)
    n = cube.volume
    r = np.concatenate([i, j, np.arange(n)])
    c = np.concatenate([j, i, np.arange(n)])
    data = np.concatenate([np.ones(2 * len(i)), diagonal])
    m = sp.coo_matrix((data, (r, c)), shape=(n, n)).tocsr()
    m.sum_duplicates()
    diagonal = np.array(diagonal, dtype=np.float64)
    diagonal.setflags(write=False)
    return HamiltonianMatrix(cube, m, diagonal)


def build_laplacian(cube: LatticeCube) -> HamiltonianMatrix:
    """``-Delta`` on ``cube``: ones on nearest-neighbour bonds, zero diagonal."""
    return _operator(cube, np.zeros(cube.volume))


def sample_potential(parent: LatticeCube, cfg: DisorderConfig) -> PotentialField:
    """I.i.d. potential on ``parent`` for the realization named by ``cfg``."""
    u = uniform_stream(cfg.master_seed, cfg.realization_index, parent.volume)
    values = cfg.coupling * cfg.distribution.from_unit(u)
    return PotentialField(parent, values)


def assemble(cube: LatticeCube, potential: PotentialField) -> HamiltonianMatrix:
    """``-Delta + V`` on ``cube`` with ``V`` read from ``potential`` (same realization)."""
    return _operator(cube, potential.restrict(cube))


def subcube(
    parent_field: PotentialField,
    origin: Sequence[int],
    side: int,
    boundary=Boundary.PERIODIC,
) -> HamiltonianMatrix:
    cube = LatticeCube(parent_field.parent.d, side, boundary, tuple(origin))
    return assemble(cube, parent_field)
