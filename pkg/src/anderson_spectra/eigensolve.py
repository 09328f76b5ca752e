"""Dense symmetric diagonalization of finite-volume Hamiltonians.

LAPACK ``dsyev`` (Householder tridiagonalization followed by implicit-shift
QL/QR) computes the full spectrum. When eigenvectors are only needed inside an
energy window, the window's index range is read off the full spectrum and
``dsyevr`` returns just those columns, so indices stay consistent.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as sla

from .hamiltonian import HamiltonianMatrix, LatticeCube

__all__ = [
    "DEFAULT_DIMENSION_CAP",
    "DimensionCapError",
    "SpectralData",
    "full_spectrum",
    "window",
    "index_range",
    "check_invariants",
]

DEFAULT_DIMENSION_CAP = 8192


class DimensionCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SpectralData:
    """Sorted eigenvalues (with multiplicity) and optionally some eigenvectors.

    ``indices[k]`` is the global (full-spectrum) index of ``eigenvalues[k]``.
    ``eigenvectors[:, m]`` belongs to global index ``vector_indices[m]``; for a
    full solve with vectors the two index arrays coincide.
    """

    eigenvalues: np.ndarray
    cube: Optional[LatticeCube] = None
    eigenvectors: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None
    vector_indices: Optional[np.ndarray] = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=np.float64)
        object.__setattr__(self, "eigenvalues", ev)
        if self.indices is None:
            object.__setattr__(self, "indices", np.arange(len(ev)))
        if self.eigenvectors is not None and self.vector_indices is None:
            object.__setattr__(self, "vector_indices", np.asarray(self.indices))

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def has_vectors(self) -> bool:
        return self.eigenvectors is not None

    def vector(self, global_index: int) -> np.ndarray:
        if self.eigenvectors is None:
            raise ValueError("spectrum was computed without eigenvectors")
        pos = np.flatnonzero(self.vector_indices == global_index)
        if len(pos) == 0:
            raise KeyError(f"no eigenvector stored for global index {global_index}")
        return self.eigenvectors[:, pos[0]]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "eigenvalue"])
            for i, e in zip(self.indices, self.eigenvalues):
                w.writerow([int(i), repr(float(e))])

    def save_vectors(self, path) -> None:
        """Eigenvectors as ``.npy``; the numpy header records shape and dtype."""
        if self.eigenvectors is None:
            raise ValueError("no eigenvectors to save")
        np.save(path, self.eigenvectors)


def index_range(eigenvalues: np.ndarray, interval: Tuple[float, float]) -> Tuple[int, int]:
    """Half-open index range ``[lo, hi)`` of sorted eigenvalues inside the closed interval."""
    a, b = interval
    lo = int(np.searchsorted(eigenvalues, a, side="left"))
    hi = int(np.searchsorted(eigenvalues, b, side="right"))
    return lo, max(lo, hi)


def full_spectrum(
    H: HamiltonianMatrix,
    want_vectors: bool = False,
    vector_window: Optional[Tuple[float, float]] = None,
    dimension_cap: int = DEFAULT_DIMENSION_CAP,
) -> SpectralData:
    """All eigenvalues of ``H``; eigenvectors for all of them or for a window.

    Parameters
    ----------
    H : HamiltonianMatrix
    want_vectors : bool
        Return every eigenvector (orthonormal columns).
    vector_window : (float, float), optional
        Return only the eigenvectors whose eigenvalue lies in this closed
        interval. Ignored when ``want_vectors`` is set.
    dimension_cap : int
        Refuse matrices larger than this.
    """
    n = H.dim
    if n > dimension_cap:
        raise DimensionCapError(
            f"matrix dimension {n} exceeds the dense-solver cap {dimension_cap}; "
            "reduce L (or d), or raise the cap explicitly if memory allows"
        )
    A = H.toarray()
    if want_vectors:
        w, v = sla.eigh(A, driver="ev")
        return SpectralData(w, H.cube, v)
    w = sla.eigvalsh(A, driver="ev")
    if vector_window is None:
        return SpectralData(w, H.cube)
    lo, hi = index_range(w, vector_window)
    if hi == lo:
        return SpectralData(w, H.cube, np.empty((n, 0)), vector_indices=np.empty(0, int))
    _, v = sla.eigh(A, subset_by_index=(lo, hi - 1), driver="evr")
    return SpectralData(w, H.cube, v, vector_indices=np.arange(lo, hi))


def window(spec: SpectralData, interval: Tuple[float, float]) -> SpectralData:
    """Eigenpairs with eigenvalue in the closed ``interval``; global indices kept."""
    a, b = interval
    keep = (spec.eigenvalues >= a) & (spec.eigenvalues <= b)
    vecs = vidx = None
    if spec.eigenvectors is not None:
        wanted = set(np.asarray(spec.indices)[keep].tolist())
        vmask = np.array([i in wanted for i in spec.vector_indices], dtype=bool)
        vecs = spec.eigenvectors[:, vmask]
        vidx = np.asarray(spec.vector_indices)[vmask]
    return SpectralData(spec.eigenvalues[keep], spec.cube, vecs, np.asarray(spec.indices)[keep], vidx)


def check_invariants(H: HamiltonianMatrix, spec: SpectralData) -> dict:
    """Relative trace / Frobenius errors and, with vectors, orthonormality and residual."""
    w = spec.eigenvalues
    tr = H.trace()
    fro = H.frobenius_sq()
    out = {
        "sorted": bool(np.all(np.diff(w) >= 0)),
        "trace_rel": abs(w.sum() - tr) / max(abs(tr), 1.0),
        "frobenius_rel": abs(np.sum(w**2) - fro) / max(fro, 1.0),
    }
    if spec.eigenvectors is not None and spec.eigenvectors.shape[1]:
        V = spec.eigenvectors
        k = V.shape[1]
        out["orthonormality"] = float(np.max(np.abs(V.T @ V - np.eye(k))))
        vals = w[np.searchsorted(spec.indices, spec.vector_indices)]
        R = H.matrix @ V - V * vals
        norm = max(np.sqrt(fro), 1.0)
        out["residual_rel"] = float(np.max(np.linalg.norm(R, axis=0)) / norm)
    return out
