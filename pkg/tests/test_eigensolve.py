import numpy as np
import pytest
import scipy.sparse as sp

from anderson_spectra.eigensolve import (
    DimensionCapError,
    SpectralData,
    check_invariants,
    full_spectrum,
    index_range,
    window,
)
from anderson_spectra.hamiltonian import (
    DisorderConfig,
    HamiltonianMatrix,
    LatticeCube,
    assemble,
    build_laplacian,
    sample_potential,
)


def sturm_count(A: np.ndarray, sigma: float) -> int:
    """Eigenvalues of symmetric ``A`` below ``sigma``: negative pivots of A - sigma I."""
    M = [[float(A[i][j]) - (sigma if i == j else 0.0) for j in range(len(A))] for i in range(len(A))]
    n = len(M)
    neg = 0
    for k in range(n):
        piv = M[k][k]
        if piv == 0.0:
            piv = 1e-300
        if piv < 0:
            neg += 1
        for i in range(k + 1, n):
            f = M[i][k] / piv
            for j in range(k + 1, n):
                M[i][j] -= f * M[k][j]
    return neg


def bisection_eigenvalues(A: np.ndarray, tol: float = 1e-13) -> np.ndarray:
    """Independent oracle: every eigenvalue by bisection on the Sturm count."""
    n = len(A)
    bound = float(np.max(np.sum(np.abs(A), axis=1))) + 1.0
    out = []
    for k in range(n):
        lo, hi = -bound, bound
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if sturm_count(A, mid) > k:
                hi = mid
            else:
                lo = mid
        out.append(0.5 * (lo + hi))
    return np.array(out)


def test_free_ring_of_four():
    spec = full_spectrum(build_laplacian(LatticeCube(1, 4)))
    np.testing.assert_allclose(spec.eigenvalues, [-2, 0, 0, 2], atol=1e-12)


@pytest.mark.parametrize("L", [5, 8, 13])
def test_free_periodic_chain_cosines(L):
    ev = full_spectrum(build_laplacian(LatticeCube(1, L))).eigenvalues
    np.testing.assert_allclose(ev, np.sort(2 * np.cos(2 * np.pi * np.arange(L) / L)), atol=1e-12)


@pytest.mark.parametrize("L", [1, 2, 6, 11])
def test_free_dirichlet_chain_cosines(L):
    ev = full_spectrum(build_laplacian(LatticeCube(1, L, "dirichlet"))).eigenvalues
    np.testing.assert_allclose(ev, np.sort(2 * np.cos(np.pi * np.arange(1, L + 1) / (L + 1))), atol=1e-12)


def test_diagonal_only_operator_gives_sorted_diagonal():
    cube = LatticeCube(1, 6)
    d = np.array([3.0, -1.0, 0.5, 7.0, -4.0, 2.0])
    H = HamiltonianMatrix(cube, sp.diags(d).tocsr(), d)
    np.testing.assert_allclose(full_spectrum(H).eigenvalues, np.sort(d))


def test_random_five_by_five_against_bisection(rng):
    B = rng.normal(size=(5, 5))
    A = (B + B.T) / 2
    cube = LatticeCube(1, 5, "dirichlet")
    H = HamiltonianMatrix(cube, sp.csr_matrix(A), np.diag(A).copy())
    np.testing.assert_allclose(full_spectrum(H).eigenvalues, bisection_eigenvalues(A), atol=1e-8)


def test_anderson_matrix_against_bisection():
    cube = LatticeCube(1, 9)
    H = assemble(cube, sample_potential(cube, DisorderConfig(coupling=4.0, master_seed=3)))
    np.testing.assert_allclose(full_spectrum(H).eigenvalues, bisection_eigenvalues(H.toarray()), atol=1e-8)


def test_dimension_cap():
    H = build_laplacian(LatticeCube(1, 50))
    with pytest.raises(DimensionCapError, match="reduce L"):
        full_spectrum(H, dimension_cap=49)


def test_vectors_satisfy_invariants():
    cube = LatticeCube(2, 6)
    H = assemble(cube, sample_potential(cube, DisorderConfig(coupling=2.0, master_seed=4)))
    spec = full_spectrum(H, want_vectors=True)
    inv = check_invariants(H, spec)
    assert inv["sorted"]
    assert inv["trace_rel"] < 1e-10 and inv["frobenius_rel"] < 1e-10
    assert inv["orthonormality"] < 1e-10 and inv["residual_rel"] < 1e-10


def test_windowed_vectors_align_with_global_indices():
    cube = LatticeCube(1, 60)
    H = assemble(cube, sample_potential(cube, DisorderConfig(coupling=3.0, master_seed=9)))
    full = full_spectrum(H, want_vectors=True)
    part = full_spectrum(H, vector_window=(-0.5, 0.7))
    lo, hi = index_range(full.eigenvalues, (-0.5, 0.7))
    np.testing.assert_array_equal(part.vector_indices, np.arange(lo, hi))
    A = H.toarray()
    for col, g in enumerate(part.vector_indices):
        v = part.eigenvectors[:, col]
        assert np.linalg.norm(A @ v - full.eigenvalues[g] * v) < 1e-10
        assert abs(abs(v @ full.eigenvectors[:, g]) - 1) < 1e-8


def test_empty_vector_window():
    H = build_laplacian(LatticeCube(1, 10))
    spec = full_spectrum(H, vector_window=(5.0, 6.0))
    assert spec.eigenvectors.shape == (10, 0)
    assert len(spec.eigenvalues) == 10


def test_window_of_free_ring():
    spec = full_spectrum(build_laplacian(LatticeCube(1, 4)))
    w = window(spec, (-0.5, 0.5))
    np.testing.assert_allclose(w.eigenvalues, [0, 0], atol=1e-12)
    np.testing.assert_array_equal(w.indices, [1, 2])
    assert len(window(spec, (-10, 10))) == 4
    assert len(window(spec, (5, 6))) == 0


def test_window_count_matches_scan(rng):
    ev = np.sort(rng.normal(size=300))
    spec = SpectralData(ev)
    for a in rng.normal(size=10):
        assert len(window(spec, (-np.inf, a))) == sum(1 for e in ev if e <= a)


def test_vector_lookup_errors():
    spec = full_spectrum(build_laplacian(LatticeCube(1, 5)))
    with pytest.raises(ValueError):
        spec.vector(0)
    spec = full_spectrum(build_laplacian(LatticeCube(1, 5)), vector_window=(1.0, 3.0))
    with pytest.raises(KeyError):
        spec.vector(0)


def test_spectrum_csv(tmp_path):
    spec = full_spectrum(build_laplacian(LatticeCube(1, 4)))
    spec.to_csv(tmp_path / "s.csv")
    rows = np.loadtxt(tmp_path / "s.csv", delimiter=",", skiprows=1)
    np.testing.assert_allclose(rows[:, 1], [-2, 0, 0, 2], atol=1e-12)
