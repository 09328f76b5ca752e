import numpy as np
import pytest
from sklearn.base import clone

from anderson_spectra.eigensolve import full_spectrum
from anderson_spectra.hamiltonian import DisorderConfig, LatticeCube, assemble, sample_potential
from anderson_spectra.localization import (
    CenterExtractor,
    center_diameter,
    centers,
    decay_fit,
    diameter_bound,
    lattice_distance,
    spectrum_centers,
    write_centers_csv,
)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def test_point_mass_center():
    cube = LatticeCube(1, 10)
    rec = centers(np.eye(10)[5], cube)
    np.testing.assert_array_equal(rec.center, [5])
    assert len(rec.center_set) == 1


def test_uniform_vector_total_tie():
    cube = LatticeCube(1, 8, origin=(3,))
    rec = centers(np.full(8, 8**-0.5), cube)
    assert len(rec.center_set) == 8
    np.testing.assert_array_equal(rec.center, [3])


def test_strict_maximum():
    cube = LatticeCube(1, 4)
    rec = centers(unit([0.1, 0.9, 0.3, -0.2]), cube)
    np.testing.assert_array_equal(rec.center, [1])


def test_negative_amplitude_counts():
    rec = centers(unit([0.1, 0.2, -0.95, 0.1]), LatticeCube(1, 4))
    np.testing.assert_array_equal(rec.center, [2])


def test_lexicographic_tie_break_in_two_dimensions():
    cube = LatticeCube(2, 3)
    v = np.zeros(9)
    v[cube.index([(2, 0)])] = 1
    v[cube.index([(0, 2)])] = -1
    rec = centers(unit(v), cube)
    np.testing.assert_array_equal(rec.center, [0, 2])
    assert len(rec.center_set) == 2


def test_zero_and_unnormalized_vectors_rejected():
    cube = LatticeCube(1, 5)
    with pytest.raises(ValueError, match="zero vector"):
        centers(np.zeros(5), cube)
    with pytest.raises(ValueError, match="normalized"):
        centers(np.ones(5), cube)


def test_torus_distance():
    cube = LatticeCube(1, 10)
    assert lattice_distance([1], [9], cube) == 2
    assert lattice_distance([0], [5], cube) == 5
    open_cube = LatticeCube(1, 10, "dirichlet")
    assert lattice_distance([1], [9], open_cube) == 8
    cube2 = LatticeCube(2, 10)
    assert lattice_distance([0, 0], [9, 9], cube2) == pytest.approx(np.sqrt(2))


def test_diameter_of_antipodal_pair():
    cube = LatticeCube(1, 10)
    v = np.zeros(10)
    v[[0, 5]] = 2**-0.5
    rec = centers(v, cube)
    assert center_diameter(rec, cube) == 5
    assert center_diameter(centers(np.eye(10)[3], cube), cube) == 0


def test_diameter_against_brute_force(rng):
    cube = LatticeCube(2, 7)
    v = np.zeros(49)
    idx = rng.choice(49, size=6, replace=False)
    v[idx] = 1
    rec = centers(unit(v), cube)
    pts = cube.coords(idx)
    brute = 0.0
    for p in pts:
        for q in pts:
            d = np.abs(p - q)
            d = np.minimum(d, 7 - d)
            brute = max(brute, float(np.hypot(*d)))
    assert center_diameter(rec, cube) == pytest.approx(brute)


def test_diameter_bound_formula():
    cube = LatticeCube(1, 100)
    assert diameter_bound(cube, 2.0, 0.5) == pytest.approx(2 * np.log(100) ** 2)


def test_exact_exponential_profile():
    cube = LatticeCube(1, 41)
    x = np.arange(41)
    phi = np.exp(-np.abs(x - 20))
    fit = decay_fit(phi, [20], cube, stretch=1.0)
    assert fit.rate == pytest.approx(1.0, abs=1e-9)
    assert fit.residual < 1e-9


def test_exact_stretched_profile():
    cube = LatticeCube(1, 61)
    x = np.arange(61)
    phi = np.exp(-2 * np.sqrt(np.abs(x - 30)))
    fit = decay_fit(phi, [30], cube, stretch=0.5)
    assert fit.rate == pytest.approx(2.0, abs=1e-9)


def test_decay_fit_errors():
    cube = LatticeCube(1, 10)
    with pytest.raises(ValueError, match="at least 4"):
        decay_fit(np.eye(10)[0], [0], cube)
    with pytest.raises(ValueError, match="stretch"):
        decay_fit(np.ones(10), [0], cube, stretch=1.5)


def test_strong_disorder_band_center_states_are_localized():
    cube = LatticeCube(1, 500)
    H = assemble(cube, sample_potential(cube, DisorderConfig(coupling=5.0, master_seed=21)))
    spec = full_spectrum(H, vector_window=(-1.0, 1.0))
    recs = spectrum_centers(spec, stretch=1.0)
    assert len(recs) > 20
    assert np.mean([r.localized for r in recs]) >= 0.99


def test_center_extractor_estimator():
    cube = LatticeCube(1, 6)
    ext = CenterExtractor(cube=cube)
    assert clone(ext).get_params()["cube"] == cube
    V = np.eye(6)[:, [4, 1]]
    np.testing.assert_array_equal(ext.fit_transform(V), [[4], [1]])
    with pytest.raises(ValueError):
        CenterExtractor().fit()


def test_centers_csv(tmp_path):
    cube = LatticeCube(1, 80)
    H = assemble(cube, sample_potential(cube, DisorderConfig(coupling=4.0, master_seed=1)))
    recs = spectrum_centers(full_spectrum(H, vector_window=(-0.5, 0.5)), stretch=1.0)
    write_centers_csv(recs, tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "j,E,x0,gamma,residual"
    assert len(lines) == len(recs) + 1
