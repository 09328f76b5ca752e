"""Property-based checks of structural invariants."""

import warnings

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from anderson_spectra.eigensolve import SpectralData, check_invariants, full_spectrum
from anderson_spectra.experiments import ExperimentConfig
from anderson_spectra.hamiltonian import DisorderConfig, LatticeCube, Uniform, assemble, sample_potential
from anderson_spectra.ids import IntegratedDensityOfStates
from anderson_spectra.statistics import (
    StepFunction,
    dls,
    nearest_center_distances,
    unfold,
    wegner_estimator,
)
from anderson_spectra.two_scale import decompose_lengths, monotone_assignment

FAST = settings(max_examples=40, deadline=None)

cubes = st.builds(
    LatticeCube,
    d=st.integers(1, 2),
    L=st.integers(3, 7),
    boundary=st.sampled_from(["periodic", "dirichlet"]),
    origin=st.none(),
)
disorders = st.builds(
    DisorderConfig,
    distribution=st.just(Uniform()),
    coupling=st.floats(0, 10),
    master_seed=st.integers(0, 2**32),
    realization_index=st.integers(0, 1000),
)


@FAST
@given(cubes, st.data())
def test_index_coordinate_round_trip(cube, data):
    idx = data.draw(st.lists(st.integers(0, cube.volume - 1), min_size=1, max_size=10))
    np.testing.assert_array_equal(cube.index(cube.coords(idx)), idx)


@FAST
@given(cubes, disorders)
def test_field_support_and_determinism(cube, disorder):
    v = sample_potential(cube, disorder).values
    assert np.all(np.abs(v) <= disorder.coupling)
    assert v.tobytes() == sample_potential(cube, disorder).values.tobytes()


@FAST
@given(cubes, disorders)
def test_hamiltonian_symmetric_with_potential_trace(cube, disorder):
    field = sample_potential(cube, disorder)
    H = assemble(cube, field)
    A = H.toarray()
    np.testing.assert_array_equal(A, A.T)
    assert H.trace() == np.sum(field.values)


@FAST
@given(cubes, disorders)
def test_spectrum_identities(cube, disorder):
    H = assemble(cube, sample_potential(cube, disorder))
    inv = check_invariants(H, full_spectrum(H, want_vectors=True))
    assert inv["sorted"]
    assert inv["trace_rel"] < 1e-10 and inv["frobenius_rel"] < 1e-10
    assert inv["orthonormality"] < 1e-10


@FAST
@given(st.lists(st.floats(-50, 50), min_size=2, max_size=300), st.lists(st.floats(-100, 100), max_size=20))
def test_ids_monotone_in_unit_range(sample, probes):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = IntegratedDensityOfStates(max_knots=64).fit(sample)
    x = np.sort(np.asarray(probes + sample))
    y = model.transform(x)
    assert np.all((y >= 0) & (y <= 1))
    assert np.all(np.diff(y) >= -1e-15)


@FAST
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=50), st.sampled_from(["survival", "cdf"]))
def test_step_function_monotone(values, kind):
    step = StepFunction(values, kind=kind)
    x = np.linspace(-11, 11, 101)
    y = step(x)
    d = np.diff(y)
    assert np.all(d <= 0) if kind == "survival" else np.all(d >= 0)
    assert np.all((y >= 0) & (y <= 1))


@FAST
@given(st.lists(st.floats(-3, 3), min_size=2, max_size=60), st.floats(1, 1000))
def test_unfolding_preserves_order(energies, scale):
    ev = np.sort(np.asarray(energies))
    ids = IntegratedDensityOfStates.from_table([-3.0, -1.0, 0.0, 3.0], [0.0, 0.1, 0.6, 1.0])
    pts = unfold(SpectralData(ev), ids, 0.0, scale).points
    assert np.all(np.diff(pts) >= 0)


@FAST
@given(st.lists(st.floats(0, 1), min_size=3, max_size=60, unique=True), st.integers(10, 10000))
def test_spacings_sum_to_unfolded_range(energies, volume):
    ev = np.sort(np.asarray(energies))
    ids = IntegratedDensityOfStates.from_table([0.0, 1.0], [0.0, 1.0])
    step = dls(SpectralData(ev), ids, (ev[0], ev[-1]), volume=volume)
    # the top level has no successor; the others telescope
    assert np.isclose(np.sum(step.values), volume * (ev[-1] - ev[0]), rtol=1e-9)
    assert step.n == len(ev)


@FAST
@given(
    st.lists(st.integers(0, 19), min_size=2, max_size=15),
    st.integers(-50, 50),
)
def test_center_distances_translation_invariant(sites, shift):
    cube = LatticeCube(1, 20)
    pts = np.array(sites)[:, None]
    base = nearest_center_distances(pts, cube)
    moved = nearest_center_distances((pts + shift) % 20, cube)
    np.testing.assert_allclose(base, moved)


@FAST
@given(st.lists(st.integers(0, 50), min_size=1, max_size=30), st.floats(0.01, 5), st.integers(1, 1000), st.floats(0.1, 10))
def test_wegner_scale_covariance(counts, width, volume, c):
    a = wegner_estimator(counts, width, volume)
    b = wegner_estimator(counts, width * c, volume)
    assert np.isclose(a, b * c, rtol=1e-12)


@FAST
@given(st.integers(1, 2), st.integers(1, 40), st.integers(1, 10), st.integers(1, 6), st.data())
def test_decomposition_identities(d, ell, ell_prime, k, data):
    remainder = data.draw(st.integers(0, ell + ell_prime - 1))
    L = k * (ell + ell_prime) + ell_prime + remainder
    dec = decompose_lengths(L, ell, ell_prime, d=d)
    assert (dec.k, dec.remainder) == (k, remainder)
    # consecutive cubes are separated by ell' sites
    assert np.all(np.diff(dec.starts) == ell + ell_prime)
    assert dec.starts[0] == ell_prime
    assert dec.n_cubes == k**d
    if remainder == 0:
        assert dec.uncovered_volume <= 2 * d * L**d * ell_prime / ell + 1e-9


@FAST
@given(st.integers(0, 6), st.integers(0, 6), st.integers(0, 2**32))
def test_assignment_pairs_are_order_preserving(m, n, seed):
    rng = np.random.default_rng(seed)
    a, b = np.sort(rng.normal(size=m)), np.sort(rng.normal(size=n))
    pairs = monotone_assignment(a, b)
    assert len(pairs) == min(m, n)
    if pairs:
        i, j = np.array(pairs).T
        assert np.all(np.diff(i) > 0) and np.all(np.diff(j) > 0)


@FAST
@given(
    st.integers(1, 3),
    st.integers(3, 500),
    st.floats(0, 10),
    st.integers(0, 2**31),
    st.integers(1, 100),
    st.floats(-2, 2),
)
def test_config_yaml_round_trip(d, L, coupling, seed, realizations, E0):
    cfg = ExperimentConfig.from_dict(
        {
            "model": {"d": d, "L": L, "coupling": coupling},
            "window": {"E0": E0},
            "statistics": ["spectrum"],
            "ensemble": {"master_seed": seed, "realizations": realizations},
        }
    )
    back = ExperimentConfig.from_yaml(cfg.to_yaml())
    assert back == cfg
    assert back.digest() == cfg.digest()
