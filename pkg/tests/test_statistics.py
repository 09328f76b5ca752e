import numpy as np
import pytest

from anderson_spectra.eigensolve import SpectralData
from anderson_spectra.hamiltonian import LatticeCube
from anderson_spectra.ids import IntegratedDensityOfStates
from anderson_spectra.statistics import (
    PointSample,
    StepFunction,
    count_in_boxes,
    count_ratio,
    counting,
    dcs,
    dcs_limit,
    dls,
    dls_macroscopic,
    joint_process,
    limit_g,
    nearest_center_distances,
    poisson_nn_survival,
    sup_distance,
    unfold,
)

IDENTITY = IntegratedDensityOfStates.from_table([0.0, 1.0], [0.0, 1.0])


@pytest.fixture
def toy_spectrum():
    return SpectralData(np.array([0.1, 0.2, 0.4, 0.7, 1.0]))


def test_counting_closed_interval(toy_spectrum):
    assert counting(toy_spectrum, (0.2, 0.7)) == 3
    assert counting([0.0, 0.0, 1.0], (0.0, 0.0)) == 2


def test_unfold_single_level():
    spec = SpectralData(np.array([0.55]))
    sample = unfold(spec, IDENTITY, 0.5, 10.0)
    np.testing.assert_allclose(sample.points, [0.5])
    np.testing.assert_array_equal(sample.indices, [0])


def test_dls_hand_example(toy_spectrum):
    # in-window levels 0.1, 0.2, 0.4, 0.7; the last one pairs with 1.0 outside
    step = dls(toy_spectrum, IDENTITY, (0.0, 0.75), volume=10)
    np.testing.assert_allclose(step.values, [1, 2, 3, 3])
    assert step.n == 4
    assert step(1.5) == pytest.approx(0.75)
    assert step(0.0) == 1.0
    assert step(3.5) == 0.0


def test_dls_edge_dropping(toy_spectrum):
    step = dls(toy_spectrum, IDENTITY, (0.0, 0.75), volume=10, drop_edge=True)
    np.testing.assert_allclose(step.values, [1, 2, 3])
    assert step.n == 3


def test_dls_top_of_spectrum_has_no_successor(toy_spectrum):
    step = dls(toy_spectrum, IDENTITY, (0.65, 1.0), volume=10)
    np.testing.assert_allclose(step.values, [3])
    assert step.n == 2


def test_degenerate_levels_give_zero_spacing():
    spec = SpectralData(np.array([0.3, 0.3, 0.6]))
    step = dls(spec, IDENTITY, (0.0, 0.5), volume=10)
    np.testing.assert_allclose(step.values, [0, 3])
    assert step(0.0) == 1.0
    assert step.right_limit(0.0) == 0.5


def test_empty_window_rejected(toy_spectrum):
    with pytest.raises(ValueError, match="no eigenvalues"):
        dls(toy_spectrum, IDENTITY, (0.8, 0.9), volume=10)


def test_macroscopic_matches_local_for_linear_ids(toy_spectrum):
    a = dls(toy_spectrum, IDENTITY, (0.0, 0.75), volume=10)
    b = dls_macroscopic(toy_spectrum, IDENTITY, (0.0, 0.75), volume=10)
    np.testing.assert_allclose(a.values, b.values)


def test_macroscopic_scales_with_mean_density(toy_spectrum):
    steep = IntegratedDensityOfStates.from_table([0.0, 0.5, 1.0], [0.0, 0.5, 0.5])
    step = dls_macroscopic(toy_spectrum, steep, (0.0, 0.5), volume=10)
    # N(J) / |J| = 1 on J = [0, 0.5]
    np.testing.assert_allclose(step.values, [1, 2, 3])
    with pytest.raises(ValueError, match="no IDS mass"):
        dls_macroscopic(toy_spectrum, steep, (0.6, 0.9), volume=10)


def test_limit_g_constant_density_is_exponential():
    x = np.linspace(0, 5, 11)
    np.testing.assert_allclose(limit_g(IDENTITY, (0.2, 0.6), x), np.exp(-x), rtol=1e-12)


def test_limit_g_two_level_mixture():
    ids = IntegratedDensityOfStates.from_table([0.0, 1.0, 2.0], [0.0, 0.25, 1.0])
    x = np.array([0.0, 0.3, 1.0, 4.0])
    # nu_J = 0.25 on [0,1], 0.75 on [1,2]; |J| = 2
    expected = 0.25 * np.exp(-0.5 * x) + 0.75 * np.exp(-1.5 * x)
    np.testing.assert_allclose(limit_g(ids, (0.0, 2.0), x), expected, rtol=1e-12)


def test_dcs_hand_example():
    cube = LatticeCube(1, 10)
    step = dcs([[0], [2], [7]], 0.1, cube)
    np.testing.assert_allclose(step.values, [0.2, 0.2, 0.3])
    assert step(0.25) == pytest.approx(1 / 3)


def test_dcs_antipodal_pair():
    cube = LatticeCube(1, 10)
    np.testing.assert_allclose(nearest_center_distances([[0], [5]], cube), [5, 5])
    open_cube = LatticeCube(1, 10, "dirichlet")
    np.testing.assert_allclose(nearest_center_distances([[0], [9]], open_cube), [9, 9])


def test_dcs_against_brute_force(rng):
    cube = LatticeCube(2, 13, origin=(4, -3))
    pts = np.array(cube.origin) + rng.integers(0, 13, size=(25, 2))
    diff = np.abs(pts[:, None, :] - pts[None, :, :])
    diff = np.minimum(diff, 13 - diff)
    dist = np.sqrt((diff**2).sum(-1))
    np.fill_diagonal(dist, np.inf)
    np.testing.assert_allclose(nearest_center_distances(pts, cube), dist.min(1))


def test_dcs_rejects_bad_input():
    cube = LatticeCube(1, 10)
    with pytest.raises(ValueError):
        dcs([[1], [3]], 0.0, cube)
    with pytest.raises(ValueError, match="two centers"):
        dcs([[1]], 0.1, cube)


def test_reference_curves():
    assert dcs_limit(1.0) == pytest.approx(np.exp(-1))
    assert dcs_limit(2.0, d=2) == pytest.approx(np.exp(-4))
    assert poisson_nn_survival(1.0) == pytest.approx(np.exp(-2))
    assert poisson_nn_survival(1.0, d=2) == pytest.approx(np.exp(-np.pi))


def test_step_function_survival_and_cdf():
    s = StepFunction([2.0, 1.0, 2.0])
    assert s(1.0) == 1.0 and s(1.5) == pytest.approx(2 / 3) and s(2.5) == 0.0
    c = StepFunction([2.0, 1.0, 2.0], kind="cdf")
    assert c(1.0) == pytest.approx(1 / 3) and c(2.0) == 1.0
    with pytest.raises(ValueError):
        StepFunction([1.0, 2.0], n=1)


def test_step_function_pool():
    pooled = StepFunction.pool([StepFunction([1.0], n=2), StepFunction([3.0, 4.0])])
    assert pooled.n == 4
    assert pooled(2.0) == 0.5


def test_sup_distance_hand_value():
    step = StepFunction([1.0, 2.0])

    def ramp(x):
        return np.clip(1 - np.asarray(x) / 4, 0, 1)

    # just right of x=2 the step is 0 and the ramp is 0.5
    assert sup_distance(step, ramp) == pytest.approx(0.5)
    grid = np.linspace(0, 10, 200001)
    assert np.max(np.abs(step(grid) - ramp(grid))) <= 0.5 + 1e-12


def test_sup_distance_respects_range():
    step = StepFunction([1.0, 2.0])
    assert sup_distance(step, lambda x: np.zeros_like(np.asarray(x, float)), (0.0, 1.5)) == 1.0
    assert sup_distance(step, lambda x: np.full_like(np.asarray(x, float), 0.5), (1.5, 3.0)) == 0.5


def test_joint_process_scaling():
    cube = LatticeCube(1, 10)
    spec = SpectralData(np.array([0.45, 0.5, 0.6]), cube)
    sample = joint_process(spec, IDENTITY, [[5], [0], [9]], 0.5, 10)
    np.testing.assert_allclose(sample.points, [-0.5, 0.0, 1.0])
    np.testing.assert_allclose(sample.positions[:, 0], [0.0, -0.5, 0.4])
    boxes = [((-1, 0.5), [(-0.1, 0.1)]), ((-1, 2), None), ((0, 2), [(0, 1)])]
    np.testing.assert_array_equal(count_in_boxes(sample, boxes), [1, 3, 1])
    with pytest.raises(ValueError):
        joint_process(spec, IDENTITY, [[5], [0], [9]], 0.5, 0.5)


def test_count_in_boxes_edge_cases():
    empty = PointSample(np.empty(0), 0.0, 1.0)
    np.testing.assert_array_equal(count_in_boxes(empty, [((0, 1), None), ((-5, 5), None)]), [0, 0])
    full = PointSample(np.array([-0.3, 0.0, 2.5]), 0.0, 1.0)
    assert count_in_boxes(full, [((-np.inf, np.inf), None)])[0] == 3


def test_count_ratio_scaling():
    sample = PointSample(np.array([0.1, 0.2, 0.9]), 0.0, 1.0)
    boxes = [((0, 1), None)]
    np.testing.assert_allclose(count_ratio(sample, boxes, 10, 10), [3])
    np.testing.assert_allclose(count_ratio(sample, boxes, 20, 10, d=2), [3 / 4])
    with pytest.raises(ValueError):
        count_ratio(sample, boxes, 0.5, 10)
