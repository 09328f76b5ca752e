"""Finite-size behaviour of the center-spacing distribution at strong disorder.

Localization centers of nearby levels in a narrow window repel over a few
lattice sites, which depresses the distribution at small ``s``. Shrinking the
window (fewer levels per box) spreads the centers out and moves the empirical
law toward the nearest-neighbour law ``exp(-2 s)`` of unit-intensity Poisson
points on the line, while the gap to ``exp(-s)`` stays large.
"""

import numpy as np
import pytest

from anderson_spectra.eigensolve import full_spectrum, window
from anderson_spectra.hamiltonian import DisorderConfig, LatticeCube, assemble, sample_potential
from anderson_spectra.ids import ids_window
from anderson_spectra.localization import centers
from anderson_spectra.statistics import StepFunction, dcs, dcs_limit, poisson_nn_survival, sup_distance


def pooled_dcs(ids, cube, realizations, counts):
    windows = {c: ids_window(ids, 0.0, c / cube.volume) for c in counts}
    hull = (min(w[0] for w in windows.values()), max(w[1] for w in windows.values()))
    parts = {c: [] for c in counts}
    for r in range(realizations):
        field = sample_potential(cube, DisorderConfig(coupling=5.0, master_seed=20240601, realization_index=r))
        spec = window(full_spectrum(assemble(cube, field), vector_window=hull), hull)
        for c, (a, b) in windows.items():
            idx = spec.indices[(spec.eigenvalues >= a) & (spec.eigenvalues <= b)]
            if len(idx) >= 2:
                pos = np.stack([centers(spec.vector(g), cube).center for g in idx])
                parts[c].append(dcs(pos, ids.mass((a, b)), cube))
    return {c: StepFunction.pool(p) for c, p in parts.items()}


@pytest.mark.slow
def test_center_spacings_approach_poisson_nearest_neighbour_law(strong_disorder_ids):
    steps = pooled_dcs(strong_disorder_ids, LatticeCube(1, 1000), 150, (6, 25))
    x_range = (0.0, 3.0)
    to_exp = {c: sup_distance(s, dcs_limit, x_range) for c, s in steps.items()}
    to_nn = {c: sup_distance(s, poisson_nn_survival, x_range) for c, s in steps.items()}
    print(f"sup to exp(-s): {to_exp}; sup to exp(-2s): {to_nn}")
    assert to_nn[6] < to_nn[25]
    assert min(to_exp.values()) >= 0.2
