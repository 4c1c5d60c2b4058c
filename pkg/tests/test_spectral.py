import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopchain.errors import DomainError, NumericalFailure
from coopchain.geometry import ChainGeometry
from coopchain.interaction import build_coupling_matrix, coupling_strength
from coopchain.spectral_dynamics import (
    default_time_grid,
    diagonalize,
    evolve_dm,
    evolve_site,
    ode_oracle,
    population,
    population_trace,
    spectral_beat,
    weightings,
)
from coopchain.states import dm_state


def rel_dev(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_single_atom():
    geom = ChainGeometry(1, 0.1)
    dec = diagonalize(build_coupling_matrix(geom))
    assert dec.eigenvalues[0] == -0.5
    t = np.linspace(0, 10, 51)
    c = evolve_site(dec, np.array([1.0]), t)[:, 0]
    assert np.allclose(c, np.exp(-t / 2), atol=1e-15)
    assert np.allclose(population(c[:, None]), np.exp(-t), atol=1e-15)
    oracle = ode_oracle(build_coupling_matrix(geom), np.array([1.0]), t)[:, 0]
    assert np.allclose(oracle, np.exp(-t / 2), atol=1e-9)
    assert weightings(dec, dm_state(geom, 1)).normalized_weighting[0] == pytest.approx(1.0)


@pytest.mark.parametrize("spacing", [0.1, 0.25, 0.68])
def test_trace_rule_and_stability(spacing):
    for n in (3, 16, 60):
        dec = diagonalize(build_coupling_matrix(ChainGeometry(n, spacing)))
        assert dec.eigenvalues.sum() == pytest.approx(-n / 2, abs=1e-10)
        assert np.all(dec.eigenvalues.real <= 1e-12)
        assert dec.reconstruction_residual <= 1e-9 * n


def test_modes_sorted_by_decay(chain16):
    _, dec = chain16
    assert np.all(np.diff(dec.decay_constants) >= -1e-12)


def test_super_and_subradiant_groups(chain16):
    _, dec = chain16
    assert np.any(dec.decay_constants > 1) and np.any(dec.decay_constants < 1)


def test_rejects_bad_matrices():
    with pytest.raises(DomainError):
        diagonalize(np.ones((2, 3)))
    with pytest.raises(DomainError):
        diagonalize(np.array([[np.nan]]))


def test_defective_matrix_flagged():
    jordan = np.array([[-0.5, 1.0], [0.0, -0.5 + 1e-14]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        dec = diagonalize(jordan)
    assert dec.ill_conditioned
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)


def test_weighting_completeness_and_locality(chain16):
    geom, dec = chain16
    for m in range(1, 17):
        table = weightings(dec, dm_state(geom, m))
        assert abs(table.completeness - 1) <= 1e-10
        assert np.isclose(table.normalized_weighting.sum(), 1.0)
        assert len(table.dominant_subset) <= 3


def test_weighting_threshold_domain(chain16):
    geom, dec = chain16
    with pytest.raises(DomainError):
        weightings(dec, dm_state(geom, 2), threshold=0.0)


def test_dominant_pair_for_m2(chain16):
    geom, dec = chain16
    table = weightings(dec, dm_state(geom, 2))
    assert sorted(i + 1 for i in table.top(2)) == [9, 10]
    assert table.subset_weight(table.top(2)) >= 0.97
    assert spectral_beat(dec, table) == pytest.approx(0.853, rel=0.01)


def test_evolve_starts_at_one(chain16):
    geom, dec = chain16
    for m in (1, 2, 6, 16):
        d = evolve_dm(dec, geom, m, [0.0, 1.0])
        assert d[0] == pytest.approx(1.0, abs=1e-12)


def test_symmetric_state_superradiant(chain16):
    geom, dec = chain16
    t = np.linspace(0, 0.2, 21)[1:]
    p = np.abs(evolve_dm(dec, geom, 16, t)) ** 2
    assert np.all(p < np.exp(-t))


@pytest.mark.parametrize("m", [2, 6, 16])
@pytest.mark.parametrize("spacing", [0.1, 0.25, 0.68])
def test_spectral_matches_oracle(m, spacing):
    geom = ChainGeometry(16, spacing)
    matrix = build_coupling_matrix(geom)
    dec = diagonalize(matrix)
    phi = dm_state(geom, m)
    t = np.linspace(0, 50, 501)
    d_ode = ode_oracle(matrix, phi, t) @ phi.amps.conj()
    assert rel_dev(evolve_dm(dec, geom, m, t), d_ode) <= 1e-8


def test_population_monotone_and_initial_rate(chain16):
    geom, dec = chain16
    t = np.linspace(0, 40, 801)
    h = 1e-5
    for m in range(1, 17):
        phi = dm_state(geom, m)
        p = population_trace(dec, phi, t)
        assert np.all(np.diff(p) <= 1e-14)
        p_h = population_trace(dec, phi, [0.0, h, 2 * h])
        slope = (-3 * p_h[0] + 4 * p_h[1] - p_h[2]) / (2 * h)
        assert -slope == pytest.approx(coupling_strength(geom, m), abs=1e-8)


def test_population_trace_matches_full_trajectory(chain16):
    geom, dec = chain16
    t = np.linspace(0, 30, 9000)
    phi = dm_state(geom, 3)
    assert np.allclose(population_trace(dec, phi, t), population(evolve_site(dec, phi, t)), atol=1e-14)


def test_time_grid_validation(chain16):
    geom, dec = chain16
    with pytest.raises(DomainError):
        evolve_dm(dec, geom, 2, [1.0, 0.5])
    with pytest.raises(DomainError):
        evolve_dm(dec, geom, 2, [-1.0, 0.5])
    with pytest.raises(DomainError):
        evolve_site(dec, np.ones(3), [0.0])


def test_default_grid_resolves_beat(chain16):
    geom, dec = chain16
    table = weightings(dec, dm_state(geom, 2))
    t = default_time_grid(dec, table)
    assert t[0] == 0 and len(t) >= 2001
    period = 2 * np.pi / spectral_beat(dec, table)
    assert period / (t[1] - t[0]) >= 50


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_oracle_failure_raises():
    stiff = np.array([[1e300 + 0j]])
    with pytest.raises(NumericalFailure):
        ode_oracle(stiff, np.array([1.0]), [0.0, 1.0])


def complex_symmetric(seed):
    r = np.random.default_rng(seed)
    a = r.normal(size=(8, 8)) + 1j * r.normal(size=(8, 8))
    m = 0.25 * (a + a.T)
    np.fill_diagonal(m, -r.uniform(0.1, 1.0, 8) + 1j * r.normal(size=8))
    return m


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_complex_symmetric_against_oracle(seed):
    m = complex_symmetric(seed)
    c0 = np.random.default_rng(seed + 1).normal(size=8) + 0j
    c0 /= np.linalg.norm(c0)
    t = np.linspace(0, 3, 31)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        dec = diagonalize(m)
    if dec.ill_conditioned:
        return
    ref = ode_oracle(m, c0, t)
    assert rel_dev(evolve_site(dec, c0, t), ref) <= 1e-8
