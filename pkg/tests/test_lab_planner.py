import math

import numpy as np
import pytest

from coopchain.analysis import analyze_dm
from coopchain.errors import DivergenceError, DomainError
from coopchain.geometry import ChainGeometry
from coopchain.interaction import coupling_strength
from coopchain.lab_planner import (
    ZEEMAN_CONSTANT,
    StarkConstants,
    apply_phase_error,
    apply_phase_noise,
    dynamic_polarizability,
    preparation_efficiency,
    robustness_report,
    stark_plan,
    zeeman_constant_from_levels,
    zeeman_plan,
)
from coopchain.states import dm_state


def test_zeeman_full_ramp():
    geom = ChainGeometry(16, 1.0)
    plan = zeeman_plan(geom, 16, 0.01)
    assert plan.gradient_or_intensity == pytest.approx(92.0, rel=1e-12)
    assert plan.units == "mG/um"
    assert plan.interaction_time == pytest.approx(1e-5)


def test_zeeman_large_chain():
    plan = zeeman_plan(ChainGeometry(500, 1.0), 10, 0.01)
    assert round(plan.gradient_or_intensity, 2) == 1.84


def test_zeeman_zero_target():
    assert zeeman_plan(ChainGeometry(8, 0.5), 0, 0.01).gradient_or_intensity == 0.0


def test_zeeman_constant_from_levels():
    assert zeeman_constant_from_levels() == pytest.approx(ZEEMAN_CONSTANT, rel=0.01)


def test_zeeman_domain():
    geom = ChainGeometry(8, 0.5)
    with pytest.raises(DomainError):
        zeeman_plan(geom, 9, 0.01)
    with pytest.raises(DomainError):
        zeeman_plan(geom, 2, 0.0)
    with pytest.raises(DivergenceError):
        zeeman_constant_from_levels(g_excited=0.5, mf_excited=2)


def test_efficiency():
    assert preparation_efficiency(3.0, 0.0) == 1.0
    assert preparation_efficiency(2.0, 0.5) == pytest.approx(math.exp(-1))
    geom = ChainGeometry(16, 0.1)
    gn = coupling_strength(geom, 16)
    # 0.1/Gamma of imprinting
    tau = 0.1 / StarkConstants().linewidth
    plan = stark_plan(geom, 2, tau, detuning_gamma=100)
    assert plan.efficiency == pytest.approx(math.exp(-0.1 * gn), rel=1e-12)
    with pytest.raises(DomainError):
        preparation_efficiency(-1.0, 1.0)


def test_stark_pulsed_scale():
    plan = stark_plan(ChainGeometry(500, 0.1), 100, 1e-9, pulsed=True)
    assert 2.6e12 / 3 <= plan.gradient_or_intensity <= 2.6e12 * 3


def test_stark_cw_scale():
    plan = stark_plan(ChainGeometry(500, 0.1), 7, 1e-9, detuning_gamma=100)
    assert 1.26e6 / 3 <= plan.gradient_or_intensity <= 1.26e6 * 3


def test_stark_zero_target_and_errors():
    geom = ChainGeometry(8, 0.1)
    assert stark_plan(geom, 0, 1e-9, pulsed=True).gradient_or_intensity == 0.0
    with pytest.raises(DomainError):
        stark_plan(geom, 2, 1e-9)
    with pytest.raises(DivergenceError):
        stark_plan(geom, 2, 1e-9, detuning_gamma=0)
    with pytest.raises(DivergenceError):
        dynamic_polarizability(StarkConstants().omega_eg)


def test_polarizability_static_limit():
    c = StarkConstants()
    assert dynamic_polarizability(0.0, c) == pytest.approx(c.alpha0, rel=1e-15)


def test_phase_error_identity_and_inverse():
    s = dm_state(ChainGeometry(16, 0.1), 2)
    assert np.array_equal(apply_phase_error(s, 0.0).amps, s.amps)
    back = apply_phase_error(apply_phase_error(s, 0.4 * math.pi), -0.4 * math.pi)
    assert np.max(np.abs(back.amps - s.amps)) <= 1e-12
    assert abs(apply_phase_error(s, 1.3).norm - 1) <= 1e-12


def test_phase_error_single_atom_warns():
    s = dm_state(ChainGeometry(1, 0.1), 1)
    with pytest.warns(RuntimeWarning):
        out = apply_phase_error(s, 0.5)
    assert out is s


def test_phase_noise_reproducible():
    s = dm_state(ChainGeometry(10, 0.1), 3)
    a = apply_phase_noise(s, 0.1, np.random.default_rng(4))
    b = apply_phase_noise(s, 0.1, np.random.default_rng(4))
    assert np.array_equal(a.amps, b.amps)
    assert abs(a.norm - 1) <= 1e-12


def test_robustness_zero_row_matches_pipeline(chain16):
    geom, dec = chain16
    rows = robustness_report(geom, 2, [0.0])
    _, _, rep = analyze_dm(geom, 2, decomp=dec)
    assert rows[0].gamma_f == rep.gamma_f
    assert rows[0].subset_projection == pytest.approx(rep.dominant_weighting)


def test_robustness_projection_falls_with_offset():
    rows = robustness_report(ChainGeometry(16, 0.1), 2, [0, 0.2 * math.pi, 0.4 * math.pi])
    proj = [r.subset_projection for r in rows]
    assert proj[0] > proj[1] > proj[2]
    assert proj[1] == pytest.approx(0.92, abs=0.02)


def test_robustness_wide_spacing_stays_localized():
    rows = robustness_report(ChainGeometry(16, 0.4), 2, [0, 0.2 * math.pi, 0.4 * math.pi])
    assert rows[0].subset_projection == pytest.approx(0.99, abs=0.01)
    assert all(r.subset_projection == pytest.approx(0.98, abs=0.01) for r in rows[1:])


def test_robustness_needs_offsets():
    with pytest.raises(DomainError):
        robustness_report(ChainGeometry(4, 0.1), 1, [])
