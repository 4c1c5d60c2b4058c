"""Phase-imprinting field plans and phase-error studies.

A DM state m is reached from the symmetric state by a linear phase ramp
with step 2 pi m / N between adjacent sites.  This module sizes the field
gradient (Zeeman) or light-shift intensity (ac Stark) that writes the ramp
in a given time, and perturbs states with imperfect ramps.

Defaults refer to the 87Rb D2 line, |F=2, mF=2> -> |F'=3, mF'=3>.
"""

import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import constants as sc

from .analysis import analyze_dm
from .errors import DivergenceError, DomainError
from .geometry import TWO_PI, ChainGeometry
from .interaction import build_coupling_matrix, coupling_strength
from .spectral_dynamics import diagonalize, weightings
from .states import AmplitudeVector, dm_state

# mG ms / um for a 2 pi phase step per lattice site of one wavelength
ZEEMAN_CONSTANT = 0.92
D2_WAVELENGTH_NM = 780.241209686
D2_LINEWIDTH = TWO_PI * 6.0666e6  # s^-1
# static ground-state polarizability, h * 0.0794 Hz/(V/cm)^2 in SI units
RB_STATIC_POLARIZABILITY = sc.h * 0.0794 * 1e-4
PULSED_WAVELENGTH_NM = 1064.0

_W_PER_M2_TO_MW_PER_CM2 = 0.1


@dataclass(frozen=True)
class StarkConstants:
    alpha0: float = RB_STATIC_POLARIZABILITY
    transition_wavelength_nm: float = D2_WAVELENGTH_NM
    linewidth: float = D2_LINEWIDTH
    pulsed_wavelength_nm: float = PULSED_WAVELENGTH_NM

    @property
    def omega_eg(self):
        return TWO_PI * sc.c / (self.transition_wavelength_nm * 1e-9)


@dataclass
class FieldPlan:
    mechanism: str
    gradient_or_intensity: float
    units: str
    interaction_time: float
    target_m: int
    n_atoms: int
    adjacent_phase: float
    efficiency: float
    gamma_N: float
    details: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _check_target(geom, m):
    if int(m) != m or not 0 <= m <= geom.n_atoms:
        raise DomainError(f"target m={m!r} outside 0..{geom.n_atoms}")
    return int(m)


def preparation_efficiency(gamma_N: float, tau_B: float) -> float:
    """exp(-gamma_N tau_B): survival of the superradiant state during imprinting."""
    if gamma_N < 0 or tau_B < 0:
        raise DomainError("gamma_N and tau_B must be non-negative")
    return float(np.exp(-gamma_N * tau_B))


def _efficiency(geom, interaction_time_s, linewidth):
    gamma_N = coupling_strength(geom, geom.n_atoms)
    return gamma_N, preparation_efficiency(gamma_N, interaction_time_s * linewidth)


def zeeman_constant_from_levels(
    g_excited=2 / 3, mf_excited=3, g_ground=1 / 2, mf_ground=2, wavelength_nm=D2_WAVELENGTH_NM
):
    """Gradient-time product (mG ms / um) for a 2 pi step per wavelength.

    Uses the differential Zeeman shift (mF' gF' - mF gF) mu_B B' z of the
    optical coherence.
    """
    dmu = (mf_excited * g_excited - mf_ground * g_ground) * sc.physical_constants["Bohr magneton"][0]
    if dmu == 0:
        raise DivergenceError("no differential magnetic moment between the two levels")
    gradient = sc.h / (abs(dmu) * wavelength_nm * 1e-9 * 1e-3)  # T/m for tau = 1 ms
    return gradient * 1e7 / 1e6  # T/m -> mG/um


def zeeman_plan(
    geom: ChainGeometry,
    m: int,
    interaction_time_ms: float,
    spacing_in_lambda: float | None = None,
    constant: float = ZEEMAN_CONSTANT,
    linewidth: float = D2_LINEWIDTH,
) -> FieldPlan:
    """Magnetic gradient B' = constant / (d' tau') * (m / N) in mG/um."""
    m = _check_target(geom, m)
    d = geom.spacing if spacing_in_lambda is None else spacing_in_lambda
    if interaction_time_ms <= 0 or d <= 0:
        raise DomainError("interaction time and spacing must be positive")
    n = geom.n_atoms
    gradient = constant / (d * interaction_time_ms) * (m / n)
    tau_s = interaction_time_ms * 1e-3
    gamma_N, eff = _efficiency(geom, tau_s, linewidth)
    return FieldPlan(
        mechanism="zeeman",
        gradient_or_intensity=gradient,
        units="mG/um",
        interaction_time=tau_s,
        target_m=m,
        n_atoms=n,
        adjacent_phase=TWO_PI * m / n,
        efficiency=eff,
        gamma_N=gamma_N,
        details={"constant_mG_ms_per_um": constant, "spacing_lambda": d},
    )


def dynamic_polarizability(omega, constants: StarkConstants = StarkConstants()):
    """alpha(omega) = alpha(0) omega_eg^2 / (omega_eg^2 - omega^2)."""
    w0 = constants.omega_eg
    denom = w0**2 - omega**2
    if denom == 0:
        raise DivergenceError("polarizability diverges on resonance")
    return constants.alpha0 * w0**2 / denom


def stark_plan(
    geom: ChainGeometry,
    m: int,
    interaction_time_s: float,
    detuning_gamma: float | None = None,
    pulsed: bool = False,
    constants: StarkConstants = StarkConstants(),
) -> FieldPlan:
    """Peak intensity (mW/cm^2) of a light-shift ramp writing DM state m.

    The intensity grows linearly along the chain from 0 to the returned
    peak, so the last site collects a phase 2 pi m (N-1)/N through
    U = -alpha(omega) I / (2 eps0 c).  The CW variant is detuned by
    ``detuning_gamma`` linewidths below the D2 line; the pulsed variant
    uses ``constants.pulsed_wavelength_nm``.
    """
    m = _check_target(geom, m)
    if interaction_time_s <= 0:
        raise DomainError("interaction time must be positive")
    if pulsed:
        omega = TWO_PI * sc.c / (constants.pulsed_wavelength_nm * 1e-9)
        mechanism = "stark_pulsed"
    else:
        if detuning_gamma is None:
            raise DomainError("CW Stark plan needs a detuning")
        if detuning_gamma == 0:
            raise DivergenceError("zero detuning: light shift diverges")
        omega = constants.omega_eg - detuning_gamma * constants.linewidth
        mechanism = "stark_cw"
    alpha = dynamic_polarizability(omega, constants)

    n = geom.n_atoms
    total_phase = TWO_PI * m * (n - 1) / n
    intensity = total_phase * sc.hbar * 2 * sc.epsilon_0 * sc.c / (abs(alpha) * interaction_time_s)
    gamma_N, eff = _efficiency(geom, interaction_time_s, constants.linewidth)
    return FieldPlan(
        mechanism=mechanism,
        gradient_or_intensity=intensity * _W_PER_M2_TO_MW_PER_CM2,
        units="mW/cm^2",
        interaction_time=interaction_time_s,
        target_m=m,
        n_atoms=n,
        adjacent_phase=TWO_PI * m / n,
        efficiency=eff,
        gamma_N=gamma_N,
        details={
            "alpha_SI": alpha,
            "omega_laser": omega,
            "detuning_gamma": detuning_gamma,
            "total_phase": total_phase,
        },
    )


def apply_phase_error(state: AmplitudeVector, total_offset: float) -> AmplitudeVector:
    """Add a linear phase ramp reaching ``total_offset`` at the last site."""
    n = state.geom.n_atoms
    if n == 1:
        if total_offset != 0:
            warnings.warn("phase ramp on a single atom is a no-op", RuntimeWarning, stacklevel=2)
        return state
    ramp = np.exp(1j * total_offset * np.arange(n) / (n - 1))
    return AmplitudeVector(state.amps * ramp, state.geom, state.basis)


def apply_phase_noise(state: AmplitudeVector, sigma: float, rng=None) -> AmplitudeVector:
    """Independent Gaussian phase noise of width ``sigma`` on every site."""
    rng = np.random.default_rng(rng)
    phases = rng.normal(0.0, sigma, state.geom.n_atoms)
    return AmplitudeVector(state.amps * np.exp(1j * phases), state.geom, state.basis)


@dataclass
class RobustnessRow:
    offset: float
    subset_projection: float
    gamma_f: float
    spread: float
    beat_error: float | None
    beat_frequency: float | None
    window: tuple


def robustness_report(
    geom: ChainGeometry, m: int, offsets, subset_size: int = 2, noise_sigma: float = 0.0, seed=None
):
    """Re-run weighting and fit analysis for each phase offset.

    ``subset_projection`` is the perturbed state's normalized weighting on
    the ``subset_size`` modes that dominate the ideal DM state.
    """
    offsets = list(offsets)
    if not offsets:
        raise DomainError("need at least one offset")
    decomp = diagonalize(build_coupling_matrix(geom))
    phi = dm_state(geom, m)
    subset = weightings(decomp, phi).top(subset_size)
    rng = np.random.default_rng(seed)
    times = None
    rows = []
    for offset in offsets:
        state = apply_phase_error(phi, offset)
        if noise_sigma:
            state = apply_phase_noise(state, noise_sigma, rng)
        times, _, rep = analyze_dm(geom, m, decomp=decomp, state=state, times=times)
        table = weightings(decomp, state)
        rows.append(
            RobustnessRow(
                offset=float(offset),
                subset_projection=table.subset_weight(subset),
                gamma_f=rep.gamma_f,
                spread=rep.spread,
                beat_error=rep.beat_error,
                beat_frequency=rep.beat_frequency,
                window=rep.window,
            )
        )
    return rows
