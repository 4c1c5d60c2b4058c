"""Eigenmode decomposition of the coupling matrix and time evolution.

Two independent routes are provided for dc/dt = M c:

* the spectral route, c(t) = U exp(lambda t) U^-1 c(0), used everywhere in
  production code;
* ``ode_oracle``, an adaptive Runge-Kutta integration of the same linear
  system, used by tests and by ``--verify`` runs.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericalFailure
from .geometry import ChainGeometry
from .interaction import CouplingMatrix
from .states import AmplitudeVector, Basis, dm_state

CONDITION_LIMIT = 1e12
DEFAULT_THRESHOLD = 0.98
DEFAULT_POINTS = 2001
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse_vectors: np.ndarray
    reconstruction_residual: float
    condition: float
    ill_conditioned: bool = False
    geom: ChainGeometry | None = None

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def decay_constants(self):
        """-2 Re(lambda_n): mode decay rates of the excited population."""
        return -2.0 * self.eigenvalues.real

    def propagate_coefficients(self, coeffs, times):
        """sum_n coeffs_n exp(lambda_n t) for every t, evaluated in chunks."""
        times = np.asarray(times, dtype=float)
        out = np.empty(times.shape, dtype=complex)
        for start in range(0, len(times), _CHUNK):
            sl = slice(start, start + _CHUNK)
            out[sl] = np.exp(np.outer(times[sl], self.eigenvalues)) @ coeffs
        return out


@dataclass(frozen=True, eq=False)
class WeightingTable:
    v: np.ndarray
    w: np.ndarray
    raw_weighting: np.ndarray
    normalized_weighting: np.ndarray
    threshold: float = DEFAULT_THRESHOLD
    dominant_subset: tuple = field(default=())

    @property
    def completeness(self):
        """sum_n v_n w_n; equals <projector|state>, i.e. 1 for the state itself."""
        return complex(np.sum(self.v * self.w))

    def ranked(self):
        """Mode indices (0-based) in order of decreasing weighting."""
        return np.argsort(-self.normalized_weighting, kind="stable")

    def top(self, k):
        return tuple(int(i) for i in self.ranked()[:k])

    def subset_weight(self, modes):
        return float(np.sum(self.normalized_weighting[list(modes)]))

    def subset_for(self, threshold):
        order = self.ranked()
        cum = np.cumsum(self.normalized_weighting[order])
        k = int(np.searchsorted(cum, threshold - 1e-15)) + 1
        return tuple(int(i) for i in order[: min(k, len(order))])


def _as_array(matrix):
    if isinstance(matrix, CouplingMatrix):
        return matrix.entries, matrix.geom
    arr = np.asarray(matrix, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {arr.shape}")
    return arr, None


def diagonalize(matrix) -> SpectralDecomposition:
    """Right eigenvectors and their inverse, modes sorted by ascending decay.

    Ties in the decay constant are broken by ascending imaginary part.
    """
    m, geom = _as_array(matrix)
    if not np.all(np.isfinite(m)):
        raise DomainError("coupling matrix has non-finite entries")
    try:
        lam, u = np.linalg.eig(m)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigensolver did not converge: {exc}") from exc

    decay_key = np.round(-2.0 * lam.real, 12)
    shift_key = np.round(lam.imag, 12)
    order = np.lexsort((shift_key, decay_key))
    lam = lam[order]
    u = u[:, order]

    try:
        u_inv = np.linalg.inv(u)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvector matrix is singular: {exc}") from exc

    n = len(lam)
    residual = float(np.max(np.abs((u * lam) @ u_inv - m)))
    if residual > 1e-9 * max(n, 1):
        raise NumericalFailure(
            f"eigendecomposition residual {residual:.3e} exceeds {1e-9 * n:.1e}"
        )
    cond = float(np.linalg.cond(u))
    ill = not np.isfinite(cond) or cond > CONDITION_LIMIT
    if ill:
        warnings.warn(
            f"eigenvector matrix is near-defective (condition {cond:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    lam.setflags(write=False)
    u.setflags(write=False)
    u_inv.setflags(write=False)
    return SpectralDecomposition(lam, u, u_inv, residual, cond, ill, geom)


def _site_amplitudes(state, n):
    if isinstance(state, AmplitudeVector):
        if state.basis is not Basis.SITE:
            raise DomainError("expected amplitudes in the site basis")
        amps = state.amps
    else:
        amps = np.asarray(state, dtype=complex)
    if amps.shape != (n,):
        raise DomainError(f"state has {amps.shape} amplitudes, decomposition has {n} modes")
    return amps


def weightings(
    decomp: SpectralDecomposition,
    state: AmplitudeVector,
    projector: AmplitudeVector | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> WeightingTable:
    """Bilinear mode projections of a prepared state.

    ``v_n = <projector|u_n>`` and ``w_n = (U^-1 c(0))_n`` with ``c(0)`` the
    prepared state.  The projector defaults to the state itself; pass the
    ideal DM state to get the amplitude d_m(t) = sum_n v_n exp(lambda_n t) w_n
    of an imperfectly prepared state.
    """
    c0 = _site_amplitudes(state, decomp.n)
    bra = c0 if projector is None else _site_amplitudes(projector, decomp.n)
    if not 0.0 < threshold <= 1.0:
        raise DomainError(f"threshold must lie in (0, 1], got {threshold!r}")

    v = bra.conj() @ decomp.right_vectors
    w = decomp.inverse_vectors @ c0
    raw = np.abs(v * w) ** 2
    normalized = raw / raw.sum()
    table = WeightingTable(v, w, raw, normalized, threshold)
    object.__setattr__(table, "dominant_subset", table.subset_for(threshold))
    return table


def _check_times(times):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise DomainError("times must be a non-empty 1-D grid")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise DomainError("times must be non-negative and strictly increasing")
    return times


def evolve_dm(
    decomp: SpectralDecomposition,
    geom: ChainGeometry,
    m: int,
    times,
    state: AmplitudeVector | None = None,
) -> np.ndarray:
    """Amplitude d_m(t) = <phi_m|Psi(t)> on the time grid.

    The system starts in ``state`` (default: the DM state itself, so that
    d_m(0) = 1).
    """
    times = _check_times(times)
    phi = dm_state(geom, m)
    start = phi if state is None else state
    table = weightings(decomp, start, projector=phi)
    return decomp.propagate_coefficients(table.v * table.w, times)


def evolve_site(decomp: SpectralDecomposition, c0, times) -> np.ndarray:
    """Site amplitudes c_mu(t), one row per time point."""
    times = _check_times(times)
    amps = _site_amplitudes(c0, decomp.n)
    w = decomp.inverse_vectors @ amps
    u = decomp.right_vectors
    out = np.empty((len(times), decomp.n), dtype=complex)
    for start in range(0, len(times), _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = (np.exp(np.outer(times[sl], decomp.eigenvalues)) * w) @ u.T
    return out


def population(trajectory) -> np.ndarray:
    """Total excited population sum_mu |c_mu(t)|^2 for each row."""
    return np.sum(np.abs(np.asarray(trajectory)) ** 2, axis=-1)


def population_trace(decomp: SpectralDecomposition, c0, times) -> np.ndarray:
    """P(t) without materializing the full (T, N) trajectory."""
    times = _check_times(times)
    out = np.empty(len(times))
    for start in range(0, len(times), _CHUNK):
        sl = slice(start, start + _CHUNK)
        out[sl] = population(evolve_site(decomp, c0, times[sl]))
    return out


def ode_oracle(matrix, c0, times, rtol=1e-10, atol=1e-12) -> np.ndarray:
    """Integrate dc/dt = M c directly with an adaptive 8th-order Runge-Kutta."""
    m, _ = _as_array(matrix)
    times = _check_times(times)
    amps = _site_amplitudes(c0, m.shape[0])
    if len(times) == 1 and times[0] == 0:
        return amps[None, :].copy()
    sol = solve_ivp(
        lambda t, y: m @ y,
        (0.0, float(times[-1])),
        amps.astype(complex),
        method="DOP853",
        t_eval=times,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise NumericalFailure(
            f"ODE integration failed at t={sol.t[-1] if len(sol.t) else 0.0:.6g}: {sol.message}"
        )
    return sol.y.T


def weighted_decay_constant(decomp: SpectralDecomposition, table: WeightingTable) -> float:
    """Weighting-averaged mode decay constant, a spectral estimate of Gamma_f."""
    return float(np.sum(table.normalized_weighting * decomp.decay_constants))


def spectral_beat(decomp: SpectralDecomposition, table: WeightingTable) -> float:
    """|Im lambda_a - Im lambda_b| of the two most heavily weighted modes."""
    if decomp.n < 2:
        return 0.0
    a, b = table.top(2)
    return float(abs(decomp.eigenvalues[a].imag - decomp.eigenvalues[b].imag))


def default_time_grid(
    decomp: SpectralDecomposition,
    table: WeightingTable,
    points: int = DEFAULT_POINTS,
    horizon: float = 5.0,
    max_points: int = 200_001,
) -> np.ndarray:
    """Uniform grid over [0, horizon / Gamma_est].

    Gamma_est is the weighting-averaged decay constant.  The point count is
    raised above ``points`` when needed to keep ~50 samples per beat period
    of the dominant modes.
    """
    rate = weighted_decay_constant(decomp, table)
    if not rate > 0:
        raise NumericalFailure(f"non-positive decay estimate {rate!r}")
    t_max = horizon / rate
    lam = decomp.eigenvalues[list(table.dominant_subset)]
    spread = float(np.ptp(lam.imag)) if len(lam) > 1 else 0.0
    needed = int(np.ceil(t_max * spread * 50.0 / (2.0 * np.pi))) + 1
    n_points = int(min(max(points, needed), max_points))
    return np.linspace(0.0, t_max, n_points)
