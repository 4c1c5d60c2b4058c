"""Resonant dipole-dipole kernels and the single-excitation coupling matrix.

All rates are in units of the single-atom decay rate Gamma.  The
amplitudes c_mu obey dc/dt = M c with

    M_{mu nu} = (1/2) * (-F(xi_{mu nu}) + 2i G(xi_{mu nu}) [mu != nu])

where F is the cooperative decay kernel and G the cooperative Lamb shift
kernel, both functions of xi = |k| r_{mu nu} and of the dipole alignment
(d . r_hat)^2.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import DivergenceError, DomainError
from .geometry import ChainGeometry

# Below this separation F switches to its Taylor series: the closed form
# cos/xi^2 - sin/xi^3 loses about eps/xi^2 to cancellation, while eight
# series terms are exact to ~1e-20 here.
SERIES_THRESHOLD = 0.3
_SERIES_ORDER = 8

_SINC_COEFFS = np.array([(-1) ** k / factorial(2 * k + 1) for k in range(_SERIES_ORDER)])
# (xi cos xi - sin xi) / xi^3 = sum_{k>=1} (-1)^k 2k xi^(2k-2) / (2k+1)!
_NEAR_COEFFS = np.array(
    [(-1) ** k * 2 * k / factorial(2 * k + 1) for k in range(1, _SERIES_ORDER + 1)]
)


def _check_alignment(alignment):
    if not 0.0 <= alignment <= 1.0:
        raise DomainError(f"alignment must lie in [0, 1], got {alignment!r}")


def _even_series(coeffs, xi):
    x2 = xi * xi
    out = np.zeros_like(xi)
    for c in coeffs[::-1]:
        out = out * x2 + c
    return out


def f_kernel(xi, alignment=0.0):
    """Cooperative decay kernel F(xi); F(0) = 1 for every alignment.

    Accepts a scalar or an array of separations.
    """
    _check_alignment(alignment)
    scalar = np.ndim(xi) == 0
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or not np.all(np.isfinite(xi)):
        raise DomainError("xi must be finite and non-negative")

    small = xi < SERIES_THRESHOLD
    sinc = np.empty_like(xi)
    near = np.empty_like(xi)
    if np.any(small):
        xs = xi[small]
        sinc[small] = _even_series(_SINC_COEFFS, xs)
        near[small] = _even_series(_NEAR_COEFFS, xs)
    big = ~small
    if np.any(big):
        xb = xi[big]
        s, c = np.sin(xb), np.cos(xb)
        sinc[big] = s / xb
        near[big] = c / xb**2 - s / xb**3

    out = 1.5 * ((1.0 - alignment) * sinc + (1.0 - 3.0 * alignment) * near)
    return float(out) if scalar else out


def g_kernel(xi, alignment=0.0):
    """Cooperative Lamb shift kernel G(xi), defined for xi > 0 only."""
    _check_alignment(alignment)
    scalar = np.ndim(xi) == 0
    xi = np.asarray(xi, dtype=float)
    if not np.all(np.isfinite(xi)) or np.any(xi < 0):
        raise DomainError("xi must be finite and non-negative")
    if np.any(xi == 0):
        raise DivergenceError("G kernel diverges at zero separation")

    s, c = np.sin(xi), np.cos(xi)
    out = 0.75 * (
        -(1.0 - alignment) * c / xi
        + (1.0 - 3.0 * alignment) * (s / xi**2 + c / xi**3)
    )
    return float(out) if scalar else out


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    entries: np.ndarray
    geom: ChainGeometry

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def n(self):
        return self.geom.n_atoms

    @property
    def decay_part(self):
        """The real matrix F (equal to -2 Re M)."""
        return -2.0 * self.entries.real

    def is_symmetric(self, tol=0.0):
        return bool(np.max(np.abs(self.entries - self.entries.T), initial=0.0) <= tol)

    def min_decay_eigenvalue(self):
        """Smallest eigenvalue of the symmetric decay matrix F."""
        return float(np.linalg.eigvalsh(self.decay_part)[0])


def build_coupling_matrix(geom: ChainGeometry) -> CouplingMatrix:
    xi = geom.separations()
    f = f_kernel(xi, geom.dipole_alignment)
    off = ~np.eye(geom.n_atoms, dtype=bool)
    g = np.zeros_like(xi)
    if geom.n_atoms > 1:
        g[off] = g_kernel(xi[off], geom.dipole_alignment)
    entries = 0.5 * (-f + 2j * g)
    # F(0) = 1 exactly; pin the diagonal so the trace rule holds bit-for-bit
    np.fill_diagonal(entries, -0.5 + 0j)
    return CouplingMatrix(entries, geom)


def coupling_strength(geom: ChainGeometry, m: int, matrix: CouplingMatrix | None = None) -> float:
    """Initial collective decay rate -2 Re <phi_m| M |phi_m> of the m-th DM state."""
    from .states import dm_state

    phi = dm_state(geom, m).amps
    if matrix is None:
        matrix = build_coupling_matrix(geom)
    return float(-2.0 * np.real(np.vdot(phi, matrix.entries @ phi)))


def coupling_strengths(geom: ChainGeometry, matrix: CouplingMatrix | None = None) -> np.ndarray:
    """Gamma_{m,m} for m = 1..N in one pass."""
    from .states import dm_basis

    if matrix is None:
        matrix = build_coupling_matrix(geom)
    basis = dm_basis(geom)  # columns are DM states
    quad = np.einsum("im,ij,jm->m", basis.conj(), matrix.entries, basis)
    return -2.0 * quad.real
