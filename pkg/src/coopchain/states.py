"""Singly-excited state families on the chain.

Every constructor returns a unit-norm AmplitudeVector over the site basis
|psi_mu> (atom mu excited, all others in the ground state).
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .geometry import TWO_PI, ChainGeometry

NORM_TOL = 1e-12


class Basis(str, Enum):
    SITE = "site"
    DM = "dm"


@dataclass(frozen=True, eq=False)
class AmplitudeVector:
    amps: np.ndarray
    geom: ChainGeometry
    basis: Basis = Basis.SITE

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.geom.n_atoms,):
            raise DomainError(
                f"expected {self.geom.n_atoms} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "basis", Basis(self.basis))
        if abs(self.norm - 1.0) > NORM_TOL:
            raise DomainError(f"state is not unit norm (norm = {self.norm!r})")

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def overlap(self, other):
        """<self|other>."""
        return complex(np.vdot(self.amps, other.amps))

    def as_pairs(self):
        return [[float(a.real), float(a.imag)] for a in self.amps]


def _check_dm_index(geom, m):
    if int(m) != m or not 1 <= m <= geom.n_atoms:
        raise DomainError(f"DM index {m!r} outside 1..{geom.n_atoms}")
    return int(m)


def _check_ns_index(geom, m):
    n = geom.n_atoms
    if n < 2:
        raise DomainError("nonsymmetric states need at least two atoms")
    if int(m) != m or not 1 <= m <= n - 1:
        raise DomainError(f"NS index {m!r} outside 1..{n - 1}")
    return int(m)


def timed_dicke(geom: ChainGeometry) -> AmplitudeVector:
    n = geom.n_atoms
    return AmplitudeVector(np.exp(1j * geom.phases) / np.sqrt(n), geom)


def dm_phases(geom: ChainGeometry, m: int) -> np.ndarray:
    """Per-site phases k.r_mu + 2 pi m (mu-1)/N of the m-th De Moivre state."""
    n = geom.n_atoms
    return geom.phases + TWO_PI * ((m * np.arange(n)) % n) / n


def dm_state(geom: ChainGeometry, m: int) -> AmplitudeVector:
    """De Moivre state with adjacent-site phase step 2 pi m / N (on top of k.r)."""
    m = _check_dm_index(geom, m)
    n = geom.n_atoms
    return AmplitudeVector(np.exp(1j * dm_phases(geom, m)) / np.sqrt(n), geom)


def dm_basis(geom: ChainGeometry) -> np.ndarray:
    """N x N matrix whose column m-1 holds dm_state(geom, m)."""
    n = geom.n_atoms
    mu = np.arange(n)[:, None]
    m = np.arange(1, n + 1)[None, :]
    # reduce m*mu mod n before scaling so the phase stays exact for large N
    ramp = TWO_PI * ((m * mu) % n) / n
    return np.exp(1j * (geom.phases[:, None] + ramp)) / np.sqrt(n)


def ns_state_mazets(geom: ChainGeometry, m: int) -> AmplitudeVector:
    m = _check_ns_index(geom, m)
    n = geom.n_atoms
    c = (1.0 + 1.0 / np.sqrt(n)) / (n - 1)
    coeffs = np.full(n, c)
    coeffs[n - 1] -= (np.sqrt(n) + 1.0) / (n - 1)
    coeffs[m - 1] -= 1.0
    amps = coeffs * np.exp(1j * geom.phases)
    norm = np.linalg.norm(amps)
    if abs(norm - 1.0) > NORM_TOL:
        amps = amps / norm
    return AmplitudeVector(amps, geom)


def ns_state_svidzinsky(geom: ChainGeometry, m: int) -> AmplitudeVector:
    """Subset state: sites 1..m in phase, site m+1 with weight -m.

    Normalized by sqrt(m + m^2) instead of a fixed sqrt(N(N-1)), which is
    only unit-norm when m = N - 1.
    """
    m = _check_ns_index(geom, m)
    n = geom.n_atoms
    coeffs = np.zeros(n)
    coeffs[:m] = 1.0
    coeffs[m] = -float(m)
    amps = coeffs * np.exp(1j * geom.phases) / np.sqrt(m + m * m)
    return AmplitudeVector(amps, geom)


FAMILIES = {
    "dm": dm_state,
    "dicke": lambda geom, m=None: timed_dicke(geom),
    "mazets": ns_state_mazets,
    "svidzinsky": ns_state_svidzinsky,
}


def make_state(family: str, geom: ChainGeometry, m: int | None = None) -> AmplitudeVector:
    try:
        ctor = FAMILIES[family]
    except KeyError:
        raise DomainError(f"unknown state family {family!r}") from None
    if family != "dicke" and m is None:
        raise DomainError(f"family {family!r} needs an index m")
    return ctor(geom, m)
