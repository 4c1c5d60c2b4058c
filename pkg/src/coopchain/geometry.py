"""Chain geometry and position-dependent phases.

Lengths are in units of the transition wavelength, so the wavenumber is
2*pi and the dimensionless separation between sites mu and nu is
2*pi*spacing*|mu - nu|.  Sites are indexed 1..N with site 1 at the origin.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ChainGeometry:
    n_atoms: int
    spacing: float
    dipole_alignment: float = 0.0
    excitation_along_chain: bool = True

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise DomainError(f"n_atoms must be a positive integer, got {self.n_atoms!r}")
        if not np.isfinite(self.spacing) or self.spacing <= 0:
            raise DomainError(f"spacing must be > 0, got {self.spacing!r}")
        if not 0.0 <= self.dipole_alignment <= 1.0:
            raise DomainError(f"dipole_alignment must lie in [0, 1], got {self.dipole_alignment!r}")
        object.__setattr__(self, "n_atoms", int(self.n_atoms))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "dipole_alignment", float(self.dipole_alignment))
        object.__setattr__(self, "excitation_along_chain", bool(self.excitation_along_chain))

    @property
    def positions(self):
        """Site positions z_mu in units of lambda."""
        return self.spacing * np.arange(self.n_atoms)

    @property
    def phases(self):
        """Excitation phases k.r_mu for all sites, in radians."""
        if not self.excitation_along_chain:
            return np.zeros(self.n_atoms)
        return TWO_PI * self.positions

    def separations(self):
        """Matrix of xi = |k| r_{mu nu} for every pair of sites."""
        idx = np.arange(self.n_atoms)
        return TWO_PI * self.spacing * np.abs(idx[:, None] - idx[None, :])

    def check_site(self, mu):
        if int(mu) != mu or not 1 <= mu <= self.n_atoms:
            raise DomainError(f"site index {mu!r} outside 1..{self.n_atoms}")
        return int(mu)

    def to_dict(self):
        return {
            "n_atoms": self.n_atoms,
            "spacing": self.spacing,
            "dipole_alignment": self.dipole_alignment,
            "excitation_along_chain": self.excitation_along_chain,
        }


def pair_separation(geom: ChainGeometry, mu: int, nu: int) -> float:
    mu = geom.check_site(mu)
    nu = geom.check_site(nu)
    return TWO_PI * geom.spacing * abs(mu - nu)


def excitation_phase(geom: ChainGeometry, mu: int) -> float:
    mu = geom.check_site(mu)
    if not geom.excitation_along_chain:
        return 0.0
    return TWO_PI * geom.spacing * (mu - 1)
