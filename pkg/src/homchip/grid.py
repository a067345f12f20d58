"""Uniform frequency grid for the two-photon spectral amplitudes.

Detunings are taken around the degeneracy frequency omega0 (half the
pump frequency).  The grid is midpoint-style and symmetric: sample k and
sample N-1-k sit at opposite detunings, so flipping the sample axis is
an exact frequency reversal.  There is deliberately no sample at zero
detuning; integrals are midpoint sums with weight d_omega.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.constants import c as C_VACUUM


@dataclass(frozen=True)
class SpectralGrid:
    """Signal-detuning grid centered on the pair degeneracy wavelength."""

    center_wavelength_nm: float = 1551.7
    half_width_nm: float = 6.0
    samples: int = 4096

    def __post_init__(self):
        if self.center_wavelength_nm <= 0:
            raise ValueError("center_wavelength_nm must be positive")
        if self.half_width_nm <= 0:
            raise ValueError("half_width_nm must be positive")
        if self.samples < 2 or self.samples % 2 != 0:
            raise ValueError("samples must be an even number >= 2")

    @cached_property
    def omega0(self) -> float:
        """Degeneracy angular frequency, rad/s."""
        return 2.0 * np.pi * C_VACUUM / (self.center_wavelength_nm * 1e-9)

    @cached_property
    def half_width_omega(self) -> float:
        lam0 = self.center_wavelength_nm * 1e-9
        return 2.0 * np.pi * C_VACUUM * (self.half_width_nm * 1e-9) / lam0**2

    @cached_property
    def d_omega(self) -> float:
        return 2.0 * self.half_width_omega / self.samples

    @cached_property
    def detunings(self) -> np.ndarray:
        """Signal detunings Omega, rad/s; antisymmetric under index reversal."""
        k = np.arange(self.samples)
        return (k + 0.5 - self.samples / 2) * self.d_omega

    @cached_property
    def omega_plus(self) -> np.ndarray:
        return self.omega0 + self.detunings

    @cached_property
    def omega_minus(self) -> np.ndarray:
        return self.omega0 - self.detunings

    @cached_property
    def wavelength_plus_nm(self) -> np.ndarray:
        """Exact wavelength of the photon at omega0 + Omega, per sample."""
        return 2.0 * np.pi * C_VACUUM / self.omega_plus * 1e9

    @cached_property
    def wavelength_minus_nm(self) -> np.ndarray:
        return 2.0 * np.pi * C_VACUUM / self.omega_minus * 1e9

    @staticmethod
    def flip(values: np.ndarray) -> np.ndarray:
        """Frequency reversal Omega -> -Omega (exact on this grid)."""
        return values[..., ::-1]

    def samples_across_nm(self, width_nm: float) -> float:
        """How many grid samples span a spectral feature of the given width."""
        lam0 = self.center_wavelength_nm * 1e-9
        width_omega = 2.0 * np.pi * C_VACUUM * (width_nm * 1e-9) / lam0**2
        return width_omega / self.d_omega
