"""Physical constants and unit conventions used throughout the package.

Energies are in eV, lengths in nm, times in ns unless stated otherwise.
Values are CODATA 2018.
"""

HBARC = 197.3269804
"""Reduced Planck constant times speed of light, eV nm."""

MEC2 = 510998.95
"""Electron rest energy, eV."""

C_NM_PER_NS = 299.792458
"""Speed of light, nm/ns."""

E_CHARGE = 1.602176634e-19
"""Elementary charge, C."""

ALPHA_FS = 7.2973525693e-3
"""Fine-structure constant."""

FWHM_PER_SIGMA = 2.3548200450309493
"""Ratio FWHM / sigma of a Gaussian, 2 sqrt(2 ln 2)."""


def wavelength_to_energy(wavelength_nm):
    """Photon energy in eV for a vacuum wavelength in nm."""
    return 2.0 * 3.141592653589793 * HBARC / wavelength_nm


def energy_to_wavelength(energy_ev):
    """Vacuum wavelength in nm for a photon energy in eV."""
    return 2.0 * 3.141592653589793 * HBARC / energy_ev
