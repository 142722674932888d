"""Compton scattering of Hermite-Gaussian gamma-ray photons on electrons at rest."""

__version__ = "0.1.0"
