"""Electron-photon coincidence cathodoluminescence toolkit."""

__version__ = "0.1.0"
