"""Tabulated complex permittivity of the film material.

The table is interpolated linearly in epsilon (not in the refractive index)
and never extrapolated.
"""

import io
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ParseError, RangeError, ValidationError

__all__ = [
    "DielectricTable",
    "load_dielectric_table",
    "load_silicon",
    "vacuum_table",
    "permittivity",
    "refractive_index",
]


@dataclass(frozen=True, eq=False)
class DielectricTable:
    """Complex permittivity sampled on an increasing photon-energy grid.

    Parameters
    ----------
    energy : ndarray
        Photon energies in eV, strictly increasing, at least two samples.
    eps : ndarray
        Complex permittivity at each energy with ``eps.imag >= 0``.
    name : str
        Free-form label used in output headers.
    """

    energy: np.ndarray
    eps: np.ndarray
    name: str = ""

    def __post_init__(self):
        energy = np.array(self.energy, dtype=float)
        eps = np.array(self.eps, dtype=complex)
        if energy.ndim != 1 or energy.shape != eps.shape:
            raise ValidationError("energy and eps must be 1-D arrays of equal length")
        if energy.size < 2:
            raise ValidationError("a dielectric table needs at least 2 samples")
        if not np.all(np.isfinite(energy)) or not np.all(np.isfinite(eps)):
            raise ValidationError("non-finite value in dielectric table")
        bad = np.nonzero(np.diff(energy) <= 0)[0]
        if bad.size:
            raise ValidationError(
                f"photon energy not strictly increasing at sample {bad[0] + 1}"
            )
        neg = np.nonzero(eps.imag < 0)[0]
        if neg.size:
            raise ValidationError(
                f"eps_im < 0 at sample {neg[0]} (E = {energy[neg[0]]} eV); "
                "medium must be passive"
            )
        energy.setflags(write=False)
        eps.setflags(write=False)
        object.__setattr__(self, "energy", energy)
        object.__setattr__(self, "eps", eps)

    @property
    def emin(self):
        return float(self.energy[0])

    @property
    def emax(self):
        return float(self.energy[-1])

    def __len__(self):
        return self.energy.size


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_dielectric_table(source, name=""):
    """Parse CSV rows ``energy_eV,eps_re,eps_im`` into a table.

    Parameters
    ----------
    source : bytes, str, path-like or file object
        CSV content. A ``str`` is treated as a file path; pass ``bytes``
        for literal content. Lines starting with ``#`` and blank lines are
        skipped; a single non-numeric header line is allowed before the data.
    name : str, optional
        Label stored on the table.

    Raises
    ------
    ParseError
        Malformed row, with its 1-based line number.
    ValidationError
        Energies not strictly increasing or negative ``eps_im``.
    """
    text = _read_text(source)
    rows = []
    header_allowed = True
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != 3:
            raise ParseError(f"expected 3 comma-separated fields, got {len(fields)}", lineno)
        try:
            values = [float(f) for f in fields]
        except ValueError:
            if header_allowed and not any(_is_number(f) for f in fields):
                header_allowed = False
                continue
            raise ParseError(f"non-numeric field in {line!r}", lineno) from None
        header_allowed = False
        rows.append(values)
    if len(rows) < 2:
        raise ValidationError("a dielectric table needs at least 2 samples")
    arr = np.asarray(rows)
    return DielectricTable(arr[:, 0], arr[:, 1] + 1j * arr[:, 2], name=name)


def _is_number(field):
    try:
        float(field)
    except ValueError:
        return False
    return True


def load_silicon():
    """Bundled crystalline-silicon permittivity, 0.45 to 5.6 eV.

    See ``data/si_permittivity.csv`` for provenance.
    """
    ref = resources.files("coinccl").joinpath("data/si_permittivity.csv")
    return load_dielectric_table(ref.read_bytes(), name="silicon")


def vacuum_table(emin=0.1, emax=10.0):
    """Table with eps = 1 exactly, for null tests."""
    return DielectricTable(np.array([emin, emax]), np.array([1.0 + 0j, 1.0 + 0j]), name="vacuum")


def permittivity(table, energy):
    """Complex permittivity at ``energy`` by linear interpolation.

    Parameters
    ----------
    table : DielectricTable
    energy : float or array_like
        Photon energy in eV, inside ``[table.emin, table.emax]``.

    Returns
    -------
    complex or ndarray of complex

    Raises
    ------
    RangeError
        If any energy lies outside the table.
    """
    e = np.asarray(energy, dtype=float)
    if e.size and (np.any(~(e >= table.emin)) or np.any(~(e <= table.emax))):
        raise RangeError(
            f"energy outside dielectric table range [{table.emin}, {table.emax}] eV"
        )
    # np.interp returns the node value exactly when e hits a node.
    re = np.interp(e, table.energy, table.eps.real)
    im = np.interp(e, table.energy, table.eps.imag)
    out = re + 1j * im
    return complex(out) if out.ndim == 0 else out


def refractive_index(table, energy):
    """Principal square root of the permittivity, ``Re n >= 0``."""
    return np.sqrt(permittivity(table, energy))
