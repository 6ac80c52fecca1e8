"""File formats for maps, images, event streams and ground truth.

Matrix text
    ``# key: value`` header lines (JSON-encoded values), then one row per
    line, whitespace separated, ``repr``-exact floats.
Matrix binary
    ``b"COINCCL1"``, ``u32`` header length, UTF-8 JSON header, then each
    array named in ``header["arrays"]`` as little-endian f64, row-major.
Event streams
    ``hits.bin`` records ``<u2 x, <u2 y, <u8 toa_ticks, <u2 tot_ticks``;
    ``photons.bin`` records ``<u8 t_ticks, u1 channel``; a JSON sidecar with
    the tick durations, counts, duration and config hash. CSV with the same
    columns is the text alternative.
Ground truth
    JSON lines: one ``{"type": "pair", ...}`` object per pair, then one
    ``{"type": "summary", ...}`` object with the per-photon source labels and
    lost-electron counts.
"""

import io
import json
import os
import struct

import numpy as np

from .errors import ParseError, ValidationError
from .eventgen import HIT_DTYPE, PHOTON_DTYPE, EventStream

__all__ = [
    "MAGIC",
    "canonical_json",
    "write_matrix_text",
    "read_matrix_text",
    "write_matrix_binary",
    "read_matrix_binary",
    "write_events",
    "read_events",
    "write_truth",
    "read_truth",
    "write_json",
]

MAGIC = b"COINCCL1"


def canonical_json(obj):
    """Deterministic UTF-8 JSON (sorted keys, no whitespace)."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, float) and not np.isfinite(v):
        return None if np.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def write_json(path, obj):
    """Pretty JSON with sorted keys (deterministic)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


# ----------------------------------------------------------------------------
# matrices
# ----------------------------------------------------------------------------

def write_matrix_text(path, matrix, header):
    """Write a 2-D array with a ``# key: value`` header block.

    Parameters
    ----------
    path : str or PathLike
    matrix : array_like, 2-D
    header : dict
        JSON-serializable metadata (axes, units, config hash, ...).
    """
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    lines = [f"# {k}: {json.dumps(_jsonable(v), sort_keys=True)}" for k, v in sorted(header.items())]
    lines.append(f"# shape: {json.dumps(list(m.shape))}")
    body = "\n".join(" ".join(repr(float(x)) for x in row) for row in m)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n" + body + "\n")


def read_matrix_text(path):
    """Inverse of :func:`write_matrix_text`; returns ``(matrix, header)``."""
    header, rows = {}, []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                key, sep, val = s[1:].partition(":")
                if not sep:
                    raise ParseError("malformed header line", line=n)
                try:
                    header[key.strip()] = json.loads(val)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"bad header value: {exc}", line=n) from None
                continue
            try:
                rows.append([float(x) for x in s.split()])
            except ValueError:
                raise ParseError("non-numeric matrix entry", line=n) from None
    shape = tuple(header.pop("shape", (len(rows), len(rows[0]) if rows else 0)))
    m = np.array(rows, dtype=float).reshape(shape)
    return m, header


def write_matrix_binary(path, arrays, header):
    """Write named f64 arrays after a JSON header.

    ``arrays`` maps names to array_like; the header records names, shapes
    and order.
    """
    hdr = dict(_jsonable(header))
    names = list(arrays)
    data = [np.ascontiguousarray(np.asarray(arrays[k], dtype="<f8")) for k in names]
    hdr["arrays"] = [{"name": k, "shape": list(a.shape)} for k, a in zip(names, data)]
    raw = canonical_json(hdr).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(raw)))
        fh.write(raw)
        for a in data:
            fh.write(a.tobytes(order="C"))


def read_matrix_binary(path):
    """Return ``(arrays, header)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise ParseError("not a coinccl binary matrix file")
    if len(blob) < 12:
        raise ParseError("truncated header")
    (n,) = struct.unpack("<I", blob[8:12])
    try:
        hdr = json.loads(blob[12:12 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad header: {exc}") from None
    pos = 12 + n
    out = {}
    for spec in hdr.get("arrays", []):
        shape = tuple(spec["shape"])
        size = int(np.prod(shape)) * 8
        if pos + size > len(blob):
            raise ParseError(f"truncated array {spec['name']!r}")
        out[spec["name"]] = np.frombuffer(blob, dtype="<f8", count=size // 8, offset=pos).reshape(shape).copy()
        pos += size
    return out, hdr


# ----------------------------------------------------------------------------
# event streams
# ----------------------------------------------------------------------------

def write_events(directory, stream, config_hash="", fmt="bin", extra=None):
    """Write ``hits``, ``photons`` and ``events.json`` into ``directory``.

    Parameters
    ----------
    fmt : {"bin", "csv"}
    extra : dict, optional
        Additional sidecar entries.
    """
    if fmt not in ("bin", "csv"):
        raise ValidationError(f"unknown event format {fmt!r}")
    os.makedirs(directory, exist_ok=True)
    if fmt == "bin":
        with open(os.path.join(directory, "hits.bin"), "wb") as fh:
            fh.write(np.ascontiguousarray(stream.hits, dtype=HIT_DTYPE).tobytes())
        with open(os.path.join(directory, "photons.bin"), "wb") as fh:
            fh.write(np.ascontiguousarray(stream.photons, dtype=PHOTON_DTYPE).tobytes())
    else:
        _write_csv(os.path.join(directory, "hits.csv"), stream.hits, "x,y,toa_ticks,tot_ticks")
        _write_csv(os.path.join(directory, "photons.csv"), stream.photons, "t_ticks,channel")
    side = {
        "format": fmt,
        "config_hash": config_hash,
        "toa_tick_ns": stream.toa_quantum,
        "tot_tick_ns": stream.tot_quantum,
        "photon_tick_ns": stream.photon_quantum,
        "duration_s": stream.duration,
        "n_hits": int(len(stream.hits)),
        "n_photons": int(len(stream.photons)),
    }
    side.update(_jsonable(stream.meta))
    if extra:
        side.update(_jsonable(extra))
    write_json(os.path.join(directory, "events.json"), side)


def _write_csv(path, rec, header):
    buf = io.StringIO()
    buf.write(header + "\n")
    if len(rec):
        cols = np.column_stack([rec[n].astype(np.uint64) for n in rec.dtype.names])
        np.savetxt(buf, cols, fmt="%d", delimiter=",")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def _read_csv(path, dtype):
    with open(path, encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines()]
    body = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if body and not body[0][0].isdigit():
        body = body[1:]
    rec = np.empty(len(body), dtype=dtype)
    k = len(dtype.names)
    for n, ln in enumerate(body):
        parts = ln.split(",")
        if len(parts) != k:
            raise ParseError(f"expected {k} columns", line=n + 2)
        try:
            rec[n] = tuple(int(p) for p in parts)
        except (ValueError, OverflowError):
            raise ParseError("bad integer field", line=n + 2) from None
    return rec


def _read_records(path, dtype):
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) % dtype.itemsize:
        raise ParseError(f"{os.path.basename(path)}: size is not a multiple of {dtype.itemsize} bytes")
    return np.frombuffer(blob, dtype=dtype).copy()


def read_events(directory):
    """Load an event directory written by :func:`write_events`.

    Returns
    -------
    stream : EventStream
    sidecar : dict
    """
    side_path = os.path.join(directory, "events.json")
    with open(side_path, encoding="utf-8") as fh:
        try:
            side = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{side_path}: {exc}") from None
    fmt = side.get("format", "bin")
    if fmt == "bin":
        hits = _read_records(os.path.join(directory, "hits.bin"), HIT_DTYPE)
        photons = _read_records(os.path.join(directory, "photons.bin"), PHOTON_DTYPE)
    elif fmt == "csv":
        hits = _read_csv(os.path.join(directory, "hits.csv"), HIT_DTYPE)
        photons = _read_csv(os.path.join(directory, "photons.csv"), PHOTON_DTYPE)
    else:
        raise ParseError(f"unknown format {fmt!r} in sidecar")
    meta = {k: side[k] for k in ("electron_rate", "seed") if k in side}
    stream = EventStream(hits, photons, float(side["toa_tick_ns"]), float(side["tot_tick_ns"]),
                         float(side["photon_tick_ns"]), float(side["duration_s"]), meta)
    return stream, side


# ----------------------------------------------------------------------------
# ground truth
# ----------------------------------------------------------------------------

def write_truth(path, truth, config_hash=""):
    """JSON lines: pairs followed by one summary record."""
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(truth.n_pairs):
            rec = {
                "type": "pair",
                "electron_id": int(truth.pair_electron_id[i]),
                "photon_id": int(truth.pair_photon_id[i]),
                "energy_eV": float(truth.pair_energy[i]),
                "pperp": [float(v) for v in truth.pair_pperp[i]],
                "khat_perp": [float(v) for v in truth.pair_khat[i]],
                "t_electron_ns": float(truth.pair_t_electron[i]),
                "t_photon_ns": float(truth.pair_t_photon[i]),
                "electron_detected": bool(truth.pair_electron_detected[i]),
            }
            fh.write(canonical_json(rec) + "\n")
        summary = {
            "type": "summary",
            "config_hash": config_hash,
            "n_electrons": int(truth.n_electrons),
            "n_electrons_detected": int(truth.n_electrons_detected),
            "n_electrons_lost": int(truth.n_electrons - truth.n_electrons_detected),
            "photon_source": [int(v) for v in truth.photon_source],
        }
        fh.write(canonical_json(summary) + "\n")


def read_truth(path):
    """Return ``(pairs, summary)``; pairs is a list of dicts."""
    pairs, summary = [], None
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(str(exc), line=n) from None
            if rec.get("type") == "pair":
                pairs.append(rec)
            elif rec.get("type") == "summary":
                summary = rec
    return pairs, summary
