"""Periodic 2D vorticity fields, their binary file format, and frequency-domain utilities.

All spatial operations assume doubly periodic boundaries. The binary format
("VORT") is a fixed little-endian layout so that fields round-trip bit-exactly
between processes and platforms.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FieldCorruptionError, FieldDataError, FieldFormatError

MAGIC = b"VORT"
VERSION = 1

# magic (4s) | version (u16) | rows (u32) | cols (u32) | time_tag (f64)
_HEADER = struct.Struct("<4sHIId")


@dataclass(frozen=True)
class VorticityField:
    """An M-by-N periodic grid of vorticity values (1/s), row-major.

    The value array is validated (finite, 2D) and frozen at construction;
    fields are safe to share across threads.

    Parameters
    ----------
    values : ndarray (M, N)
        Vorticity samples.
    time_tag : float or None
        Simulation time of the snapshot (s), or None when not applicable.
    """

    values: np.ndarray
    time_tag: float | None = None

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.float64, order="C", copy=True)
        if values.ndim != 2 or values.size == 0:
            raise ValueError(f"field values must be a non-empty 2D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise FieldDataError("field contains non-finite values")
        if self.time_tag is not None and math.isnan(self.time_tag):
            object.__setattr__(self, "time_tag", None)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]


def as_values(field: VorticityField | np.ndarray) -> np.ndarray:
    """Return the underlying 2D float array of a field or array-like."""
    if isinstance(field, VorticityField):
        return field.values
    values = np.asarray(field, dtype=np.float64)
    if values.ndim != 2:
        raise ValueError(f"expected a 2D array, got shape {values.shape}")
    return values


def write_field(field: VorticityField | np.ndarray, path: str | Path) -> None:
    """Write a field to `path` in the "VORT" binary format.

    Layout: magic "VORT", u16 version, u32 rows, u32 cols, f64 time tag
    (NaN encodes absent), then rows*cols f64 little-endian values row-major.
    """
    values = as_values(field)
    time_tag = field.time_tag if isinstance(field, VorticityField) else None
    m, n = values.shape
    header = _HEADER.pack(MAGIC, VERSION, m, n, math.nan if time_tag is None else float(time_tag))
    payload = np.ascontiguousarray(values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_field(path: str | Path) -> VorticityField:
    """Read a "VORT" file written by :func:`write_field`.

    Raises
    ------
    FieldFormatError
        Bad magic string or unsupported version.
    FieldCorruptionError
        File length disagrees with the header (truncated or padded).
    FieldDataError
        Payload contains non-finite values.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FieldCorruptionError(f"{path}: file shorter than header ({len(raw)} bytes)")
    magic, version, m, n, time_tag = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 8 * m * n
    if len(raw) != expected:
        raise FieldCorruptionError(f"{path}: expected {expected} bytes for {m}x{n} field, got {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", count=m * n, offset=_HEADER.size).reshape(m, n)
    if not np.all(np.isfinite(values)):
        raise FieldDataError(f"{path}: payload contains non-finite values")
    return VorticityField(values, time_tag=None if math.isnan(time_tag) else time_tag)


def circular_shift(field: VorticityField | np.ndarray, dr: int, dc: int) -> np.ndarray:
    """Circularly shift a field so out[(i+dr) mod M, (j+dc) mod N] = in[i, j]."""
    return np.roll(as_values(field), (dr, dc), axis=(0, 1))


def cross_correlation_map(a: VorticityField | np.ndarray, b: VorticityField | np.ndarray) -> np.ndarray:
    """Circular cross-correlation of `a` against every integer translate of `b`.

    out[r, c] = sum_{i,j} a[i, j] * b[(i-r) mod M, (j-c) mod N],
    computed via frequency-domain products.
    """
    av = as_values(a)
    bv = as_values(b)
    if av.shape != bv.shape:
        raise ValueError(f"shape mismatch: {av.shape} vs {bv.shape}")
    return np.fft.irfft2(np.fft.rfft2(av) * np.conj(np.fft.rfft2(bv)), s=av.shape)


def spectrum_energy(spectrum: np.ndarray, shape: tuple[int, int]) -> float:
    """Sum of |full spectrum|^2 recovered from a half (rfft2) spectrum.

    Bins absent from the half spectrum are counted via Hermitian symmetry:
    every column except k=0 (and k=N/2 for even N) represents two conjugate
    bins of the full transform.
    """
    _, n = shape
    weights = np.full(spectrum.shape[1], 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    return float(np.sum((spectrum.real**2 + spectrum.imag**2) * weights))
