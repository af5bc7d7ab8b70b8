"""On-disk coefficient caches.

Layout: the magic ``QS1``, then little-endian ``val`` (int64), ``trunc``
(int64), ``modulus`` (uint64, 0 for exact) and the cell width in bytes
(uint8).  Modular caches follow with the raw coefficient block; exact caches
with one decimal integer per line.  Raw caches are memory-mapped on load so
progression scans only touch the pages they read.
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from mockcong.qseries import TruncatedSeries, cell_dtype

MAGIC = b"QS1"
_HEADER = struct.Struct("<qqQB")
HEADER_SIZE = len(MAGIC) + _HEADER.size

CACHE_DIR_ENV = "MOCKCONG_CACHE_DIR"


class CacheFormatError(ValueError):
    pass


def default_cache_dir() -> Path:
    root = os.environ.get(CACHE_DIR_ENV)
    if root:
        return Path(root)
    return Path.home() / ".cache" / "mockcong"


def atomic_write_bytes(path, chunks) -> None:
    """Write ``chunks`` to a temp file next to ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            for chunk in chunks:
                fh.write(chunk)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _width(s: TruncatedSeries) -> int:
    dt = cell_dtype(s.modulus)
    return 0 if dt == object else dt.itemsize


def _header(s: TruncatedSeries) -> bytes:
    if s.modulus is not None and s.modulus >= 1 << 64:
        raise CacheFormatError(f"modulus {s.modulus} does not fit the 64-bit cache header")
    return MAGIC + _HEADER.pack(s.val, s.trunc, s.modulus or 0, _width(s))


def _body(s: TruncatedSeries) -> bytes:
    if _width(s) == 0:
        return "".join(f"{int(c)}\n" for c in s.coeffs).encode("ascii")
    return np.ascontiguousarray(s.coeffs, dtype=s.coeffs.dtype.newbyteorder("<")).tobytes()


def write_cache(s: TruncatedSeries, path) -> Path:
    atomic_write_bytes(path, [_header(s), _body(s)])
    return Path(path)


def read_cache(path, mmap: bool = True) -> TruncatedSeries:
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) != HEADER_SIZE or head[:3] != MAGIC:
            raise CacheFormatError(f"{path}: not a QS1 coefficient cache")
        val, trunc, modulus, width = _HEADER.unpack(head[3:])
        modulus = modulus or None
        length = trunc - val
        if width == 0:
            lines = fh.read().decode("ascii").split()
            if len(lines) != length:
                raise CacheFormatError(f"{path}: expected {length} coefficients, found {len(lines)}")
            if modulus is None:
                coeffs = np.array([int(x) for x in lines], dtype=object)
            else:
                coeffs = np.array([int(x) % modulus for x in lines], dtype=object)
            return TruncatedSeries._trusted(val, coeffs, modulus)
    dt = np.dtype(f"<u{width}")
    if dt != cell_dtype(modulus):
        raise CacheFormatError(f"{path}: cell width {width} does not match modulus {modulus}")
    expected = HEADER_SIZE + length * width
    if path.stat().st_size != expected:
        raise CacheFormatError(f"{path}: size {path.stat().st_size} != {expected}")
    if length == 0:
        coeffs = np.zeros(0, dt)
    elif mmap:
        coeffs = np.memmap(path, dtype=dt, mode="r", offset=HEADER_SIZE, shape=(length,))
    else:
        coeffs = np.fromfile(path, dtype=dt, offset=HEADER_SIZE, count=length)
    return TruncatedSeries._trusted(val, coeffs, modulus)


def series_checksum(s: TruncatedSeries) -> str:
    """SHA-256 over the cache encoding of ``s``."""
    h = hashlib.sha256()
    if s.modulus is not None and s.modulus >= 1 << 64:
        h.update(MAGIC + _HEADER.pack(s.val, s.trunc, 0, 0) + str(s.modulus).encode())
    else:
        h.update(_header(s))
    if _width(s):
        step = 1 << 22
        for lo in range(0, len(s.coeffs), step):
            h.update(np.ascontiguousarray(s.coeffs[lo : lo + step]).tobytes())
    else:
        h.update(_body(s))
    return "sha256:" + h.hexdigest()
