"""Binary state snapshots.

Layout: one ASCII header line

    BLAB1 n=<n> period=<float> fields=<comma-list> t=<float>\n

followed by the named arrays as little-endian float64, row major, in
header order, and a trailing little-endian uint32 CRC32 of the payload
bytes. Round trips are bit-exact.
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .grid import Field, Grid


class SnapshotError(ValueError):
    pass


def write_fields(path, grid: Grid, t: float, fields: dict) -> None:
    """Write named arrays to a snapshot file, in dict order."""
    if not fields:
        raise SnapshotError("snapshot needs at least one field")
    names = list(fields)
    header = (f"BLAB1 n={grid.n} period={grid.period!r} "
              f"fields={','.join(names)} t={float(t)!r}\n")
    payload = b"".join(
        np.ascontiguousarray(fields[name], dtype="<f8").tobytes()
        for name in names)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def read_fields(path):
    """Read a snapshot; returns (n, period, t, dict name -> array)."""
    with open(path, "rb") as fh:
        header = fh.readline()
        rest = fh.read()
    try:
        text = header.decode("ascii").rstrip("\n")
    except UnicodeDecodeError:
        raise SnapshotError(f"{path}: header is not ASCII")
    parts = text.split(" ")
    if not parts or parts[0] != "BLAB1":
        raise SnapshotError(f"{path}: malformed header (missing BLAB1 magic)")
    kv = {}
    for item in parts[1:]:
        if "=" not in item:
            raise SnapshotError(f"{path}: malformed header entry '{item}'")
        key, val = item.split("=", 1)
        kv[key] = val
    try:
        n = int(kv["n"])
        period = float(kv["period"])
        names = kv["fields"].split(",")
        t = float(kv["t"])
    except (KeyError, ValueError) as exc:
        raise SnapshotError(f"{path}: malformed header ({exc})")
    if n <= 0 or not names or any(not s for s in names):
        raise SnapshotError(f"{path}: malformed header values")
    expected = len(names) * n * n * 8 + 4
    if len(rest) != expected:
        raise SnapshotError(
            f"{path}: expected {expected} bytes after header, "
            f"found {len(rest)}")
    payload, crc_bytes = rest[:-4], rest[-4:]
    stored = struct.unpack("<I", crc_bytes)[0]
    actual = zlib.crc32(payload)
    if stored != actual:
        raise SnapshotError(
            f"{path}: checksum mismatch (stored {stored:08x}, "
            f"payload {actual:08x})")
    out = {}
    for i, name in enumerate(names):
        chunk = payload[i * n * n * 8:(i + 1) * n * n * 8]
        out[name] = np.frombuffer(chunk, dtype="<f8").reshape(n, n).copy()
    return n, period, t, out


def write_snapshot(state, path) -> None:
    """Write a coupled state (omega, theta) snapshot."""
    write_fields(path, state.grid, state.t,
                 {"omega": state.omega.values, "theta": state.theta.values})


def read_snapshot(path):
    """Read a coupled state written by write_snapshot."""
    from .boussinesq import SimState
    n, period, t, fields = read_fields(path)
    if set(fields) != {"omega", "theta"}:
        raise SnapshotError(
            f"{path}: expected fields omega,theta, found "
            f"{','.join(fields)}")
    grid = Grid(n, period)
    return SimState(Field(grid, fields["omega"]), Field(grid, fields["theta"]),
                    t=t)
