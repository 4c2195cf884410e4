"""On-disk trajectory archives: binary checkpoints, CSV series, JSON manifest.

Checkpoint layout (little-endian): magic ``MHDG``, format version u32=1, then
N:u32, nu:f64, eta:f64, t:f64, coefficient count u64, then one record per
stored wavevector sorted lexicographically by (n1, n2, n3): n1:i32, n2:i32,
n3:i32 followed by 12 f64 (Re/Im of the 3 components of the velocity
coefficient, then of the magnetic one).
"""

from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError, TraceError
from .spectral import SpectralField, geometry

MAGIC = b"MHDG"
VERSION = 1

_HEADER = struct.Struct("<4sIIdddQ")
_REC_DTYPE = np.dtype([("n", "<i4", (3,)), ("c", "<f8", (12,))])


def checkpoint_save(state, path) -> None:
    g = geometry(state.V.N)
    modes = g.modes
    order = np.lexsort((modes[:, 2], modes[:, 1], modes[:, 0]))
    modes = modes[order]
    vvals = state.V.coeffs[g.ball_idx][order]
    bvals = state.B.coeffs[g.ball_idx][order]
    rec = np.empty(len(modes), dtype=_REC_DTYPE)
    rec["n"] = modes
    rec["c"][:, 0:6:2] = vvals.real
    rec["c"][:, 1:6:2] = vvals.imag
    rec["c"][:, 6:12:2] = bvals.real
    rec["c"][:, 7:12:2] = bvals.imag
    with open(path, "wb") as f:
        f.write(
            _HEADER.pack(
                MAGIC, VERSION, state.V.N, state.nu, state.eta, state.t, len(modes)
            )
        )
        f.write(rec.tobytes())


def checkpoint_load(path):
    from .solver import MhdState

    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise CheckpointError("unexpected end of checkpoint")
        magic, version, N, nu, eta, t, count = _HEADER.unpack(head)
        if magic != MAGIC:
            raise CheckpointError("bad magic %r" % magic)
        if version != VERSION:
            raise CheckpointError("unsupported checkpoint version %d" % version)
        body = f.read(count * _REC_DTYPE.itemsize)
        if len(body) < count * _REC_DTYPE.itemsize:
            raise CheckpointError("unexpected end of checkpoint")
    rec = np.frombuffer(body, dtype=_REC_DTYPE)
    size = 2 * N + 1
    vc = np.zeros((size, size, size, 3), dtype=np.complex128)
    bc = np.zeros_like(vc)
    idx = rec["n"] + N
    if np.any(idx < 0) or np.any(idx >= size):
        raise CheckpointError("wavevector outside the stored ball")
    vc[idx[:, 0], idx[:, 1], idx[:, 2]] = rec["c"][:, 0:6:2] + 1j * rec["c"][:, 1:6:2]
    bc[idx[:, 0], idx[:, 1], idx[:, 2]] = rec["c"][:, 6:12:2] + 1j * rec["c"][:, 7:12:2]
    try:
        V = SpectralField(N, vc).validate()
        B = SpectralField(N, bc).validate()
    except Exception as exc:
        raise CheckpointError(str(exc)) from exc
    return MhdState(V=V, B=B, t=t, nu=nu, eta=eta)


class TraceArchive:
    """Directory holding a manifest, a CSV time series and checkpoints."""

    def __init__(self, root):
        self.root = Path(root)
        self._columns = None
        self._csv_file = None
        self._writer = None
        self._last_t = None

    # -- writer side ---------------------------------------------------------

    @classmethod
    def create(cls, root, manifest: dict) -> "TraceArchive":
        arch = cls(root)
        arch.root.mkdir(parents=True, exist_ok=True)
        (arch.root / "checkpoints").mkdir(exist_ok=True)
        with open(arch.root / "manifest.json", "w") as f:
            json.dump(manifest, f, indent=1, sort_keys=True)
        arch._csv_file = open(arch.root / "series.csv", "w", newline="")
        arch._writer = csv.writer(arch._csv_file)
        return arch

    def append(self, row: dict) -> None:
        if self._writer is None:
            raise TraceError("archive not opened for writing")
        if self._columns is None:
            self._columns = list(row.keys())
            self._writer.writerow(self._columns)
        t = row["t"]
        if self._last_t is not None and not t > self._last_t:
            raise TraceError("sample times must increase strictly")
        self._last_t = t
        self._writer.writerow([repr(float(row[c])) for c in self._columns])
        self._csv_file.flush()

    def save_checkpoint(self, state, step: int) -> None:
        checkpoint_save(state, self.root / "checkpoints" / ("step_%08d.bin" % step))

    def update_manifest(self, extra: dict) -> None:
        man = self.manifest
        man.update(extra)
        with open(self.root / "manifest.json", "w") as f:
            json.dump(man, f, indent=1, sort_keys=True)

    def finalize(self) -> None:
        if self._csv_file is not None:
            self._csv_file.close()
            self._csv_file = None
            self._writer = None

    # -- reader side ---------------------------------------------------------

    @classmethod
    def load(cls, root) -> "TraceArchive":
        arch = cls(root)
        if not (arch.root / "manifest.json").exists():
            raise TraceError("no manifest in %s" % root)
        arch._read()
        return arch

    def _read(self):
        with open(self.root / "series.csv", newline="") as f:
            rows = list(csv.reader(f))
        if not rows:
            raise TraceError("empty series")
        self._columns = rows[0]
        self._data = np.array(
            [[float(x) for x in r] for r in rows[1:]], dtype=float
        ).reshape(len(rows) - 1, len(self._columns))

    @property
    def manifest(self) -> dict:
        with open(self.root / "manifest.json") as f:
            return json.load(f)

    @property
    def columns(self):
        return list(self._columns)

    def has_col(self, name: str) -> bool:
        return name in self._columns

    def col(self, name: str) -> np.ndarray:
        if name not in self._columns:
            raise TraceError("trace has no column %r" % name)
        return self._data[:, self._columns.index(name)]

    @property
    def times(self) -> np.ndarray:
        return self.col("t")

    def checkpoint_paths(self):
        d = self.root / "checkpoints"
        if not d.exists():
            return []
        return sorted(d.glob("step_*.bin"))

    def checkpoints(self):
        """Load every stored checkpoint, sorted by time."""
        states = [checkpoint_load(p) for p in self.checkpoint_paths()]
        states.sort(key=lambda s: s.t)
        return states
