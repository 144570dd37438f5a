"""Trace-set files.

Canonical text format (version 1)::

    #artnoise-traces v1 m=<m> B=<B> role=<role> counts=<k>:<n>,<k>:<n>,...
    <key>,<sample_0>,...,<sample_{m-1}>
    ...

Rows are grouped by key in ascending key order; samples are decimal floats
written with ``repr`` so a write/read round trip is exact.

Canonical binary format (version 1), all little-endian::

    magic   8 bytes  b"ANTRACE1"
    m       uint32
    B       uint16
    role    uint8    0 = raw, 1 = profiling, 2 = attack
    scale   float64  real value = int16 sample * scale
    n_keys  uint32
    n_keys x (key uint32, count uint32)
    samples int16, key-major, then trace, then sample

Grizzly layout: a headerless little-endian int16 array of shape
``(n_keys, n_traces, m)`` (default 256 x 3072 x 2500), or the same array as
``.npy``.  It is memory-mapped, never loaded whole.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .leakage import TraceSet

TEXT_MAGIC = "#artnoise-traces"
BIN_MAGIC = b"ANTRACE1"
ROLES = ("raw", "profiling", "attack")
_HEAD = struct.Struct("<IHBdI")
_PAIR = struct.Struct("<II")


class TraceFileError(ValueError):
    pass


# -- text ------------------------------------------------------------------

def write_text(ts: TraceSet, path) -> None:
    counts = ",".join(f"{k}:{n}" for k, n in ts.counts.items())
    with open(path, "w") as fh:
        fh.write(f"{TEXT_MAGIC} v1 m={ts.m} B={ts.B} role={ts.role} counts={counts}\n")
        for k in ts.keys:
            for row in ts.get(k):
                fh.write(f"{k}," + ",".join(map(repr, row.tolist())) + "\n")


def _parse_header(line: str, path):
    parts = line.split()
    if len(parts) < 2 or parts[0] != TEXT_MAGIC:
        raise TraceFileError(f"{path}:1: not a trace-set file (expected {TEXT_MAGIC!r} header)")
    if parts[1] != "v1":
        raise TraceFileError(f"{path}:1: unsupported version {parts[1]!r}")
    fields = {}
    for tok in parts[2:]:
        name, sep, value = tok.partition("=")
        if not sep:
            raise TraceFileError(f"{path}:1: malformed header field {tok!r}")
        fields[name] = value
    for name in ("m", "B", "counts"):
        if name not in fields:
            raise TraceFileError(f"{path}:1: header lacks {name}=")
    try:
        m, B = int(fields["m"]), int(fields["B"])
        counts = {}
        for tok in filter(None, fields["counts"].split(",")):
            k, n = tok.split(":")
            counts[int(k)] = int(n)
    except ValueError as exc:
        raise TraceFileError(f"{path}:1: malformed header: {exc}") from None
    role = fields.get("role", "raw")
    if role not in ROLES:
        raise TraceFileError(f"{path}:1: unknown role {role!r}")
    return m, B, role, counts


def read_text(path) -> TraceSet:
    with open(path) as fh:
        header = fh.readline()
        m, B, role, counts = _parse_header(header.rstrip("\n"), path)
        rows = {k: [] for k in counts}
        lineno = 1
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split(",")
            if len(fields) != m + 1:
                raise TraceFileError(f"{path}:{lineno}: expected key plus {m} samples, "
                                     f"got {len(fields)} fields")
            try:
                key = int(fields[0])
                samples = [float(x) for x in fields[1:]]
            except ValueError as exc:
                raise TraceFileError(f"{path}:{lineno}: {exc}") from None
            if key not in rows:
                raise TraceFileError(f"{path}:{lineno}: key {key} not announced in header")
            if len(rows[key]) == counts[key]:
                raise TraceFileError(f"{path}:{lineno}: more than {counts[key]} traces for key {key}")
            rows[key].append(samples)
    for k, n in counts.items():
        if len(rows[k]) != n:
            raise TraceFileError(f"{path}:{lineno}: truncated: key {k} has {len(rows[k])} of "
                                 f"{n} announced traces")
    traces = {k: np.array(v, dtype=float).reshape(-1, m) for k, v in rows.items()}
    return TraceSet(traces, m, B, role, meta={"source": str(path), "format": "canonical-text"})


# -- binary ----------------------------------------------------------------

def write_binary(ts: TraceSet, path, scale: float | None = None) -> float:
    """Write ``ts`` quantised to int16; returns the scale used."""
    peak = max((float(np.abs(ts.get(k)).max()) for k in ts.keys if ts.counts[k]), default=0.0)
    if scale is None:
        scale = peak / 32767 if peak > 0 else 1.0
    with open(path, "wb") as fh:
        fh.write(BIN_MAGIC)
        fh.write(_HEAD.pack(ts.m, ts.B, ROLES.index(ts.role), scale, len(ts.keys)))
        for k in ts.keys:
            fh.write(_PAIR.pack(k, ts.counts[k]))
        for k in ts.keys:
            q = np.rint(ts.get(k) / scale)
            if q.size and (q.min() < -32768 or q.max() > 32767):
                raise ValueError(f"key {k}: samples overflow int16 at scale {scale}")
            fh.write(q.astype("<i2").tobytes())
    return scale


def read_binary(path) -> TraceSet:
    data = Path(path).read_bytes()
    if data[:8] != BIN_MAGIC:
        raise TraceFileError(f"{path}: byte 0: bad magic {data[:8]!r}")
    pos = 8
    if len(data) < pos + _HEAD.size:
        raise TraceFileError(f"{path}: byte {pos}: truncated header")
    m, B, role, scale, n_keys = _HEAD.unpack_from(data, pos)
    pos += _HEAD.size
    if role >= len(ROLES):
        raise TraceFileError(f"{path}: byte {pos - _HEAD.size + 6}: unknown role code {role}")
    counts = {}
    for _ in range(n_keys):
        if len(data) < pos + _PAIR.size:
            raise TraceFileError(f"{path}: byte {pos}: truncated key table")
        k, n = _PAIR.unpack_from(data, pos)
        counts[k] = n
        pos += _PAIR.size
    traces = {}
    for k, n in counts.items():
        nbytes = 2 * n * m
        if len(data) < pos + nbytes:
            raise TraceFileError(f"{path}: byte {pos}: truncated samples for key {k} "
                                 f"(need {nbytes} bytes, {len(data) - pos} left)")
        traces[k] = np.frombuffer(data, dtype="<i2", count=n * m, offset=pos).reshape(n, m)
        pos += nbytes
    if pos != len(data):
        raise TraceFileError(f"{path}: byte {pos}: {len(data) - pos} trailing bytes")
    return TraceSet(traces, m, B, ROLES[role], scale,
                    meta={"source": str(path), "format": "canonical-binary"})


# -- grizzly ---------------------------------------------------------------

def read_grizzly(path, n_keys: int = 256, n_traces: int = 3072, m: int = 2500,
                 B: int = 8) -> TraceSet:
    """Memory-map a Grizzly-layout file as a raw TraceSet."""
    path = Path(path)
    if path.suffix == ".npy":
        arr = np.load(path, mmap_mode="r")
        if arr.ndim != 3:
            raise TraceFileError(f"{path}: expected a 3-D (keys, traces, samples) array, "
                                 f"got shape {arr.shape}")
    else:
        expected = n_keys * n_traces * m * 2
        size = path.stat().st_size
        if size != expected:
            raise TraceFileError(f"{path}: {size} bytes, expected {expected} for "
                                 f"{n_keys} keys x {n_traces} traces x {m} int16 samples")
        arr = np.memmap(path, dtype="<i2", mode="r", shape=(n_keys, n_traces, m))
    if arr.shape[0] > 2**B:
        raise TraceFileError(f"{path}: {arr.shape[0]} keys do not fit in B={B} bits")
    traces = {k: arr[k] for k in range(arr.shape[0])}
    return TraceSet(traces, arr.shape[2], B, "raw",
                    meta={"source": str(path), "format": "grizzly-adapter"})


@dataclass(eq=False)
class Dataset:
    profiling: TraceSet
    attack: TraceSet | None
    meta: dict = field(default_factory=dict)


def split(raw: TraceSet, n_profiling: int | None = None) -> Dataset:
    """First ``n_profiling`` traces of each key profile, the rest attack.

    Defaults to half of each key's traces.
    """
    prof, att = {}, {}
    for k in raw.keys:
        t = raw.traces[k]
        cut = t.shape[0] // 2 if n_profiling is None else n_profiling
        if cut > t.shape[0]:
            raise ValueError(f"key {k} has {t.shape[0]} traces, cannot profile on {cut}")
        prof[k], att[k] = t[:cut], t[cut:]
    meta = dict(raw.meta, m=raw.m, B=raw.B, counts=raw.counts)
    return Dataset(TraceSet(prof, raw.m, raw.B, "profiling", raw.scale, dict(raw.meta)),
                   TraceSet(att, raw.m, raw.B, "attack", raw.scale, dict(raw.meta)), meta)


FORMATS = ("canonical-text", "canonical-binary", "grizzly-adapter")


def ingest(path, format: str = "canonical-text", n_profiling: int | None = None,
           **grizzly) -> Dataset:
    """Load a trace file into a Dataset.

    A ``raw`` file is split per key into profiling/attack traces; a file
    tagged ``profiling`` or ``attack`` fills only that side.
    """
    if format == "canonical-text":
        ts = read_text(path)
    elif format == "canonical-binary":
        ts = read_binary(path)
    elif format == "grizzly-adapter":
        ts = read_grizzly(path, **grizzly)
    else:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if ts.role == "raw":
        return split(ts, n_profiling)
    meta = dict(ts.meta, m=ts.m, B=ts.B, counts=ts.counts)
    if ts.role == "profiling":
        return Dataset(ts, None, meta)
    return Dataset(TraceSet({}, ts.m, ts.B, "profiling"), ts, meta)
