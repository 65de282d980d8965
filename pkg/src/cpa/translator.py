"""Preprocessing: estimate local transition rules from a flow map.

The local rule maps every preimage pattern over neighborhood+pattern
window to a density of image patterns over the pattern window.  It is
estimated by Monte Carlo quadrature: draw test points uniformly in each
window cell, push every combination through the flow at all pattern
offsets, encode, and count.

Test points come from a :class:`SampleBank`, which derives one
deterministic point stream per partition cell from the master seed.  Two
tables (or a table and a global transition estimate) built from the same
bank therefore draw identical points wherever their windows overlap,
which makes sample-sharing consistency checks exact.
"""
from __future__ import annotations

import hashlib
import json
import struct
import threading
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .debruijn import reconstruct
from .densities import DeBruijnDensity, SparseDensity
from .errors import (ChecksumError, FormatError, NonExtendableError,
                     TableMismatchError, UnexploredPreimageError)
from .partition import clamp_points
from .windows import Interval, codec

__all__ = [
    "SampleBank",
    "LocalFunction",
    "estimate_local_function",
    "compose_local_function",
    "save_local_function",
    "load_local_function",
]

FILE_MAGIC = "CPA1"
FILE_VERSION = 1
CLAMP_WARN_FRACTION = 0.01


class SampleBank:
    """Deterministic, prefix-stable uniform test points per partition cell.

    The stream for a cell depends only on (master seed, symbol); asking
    for fewer points returns a prefix of the longer request.  Thread-safe.
    """

    def __init__(self, partition, seed):
        self.partition = partition
        self.seed = seed
        self._cache: dict[int, np.ndarray] = {}
        self._lock = threading.Lock()

    def points(self, symbol: int, count: int) -> np.ndarray:
        if count < 1:
            raise ValueError("count must be >= 1")
        with self._lock:
            have = self._cache.get(symbol)
            if have is None or len(have) < count:
                rng = np.random.default_rng(
                    np.random.SeedSequence((self.seed, int(symbol)))
                )
                pts = self.partition.sample_cell(symbol, rng, count)
                pts.setflags(write=False)
                self._cache[symbol] = pts
                have = pts
        return have[:count]


@dataclass
class LocalFunctionMeta:
    partition_spec: dict
    tau: float
    seed: int | None
    points_per_site: tuple[int, ...]
    clamp_escapes: int = 0
    total_points: int = 0
    composed_from: list[int] | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class LocalFunction:
    """Estimated map from preimage patterns to image-pattern densities."""

    neighborhood: Interval
    pattern_window: Interval
    n_symbols: int
    table: dict[int, SparseDensity | None]
    meta: LocalFunctionMeta

    @property
    def preimage_window(self) -> Interval:
        return self.neighborhood + self.pattern_window

    def image(self, code: int) -> SparseDensity:
        """Image density of a preimage pattern code; unexplored lookups raise."""
        dens = self.table.get(code)
        if dens is None:
            raise UnexploredPreimageError(
                f"preimage pattern {code} was never explored", pattern=code
            )
        return dens

    def explored(self) -> int:
        return sum(1 for d in self.table.values() if d is not None)

    def unexplored(self) -> int:
        return sum(1 for d in self.table.values() if d is None)

    def is_delta(self, tol: float = 0.0) -> bool:
        """Whether every explored image is a point mass (deterministic rule)."""
        return all(
            d is None or (len(d.weights) == 1 and abs(d.total() - 1.0) <= tol)
            for d in self.table.values()
        )


def _normalize_counts(points_per_site, length: int) -> tuple[int, ...]:
    if np.isscalar(points_per_site):
        counts = (int(points_per_site),) * length
    else:
        counts = tuple(int(c) for c in points_per_site)
    if len(counts) != length:
        raise ValueError(f"need {length} per-site point counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise ValueError("per-site point counts must be positive")
    return counts


def _estimate_one(flow, partition, bank, code, counts, neighborhood, pattern_window):
    """Image density of one preimage pattern; returns (density, clamped points)."""
    n = partition.size
    pre_codec = codec(neighborhood + pattern_window, n)
    symbols = pre_codec.decode(code)
    pts = [bank.points(s, counts[pos]) for pos, s in enumerate(symbols)]
    width = len(neighborhood)
    total = int(np.prod(counts))
    n_clamped = 0

    images = None
    if pattern_window == Interval(0, 0) and len(pts) == 2:
        fast = getattr(flow, "image_points_product", None)
        if fast is not None:
            images = fast(tuple(pts))
    if images is not None:
        clamped, n_clamped = clamp_points(images, partition.box)
        image_codes = partition.encode_many(clamped)
    else:
        idx = np.indices(counts).reshape(len(counts), -1)
        wins = np.stack([pts[pos][idx[pos]] for pos in range(len(counts))], axis=1)
        image_codes = np.zeros(total, dtype=np.int64)
        for j in pattern_window:
            start = j - pattern_window.lo
            img = flow.step_batch(wins[:, start:start + width, :])
            img, nc = clamp_points(img, partition.box)
            n_clamped += nc
            image_codes = image_codes * n + partition.encode_many(img)

    uniq, cnt = np.unique(image_codes, return_counts=True)
    dens = SparseDensity(pattern_window, n,
                         {int(u): float(c) / total for u, c in zip(uniq, cnt)})
    return dens, n_clamped, total


def estimate_local_function(flow, partition, neighborhood: Interval,
                            pattern_window: Interval, points_per_site,
                            seed=None, *, bank: SampleBank | None = None,
                            preimages=None, workers: int = 1) -> LocalFunction:
    """Monte Carlo estimate of the local rule for every preimage pattern.

    points_per_site is one positive count per site of the preimage window
    (left to right), or a single int for all sites.  Image points that
    escape the partition domain are clamped componentwise and counted.
    The result is deterministic given (flow, partition, seed, counts).
    """
    n = partition.size
    pre_codec = codec(neighborhood + pattern_window, n)
    counts = _normalize_counts(points_per_site, pre_codec.length)
    if bank is None:
        bank = SampleBank(partition, seed)
    codes = list(preimages) if preimages is not None else list(pre_codec.all_codes())

    flow_clamps_before = getattr(flow, "clamp_escapes", 0)
    table: dict[int, SparseDensity | None] = {}
    clamp_total = 0
    points_total = 0

    def work(code):
        return code, _estimate_one(flow, partition, bank, code, counts,
                                    neighborhood, pattern_window)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, codes))
    else:
        results = [work(code) for code in codes]
    for code, (dens, n_clamped, total) in results:
        table[code] = dens
        clamp_total += n_clamped
        points_total += total

    clamp_total += getattr(flow, "clamp_escapes", 0) - flow_clamps_before
    if points_total and clamp_total / points_total > CLAMP_WARN_FRACTION:
        warnings.warn(
            f"{clamp_total}/{points_total} image points left the state domain "
            "and were clamped", stacklevel=2,
        )
    meta = LocalFunctionMeta(
        partition_spec=partition.spec_dict(),
        tau=float(getattr(flow, "tau", 0.0)),
        seed=seed,
        points_per_site=counts,
        clamp_escapes=clamp_total,
        total_points=points_total,
    )
    return LocalFunction(neighborhood, pattern_window, n, table, meta)


def compose_local_function(small: LocalFunction, extension: Interval) -> LocalFunction:
    """Extend a local rule to the pattern window V = small.V + extension.

    Each preimage pattern restricts to one small-rule preimage per
    extension site; their image densities form a de Bruijn density whose
    reconstruction is the composed image.  This is an approximation of the
    directly estimated rule, not an identity.  Preimages whose restriction
    hits an unexplored entry, or whose de Bruijn density is not
    extendable, are marked unexplored.
    """
    if extension.is_empty:
        raise ValueError("extension window must be nonempty")
    small_v = small.pattern_window
    new_v = small_v + extension
    if not new_v.lo <= 0 <= new_v.hi:
        raise ValueError(f"composed pattern window {new_v} must contain site 0")
    n = small.n_symbols
    pre_codec = codec(small.neighborhood + new_v, n)
    small_window = small.neighborhood + small_v

    table: dict[int, SparseDensity | None] = {}
    for code in pre_codec.all_codes():
        per_site = {}
        ok = True
        for i in extension:
            sub = pre_codec.project(code, small_window.shift(i))
            dens = small.table.get(sub)
            if dens is None:
                ok = False
                break
            per_site[i] = dens
        if not ok:
            table[code] = None
            continue
        deb = DeBruijnDensity(extension, small_v, per_site)
        try:
            table[code] = reconstruct(deb)
        except NonExtendableError:
            table[code] = None

    meta = LocalFunctionMeta(
        partition_spec=small.meta.partition_spec,
        tau=small.meta.tau,
        seed=small.meta.seed,
        points_per_site=small.meta.points_per_site,
        clamp_escapes=small.meta.clamp_escapes,
        total_points=small.meta.total_points,
        composed_from=[extension.lo, extension.hi],
    )
    return LocalFunction(small.neighborhood, new_v, n, table, meta)


# -- persistence -------------------------------------------------------------

def _payload(lf: LocalFunction) -> dict:
    records = []
    for code in sorted(lf.table):
        dens = lf.table[code]
        if dens is None:
            records.append([code, None])
        else:
            records.append([code, [[c, dens.weights[c]] for c in sorted(dens.weights)]])
    return {
        "magic": FILE_MAGIC,
        "version": FILE_VERSION,
        "partition": lf.meta.partition_spec,
        "n_symbols": lf.n_symbols,
        "neighborhood": [lf.neighborhood.lo, lf.neighborhood.hi],
        "pattern_window": [lf.pattern_window.lo, lf.pattern_window.hi],
        "tau": lf.meta.tau,
        "seed": lf.meta.seed,
        "points_per_site": list(lf.meta.points_per_site),
        "clamp_escapes": lf.meta.clamp_escapes,
        "total_points": lf.meta.total_points,
        "composed_from": lf.meta.composed_from,
        "records": records,
    }


def _canonical(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


def save_local_function(lf: LocalFunction, path, fmt: str | None = None) -> None:
    """Write a table file; fmt 'json' or 'binary' (default: by .json suffix)."""
    path = str(path)
    if fmt is None:
        fmt = "json" if path.endswith(".json") else "binary"
    payload = _payload(lf)
    if fmt == "json":
        payload["checksum"] = hashlib.sha256(_canonical(payload)).hexdigest()
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
        return
    if fmt != "binary":
        raise ValueError(f"unknown format {fmt!r}")
    records = payload.pop("records")
    header = _canonical(payload)
    blob = bytearray()
    blob += FILE_MAGIC.encode()
    blob += struct.pack("<II", FILE_VERSION, len(header))
    blob += header
    blob += struct.pack("<Q", len(records))
    for code, entries in records:
        if entries is None:
            blob += struct.pack("<Qi", code, -1)
        else:
            blob += struct.pack("<Qi", code, len(entries))
            for icode, p in entries:
                blob += struct.pack("<Qd", icode, p)
    blob += hashlib.sha256(bytes(blob)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(blob))


def _from_payload(payload: dict) -> LocalFunction:
    u = Interval(*payload["neighborhood"])
    v = Interval(*payload["pattern_window"])
    n = int(payload["n_symbols"])
    table: dict[int, SparseDensity | None] = {}
    for code, entries in payload["records"]:
        if entries is None:
            table[int(code)] = None
        else:
            table[int(code)] = SparseDensity(v, n, {int(c): float(p) for c, p in entries})
    meta = LocalFunctionMeta(
        partition_spec=payload["partition"],
        tau=payload["tau"],
        seed=payload["seed"],
        points_per_site=tuple(payload["points_per_site"]),
        clamp_escapes=payload.get("clamp_escapes", 0),
        total_points=payload.get("total_points", 0),
        composed_from=payload.get("composed_from"),
    )
    return LocalFunction(u, v, n, table, meta)


def load_local_function(path, partition=None) -> LocalFunction:
    """Read a table file (either format), verify integrity, rebuild the rule.

    When a partition is given, the file's partition spec and symbol count
    must match it.
    """
    path = str(path)
    with open(path, "rb") as fh:
        head = fh.read(4)
        rest = fh.read()
    if head == FILE_MAGIC.encode():
        blob = head + rest
        if len(blob) < 44:
            raise FormatError("truncated table file")
        body, digest = blob[:-32], blob[-32:]
        if hashlib.sha256(body).digest() != digest:
            raise ChecksumError(f"{path}: table file failed its integrity check")
        version, header_len = struct.unpack_from("<II", body, 4)
        if version != FILE_VERSION:
            raise FormatError(f"unsupported table version {version}")
        off = 12
        payload = json.loads(body[off:off + header_len].decode())
        off += header_len
        (n_records,) = struct.unpack_from("<Q", body, off)
        off += 8
        records = []
        for _ in range(n_records):
            code, n_entries = struct.unpack_from("<Qi", body, off)
            off += 12
            if n_entries < 0:
                records.append([code, None])
                continue
            entries = []
            for _ in range(n_entries):
                icode, p = struct.unpack_from("<Qd", body, off)
                off += 16
                entries.append([icode, p])
            records.append([code, entries])
        payload["records"] = records
    else:
        try:
            payload = json.loads((head + rest).decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise FormatError(f"{path}: not a table file ({err})") from None
        if payload.get("magic") != FILE_MAGIC:
            raise FormatError(f"{path}: wrong magic {payload.get('magic')!r}")
        if payload.get("version") != FILE_VERSION:
            raise FormatError(f"unsupported table version {payload.get('version')}")
        stored = payload.pop("checksum", None)
        if stored != hashlib.sha256(_canonical(payload)).hexdigest():
            raise ChecksumError(f"{path}: table file failed its integrity check")

    lf = _from_payload(payload)
    if partition is not None:
        if partition.spec_dict() != payload["partition"] or partition.size != lf.n_symbols:
            raise TableMismatchError(
                f"table was built for {payload['partition']} with "
                f"{lf.n_symbols} symbols, not for the configured partition"
            )
    return lf
