"""Sparse normalized weight functions over patterns.

A :class:`SparseDensity` stores strictly positive weights for the patterns
in its support, keyed by row-major integer pattern codes.  A
:class:`DeBruijnDensity` is a collection of per-site pattern densities over
a common pattern window, one density per site of a site interval.

Densities are treated as immutable values: every operation returns a new
object, so they can be shared freely across workers.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

from .errors import WindowMismatchError, ZeroMassError
from .windows import Interval, PatternCodec, codec

NORMALIZATION_TOL = 1e-9


@dataclass(frozen=True)
class SparseDensity:
    """Nonnegative weights over patterns of one window, stored sparsely."""

    window: Interval
    n_symbols: int
    weights: dict[int, float]

    def __post_init__(self):
        codec(self.window, self.n_symbols)  # enforces the 64-bit code bound
        for code, w in self.weights.items():
            if w < 0:
                raise ValueError(f"negative weight {w} for pattern {code}")
        cleaned = {c: float(w) for c, w in self.weights.items() if w > 0.0}
        object.__setattr__(self, "weights", cleaned)

    # -- constructors ------------------------------------------------------

    @classmethod
    def point(cls, window: Interval, n_symbols: int, symbols) -> "SparseDensity":
        """Point mass on a single pattern given as a symbol sequence."""
        code = codec(window, n_symbols).encode(tuple(symbols))
        return cls(window, n_symbols, {code: 1.0})

    @classmethod
    def from_patterns(cls, window: Interval, n_symbols: int, table: dict) -> "SparseDensity":
        """Build from a {symbol-tuple: weight} mapping."""
        cdc = codec(window, n_symbols)
        return cls(window, n_symbols, {cdc.encode(k): v for k, v in table.items()})

    @classmethod
    def uniform(cls, window: Interval, n_symbols: int) -> "SparseDensity":
        cdc = codec(window, n_symbols)
        w = 1.0 / cdc.size
        return cls(window, n_symbols, {c: w for c in cdc.all_codes()})

    # -- queries -----------------------------------------------------------

    @property
    def codec(self) -> PatternCodec:
        return codec(self.window, self.n_symbols)

    def total(self) -> float:
        return sum(self.weights.values())

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.total() - 1.0) <= tol

    def support(self) -> set[int]:
        return set(self.weights)

    def __call__(self, code: int) -> float:
        return self.weights.get(code, 0.0)

    def prob(self, symbols) -> float:
        """Weight of the pattern given as a symbol sequence."""
        return self.weights.get(self.codec.encode(tuple(symbols)), 0.0)

    def patterns(self) -> dict[tuple[int, ...], float]:
        """The support as a {symbol-tuple: weight} mapping (for tests/reports)."""
        cdc = self.codec
        return {cdc.decode(c): w for c, w in self.weights.items()}

    def __len__(self) -> int:
        return len(self.weights)


def normalize(d: SparseDensity) -> SparseDensity:
    """Scale weights so they sum to one."""
    total = d.total()
    if total <= 0.0:
        raise ZeroMassError("cannot normalize a density with zero total mass")
    if total == 1.0:
        return d
    return SparseDensity(d.window, d.n_symbols, {c: w / total for c, w in d.weights.items()})


def prune(d: SparseDensity, threshold: float) -> SparseDensity:
    """Drop entries below ``threshold`` and renormalize.

    ``threshold == 0`` is the identity.
    """
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must lie in [0, 1)")
    if threshold == 0.0:
        return d
    kept = {c: w for c, w in d.weights.items() if w >= threshold}
    if not kept:
        raise ZeroMassError(f"pruning at threshold {threshold} removed all mass")
    return normalize(SparseDensity(d.window, d.n_symbols, kept))


def l1_distance(a: SparseDensity, b: SparseDensity) -> float:
    """Sum of |a - b| over the union of supports; lies in [0, 2] for densities."""
    if a.window != b.window or a.n_symbols != b.n_symbols:
        raise WindowMismatchError(
            f"cannot compare densities over {a.window}/{a.n_symbols} and "
            f"{b.window}/{b.n_symbols}"
        )
    bw = b.weights
    dist = 0.0
    for c, w in a.weights.items():
        dist += abs(w - bw.get(c, 0.0))
    aw = a.weights
    for c, w in bw.items():
        if c not in aw:
            dist += w
    return dist


def marginal(d: SparseDensity, sub: Interval) -> SparseDensity:
    """Sum weights of patterns that agree on ``sub`` (a subwindow of d.window)."""
    if not d.window.covers(sub):
        raise WindowMismatchError(f"{sub} is not contained in {d.window}")
    cdc = d.codec
    out: dict[int, float] = {}
    for c, w in d.weights.items():
        p = cdc.project(c, sub)
        out[p] = out.get(p, 0.0) + w
    return SparseDensity(sub, d.n_symbols, out)


def shift(d: SparseDensity, offset: int) -> SparseDensity:
    """Relocate the window by ``offset``; pattern codes are unchanged."""
    return SparseDensity(d.window.shift(offset), d.n_symbols, dict(d.weights))


def mixture(parts: list[tuple[float, SparseDensity]]) -> SparseDensity:
    """Convex combination sum(lam * d); weights are not renormalized."""
    if not parts:
        raise ZeroMassError("empty mixture")
    window, n = parts[0][1].window, parts[0][1].n_symbols
    out: dict[int, float] = {}
    for lam, d in parts:
        if d.window != window or d.n_symbols != n:
            raise WindowMismatchError("mixture components must share a window")
        for c, w in d.weights.items():
            out[c] = out.get(c, 0.0) + lam * w
    return SparseDensity(window, n, out)


@dataclass(frozen=True)
class DeBruijnDensity:
    """One pattern density per site, all over the same pattern window."""

    sites: Interval
    pattern_window: Interval
    per_site: dict[int, SparseDensity] = field(repr=False)

    def __post_init__(self):
        if self.sites.is_empty:
            raise ValueError("site interval must be nonempty")
        missing = [i for i in self.sites if i not in self.per_site]
        if missing:
            raise ValueError(f"missing per-site densities at sites {missing}")
        for i in self.sites:
            d = self.per_site[i]
            if d.window != self.pattern_window:
                raise WindowMismatchError(
                    f"density at site {i} has window {d.window}, "
                    f"expected {self.pattern_window}"
                )

    @property
    def n_symbols(self) -> int:
        return self.per_site[self.sites.lo].n_symbols

    def at(self, site: int) -> SparseDensity:
        if site not in self.sites:
            raise WindowMismatchError(f"site {site} outside {self.sites}")
        return self.per_site[site]

    def restrict(self, sub: Interval) -> "DeBruijnDensity":
        """Keep only the per-site densities at the sites of ``sub``."""
        if not self.sites.covers(sub):
            raise WindowMismatchError(f"{sub} is not contained in {self.sites}")
        return DeBruijnDensity(sub, self.pattern_window,
                               {i: self.per_site[i] for i in sub})

    def shift(self, offset: int) -> "DeBruijnDensity":
        return DeBruijnDensity(
            self.sites.shift(offset), self.pattern_window,
            {i + offset: d for i, d in self.per_site.items()},
        )

    def site_marginals(self) -> dict[int, SparseDensity]:
        """Single-site symbol marginals: the offset-0 slice of each window density."""
        offset0 = Interval(0, 0)
        return {i: marginal(self.per_site[i], offset0) for i in self.sites}


def debruijn_l1(a: DeBruijnDensity, b: DeBruijnDensity) -> float:
    """Max over sites of the per-site L1 distance."""
    if a.sites != b.sites:
        raise WindowMismatchError("site intervals differ")
    return max(l1_distance(a.at(i), b.at(i)) for i in a.sites)


# -- CSV export of per-site symbol marginals --------------------------------

def write_marginals_csv(fh, marginals: dict[int, SparseDensity], cells_per_dim) -> None:
    """Write rows (site, symbol multi-index, probability), sites ascending.

    Every density must be a single-site density over the symbol set
    described by ``cells_per_dim``; the multi-index column renders the
    row-major symbol as comma-separated per-dimension cell indices.
    """
    import numpy as np

    writer = csv.writer(fh)
    writer.writerow(["site", "symbol", "probability"])
    for site in sorted(marginals):
        d = marginals[site]
        if len(d.window) != 1:
            raise WindowMismatchError("marginal export expects single-site densities")
        for code in sorted(d.weights):
            multi = np.unravel_index(code, tuple(cells_per_dim))
            label = ",".join(str(int(i)) for i in multi)
            writer.writerow([site, label, repr(d.weights[code])])


def read_marginals_csv(fh) -> dict[int, dict[tuple[int, ...], float]]:
    """Inverse of :func:`write_marginals_csv`, keyed by site then multi-index."""
    reader = csv.reader(fh)
    header = next(reader, None)
    if header != ["site", "symbol", "probability"]:
        raise ValueError(f"unexpected marginal CSV header: {header}")
    out: dict[int, dict[tuple[int, ...], float]] = {}
    for row in reader:
        if not row:
            continue
        site = int(row[0])
        multi = tuple(int(x) for x in row[1].split(","))
        out.setdefault(site, {})[multi] = float(row[2])
    return out
