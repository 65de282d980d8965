"""Ground-truth references for validating the automaton.

* The discretized global transfer operator on small grids: a row-stochastic
  matrix over global symbol states, estimated by the same per-cell Monte
  Carlo quadrature as the local rule so that sample-sharing identities hold
  exactly.
* The restriction operator: cell averaging of a continuous density into a
  piecewise-constant one (cell masses in coordinates).
* A Monte Carlo reference solver: independent runs of a model simulator
  with boundary values redrawn every coarse step, histogrammed per site.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densities import SparseDensity, normalize
from .errors import StateSpaceError, UnexploredPreimageError
from .partition import clamp_points
from .translator import SampleBank, _normalize_counts
from .windows import Interval, codec

__all__ = [
    "GlobalTransition",
    "transition_row",
    "build_global_transition",
    "apply_global_transition",
    "restrict_function",
    "restrict_samples",
    "restriction_l1_error",
    "MCReference",
    "mc_reference",
    "density_boundary_sampler",
]

STATE_SPACE_GUARD = 10**6


@dataclass
class GlobalTransition:
    """Row-stochastic transition estimate over global states (window 1..m)."""

    m: int
    n_symbols: int
    rows: dict[int, SparseDensity | None]
    meta: dict

    def row(self, state_code: int) -> SparseDensity:
        dens = self.rows.get(state_code)
        if dens is None:
            raise UnexploredPreimageError(
                f"global state {state_code} has no estimated row",
                pattern=state_code,
            )
        return dens

    def power_apply(self, g: SparseDensity, n: int) -> SparseDensity:
        for _ in range(n):
            g = apply_global_transition(self, g)
        return g


def transition_row(flow, partition, m: int, state_code: int, samples_per_site,
                   bank: SampleBank) -> SparseDensity:
    """One row: push the per-site test-point product through the global map.

    Sites reached by the neighborhood stencil evolve through the flow; the
    r leftmost and s rightmost sites are boundary sites on which the
    dynamics acts as the identity, so their samples keep their symbol.
    """
    n = partition.size
    window = Interval(1, m)
    state_codec = codec(window, n)
    counts = _normalize_counts(samples_per_site, m)
    symbols = state_codec.decode(state_code)
    pts = [bank.points(sym, counts[k]) for k, sym in enumerate(symbols)]
    idx = np.indices(counts).reshape(m, -1)
    total = idx.shape[1]
    u = flow.neighborhood
    r, s = -u.lo, u.hi
    width = len(u)
    wins = np.stack([pts[k][idx[k]] for k in range(m)], axis=1)  # (B, m, n_dim)

    image_codes = np.zeros(total, dtype=np.int64)
    for site in window:
        pos = site - 1
        if 1 + r <= site <= m - s:
            img = flow.step_batch(wins[:, pos + u.lo: pos + u.lo + width, :])
            img, _ = clamp_points(img, partition.box)
            col = partition.encode_many(img)
        else:
            col = np.full(total, symbols[pos], dtype=np.int64)
        image_codes = image_codes * n + col

    uniq, cnt = np.unique(image_codes, return_counts=True)
    return SparseDensity(window, n,
                         {int(c): float(k) / total for c, k in zip(uniq, cnt)})


def build_global_transition(flow, partition, m: int, samples_per_site,
                            seed=None, *, bank: SampleBank | None = None,
                            states=None) -> GlobalTransition:
    """Estimate rows for all global states (or a given subset).

    Refuses to enumerate state spaces beyond 10^6 states; larger grids are
    what the automaton itself is for.
    """
    n = partition.size
    state_codec = codec(Interval(1, m), n)
    if states is None:
        if state_codec.size > STATE_SPACE_GUARD:
            raise StateSpaceError(
                f"{n}^{m} = {state_codec.size} global states exceed the "
                f"enumeration guard ({STATE_SPACE_GUARD})"
            )
        states = state_codec.all_codes()
    if bank is None:
        bank = SampleBank(partition, seed)
    rows: dict[int, SparseDensity | None] = {}
    for code in states:
        rows[int(code)] = transition_row(flow, partition, m, int(code),
                                         samples_per_site, bank)
    meta = {
        "partition": partition.spec_dict(),
        "samples_per_site": samples_per_site,
        "seed": seed,
        "tau": float(getattr(flow, "tau", 0.0)),
    }
    return GlobalTransition(m, n, rows, meta)


def apply_global_transition(p: GlobalTransition, g: SparseDensity) -> SparseDensity:
    """Push a global density one step: mixture of rows, renormalized."""
    window = Interval(1, p.m)
    if g.window != window or g.n_symbols != p.n_symbols:
        raise ValueError(f"density must live on {window} over {p.n_symbols} symbols")
    acc: dict[int, float] = {}
    for code, w in g.weights.items():
        row = p.rows.get(code)
        if row is None:
            raise UnexploredPreimageError(
                f"mass {w} sits on state {code} with no estimated row",
                pattern=code,
            )
        for c, pr in row.weights.items():
            acc[c] = acc.get(c, 0.0) + w * pr
    return normalize(SparseDensity(window, p.n_symbols, acc))


# -- restriction of continuous densities -------------------------------------

def _global_cells(partition, m: int):
    """Bounds arrays (lower, upper) of every product cell, (n_states, m*n)."""
    n_dim = partition.ndim
    size = partition.size
    lows = np.empty((size, n_dim))
    highs = np.empty((size, n_dim))
    for sym in range(size):
        cell = partition.cell_bounds(sym)
        lows[sym] = cell.lower
        highs[sym] = cell.upper
    state_codec = codec(Interval(1, m), size)
    if state_codec.size > STATE_SPACE_GUARD:
        raise StateSpaceError("too many product cells to enumerate")
    glo = np.empty((state_codec.size, m * n_dim))
    ghi = np.empty((state_codec.size, m * n_dim))
    for code in state_codec.all_codes():
        syms = state_codec.decode(code)
        for k, sym in enumerate(syms):
            glo[code, k * n_dim:(k + 1) * n_dim] = lows[sym]
            ghi[code, k * n_dim:(k + 1) * n_dim] = highs[sym]
    return glo, ghi


def _midpoint_grid(lo: np.ndarray, hi: np.ndarray, per_axis: int) -> np.ndarray:
    axes = [lo[d] + (hi[d] - lo[d]) * (np.arange(per_axis) + 0.5) / per_axis
            for d in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([mm.ravel() for mm in mesh], axis=1)


def restrict_function(density_fn, partition, m: int = 1, *,
                      grid_per_axis: int = 8, method: str = "midpoint",
                      rng: np.random.Generator | None = None,
                      points_per_cell: int = 256) -> SparseDensity:
    """Cell masses of a continuous density, normalized to total mass one.

    density_fn maps an (M, m*n) array of points to (M,) values.  The
    midpoint rule uses a per-axis tensor grid inside every cell; 'mc' uses
    uniform samples instead.  Restriction is idempotent on cell-aligned
    piecewise-constant inputs.
    """
    glo, ghi = _global_cells(partition, m)
    weights: dict[int, float] = {}
    for code in range(len(glo)):
        lo, hi = glo[code], ghi[code]
        if method == "midpoint":
            pts = _midpoint_grid(lo, hi, grid_per_axis)
        elif method == "mc":
            if rng is None:
                raise ValueError("mc quadrature needs an rng")
            pts = lo + rng.random((points_per_cell, len(lo))) * (hi - lo)
        else:
            raise ValueError(f"unknown quadrature method {method!r}")
        vol = float(np.prod(hi - lo))
        mass = float(np.mean(density_fn(pts))) * vol
        if mass > 0.0:
            weights[code] = mass
    return normalize(SparseDensity(Interval(1, m), partition.size, weights))


def restrict_samples(points: np.ndarray, partition, m: int = 1) -> SparseDensity:
    """Empirical cell-mass density of sampled global states (M, m, n)."""
    pts = np.asarray(points, dtype=float)
    if m == 1 and pts.ndim == 2:
        pts = pts[:, None, :]
    n = partition.size
    code_acc = np.zeros(len(pts), dtype=np.int64)
    for k in range(m):
        clamped, _ = clamp_points(pts[:, k, :], partition.box)
        code_acc = code_acc * n + partition.encode_many(clamped)
    uniq, cnt = np.unique(code_acc, return_counts=True)
    return SparseDensity(Interval(1, m), n,
                         {int(c): float(k) / len(pts) for c, k in zip(uniq, cnt)})


def restriction_l1_error(density_fn, partition, m: int = 1, *,
                         grid_per_axis: int = 32) -> float:
    """Quadrature estimate of the L1 distance between a density and its restriction."""
    glo, ghi = _global_cells(partition, m)
    err = 0.0
    for code in range(len(glo)):
        lo, hi = glo[code], ghi[code]
        pts = _midpoint_grid(lo, hi, grid_per_axis)
        vals = density_fn(pts)
        vol = float(np.prod(hi - lo))
        err += float(np.mean(np.abs(np.mean(vals) - vals))) * vol
    return err


# -- Monte Carlo reference ----------------------------------------------------

@dataclass
class MCReference:
    """Per-site symbol histograms of reference trajectories at report steps."""

    report_steps: list[int]
    marginals: dict[int, dict[int, SparseDensity]]  # step -> site -> density
    values: np.ndarray | None = None  # (runs, steps, sites, n) when kept


def density_boundary_sampler(edge_density: SparseDensity, partition):
    """Sampler of continuous boundary values from a symbol-window density.

    Draws a symbol pattern per (run, step) and then a uniform point inside
    each drawn cell; returns an array (runs, steps, window length, n).
    """
    width = len(edge_density.window)
    cdc = edge_density.codec
    codes = sorted(edge_density.weights)
    probs = np.array([edge_density.weights[c] for c in codes])
    probs = probs / probs.sum()
    sym_rows = np.array([cdc.decode(c) for c in codes], dtype=np.int64)
    size = partition.size
    lows = np.array([partition.cell_bounds(s).lower for s in range(size)])
    highs = np.array([partition.cell_bounds(s).upper for s in range(size)])

    def sample(rng: np.random.Generator, n_runs: int, n_steps: int) -> np.ndarray:
        pick = rng.choice(len(codes), size=(n_runs, n_steps), p=probs)
        syms = sym_rows[pick]  # (runs, steps, width)
        u = rng.random((n_runs, n_steps, width, partition.ndim))
        return lows[syms] + u * (highs[syms] - lows[syms])

    return sample


def mc_reference(simulator, initial_states, boundary_sampler, *, n_steps: int,
                 n_runs: int, report_steps, partition, seed=None,
                 keep_values: bool = False) -> MCReference:
    """Reference per-site marginals from n_runs independent trajectories.

    ``initial_states`` is either an array acceptable to the simulator or a
    callable (rng, n_runs) -> array; boundary values are redrawn every
    coarse step and held constant in between (the simulator's contract).
    Sites are numbered 1..m to match the automaton.  Reproducible under
    ``seed``.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    rng = np.random.default_rng(seed)
    initial = initial_states(rng, n_runs) if callable(initial_states) else initial_states
    boundary = None
    if boundary_sampler is not None:
        boundary = boundary_sampler(rng, n_runs, n_steps)
    report_steps = sorted(set(int(t) for t in report_steps))
    values = simulator.run(initial, boundary, report_steps)  # (R, T, m, n)

    n = partition.size
    site_window = Interval(0, 0)
    marginals: dict[int, dict[int, SparseDensity]] = {}
    for t, step in enumerate(report_steps):
        per_site = {}
        for site in range(values.shape[2]):
            clamped, _ = clamp_points(values[:, t, site, :], partition.box)
            syms = partition.encode_many(clamped)
            cnt = np.bincount(syms, minlength=n)
            per_site[site + 1] = SparseDensity(
                site_window, n,
                {int(k): float(c) / n_runs for k, c in enumerate(cnt) if c},
            )
        marginals[step] = per_site
    return MCReference(report_steps, marginals, values if keep_values else None)
