"""The automaton: evolve de Bruijn densities with a local transition rule.

One step maps every interior site's pattern density to a new one: it sums,
over all preimage patterns of the neighborhood+pattern window, the
reconstructed probability of the pattern's interior part, the boundary
weight of the parts that stick out over the edge of the grid, and the
local rule's image density.  Near the grid edges the reconstruction
neighborhood is truncated so it only reads existing interior sites, and
the uncovered pattern positions are owned by the boundary condition.

Boundary conditions are either a fixed symbol pattern on the edge sites or
stationary per-step white noise given as densities over the left/right
edge windows; a fixed pattern is the point-mass special case of the
latter, so both share one step implementation.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

from .debruijn import reconstruct
from .densities import (DeBruijnDensity, SparseDensity, marginal, normalize,
                        prune, shift)
from .errors import UnexploredPreimageError, WindowMismatchError, ZeroMassError
from .translator import LocalFunction
from .windows import Interval, codec

__all__ = ["Deterministic", "WhiteNoise", "Automaton"]


@dataclass(frozen=True)
class Deterministic:
    """Fixed boundary symbols: one per edge site, left {1..r}, right {m-s+1..m}."""

    left: tuple[int, ...] = ()
    right: tuple[int, ...] = ()


@dataclass(frozen=True)
class WhiteNoise:
    """Stationary white-noise boundary: densities over the edge windows.

    Realizations at different steps are independent by construction; the
    step formula weights preimage patterns by edge marginals, so no
    realization is ever drawn explicitly.
    """

    left: SparseDensity | None = None
    right: SparseDensity | None = None


class Automaton:
    """Grid of m sites evolving per-site pattern densities.

    The local rule fixes the neighborhood window U = {-r..s} and pattern
    window V = {-p..q}; the grid must satisfy 1+p+q+r+s <= m.  Interior
    sites run from 1+p+r to m-q-s, and the r leftmost / s rightmost sites
    belong to the boundary condition.
    """

    def __init__(self, m: int, local: LocalFunction, boundary=None):
        u, v = local.neighborhood, local.pattern_window
        r, s = -u.lo, u.hi
        p, q = -v.lo, v.hi
        if min(r, s, p, q) < 0:
            raise ValueError("neighborhood and pattern windows must contain site 0")
        width = 1 + p + q + r + s
        if m < width:
            raise ValueError(
                f"window sizes require 1 + p + q + r + s <= m; "
                f"got p={p}, q={q}, r={r}, s={s} and m={m}"
            )
        if m < 2 * width:
            warnings.warn(
                f"grid size {m} is below twice the window span {width}; "
                "pattern windows overlap both boundaries at once",
                stacklevel=2,
            )
        self.m = m
        self.local = local
        self.n_symbols = local.n_symbols
        self.neighborhood = u
        self.pattern_window = v
        self.r, self.s, self.p, self.q = r, s, p, q
        self.interior_sites = Interval(1 + p + r, m - q - s)
        self.left_sites = Interval(1, r)
        self.right_sites = Interval(m - s + 1, m)
        self.boundary = boundary
        self._g_left, self._g_right = self._edge_densities(boundary)
        self._plan = [self._site_plan(i) for i in self.interior_sites]

    # -- construction helpers -------------------------------------------

    def _edge_densities(self, boundary):
        n = self.n_symbols
        if boundary is None:
            if self.r or self.s:
                raise ValueError("this neighborhood needs a boundary condition")
            return None, None
        if isinstance(boundary, Deterministic):
            left = right = None
            if self.r:
                if len(boundary.left) != self.r:
                    raise ValueError(f"need {self.r} left boundary symbols")
                left = SparseDensity.point(self.left_sites, n, boundary.left)
            if self.s:
                if len(boundary.right) != self.s:
                    raise ValueError(f"need {self.s} right boundary symbols")
                right = SparseDensity.point(self.right_sites, n, boundary.right)
            return left, right
        if isinstance(boundary, WhiteNoise):
            left = right = None
            if self.r:
                left = normalize(boundary.left)
                if left.window != self.left_sites:
                    left = shift(left, self.left_sites.lo - left.window.lo)
                    if left.window != self.left_sites:
                        raise WindowMismatchError("left boundary window has wrong size")
            if self.s:
                right = normalize(boundary.right)
                if right.window != self.right_sites:
                    right = shift(right, self.right_sites.lo - right.window.lo)
                    if right.window != self.right_sites:
                        raise WindowMismatchError("right boundary window has wrong size")
            return left, right
        raise TypeError(f"unsupported boundary spec {boundary!r}")

    def truncated_neighborhood(self, i: int) -> Interval:
        """Neighborhood clipped so i + window stays inside the interior sites."""
        lo, hi = self.interior_sites.lo, self.interior_sites.hi
        down = i - lo if i <= lo + self.r - 1 else self.r
        up = hi - i if i >= hi - self.s + 1 else self.s
        return Interval(-down, up)

    def _site_plan(self, i: int):
        u, v = self.neighborhood, self.pattern_window
        t_u = self.truncated_neighborhood(i)
        core = v + t_u
        pre = u + v
        left_overhang = Interval(pre.lo, core.lo - 1)
        right_overhang = Interval(core.hi + 1, pre.hi)
        left_items = self._edge_items(self._g_left, left_overhang.shift(i))
        right_items = self._edge_items(self._g_right, right_overhang.shift(i))
        return (i, t_u, len(core), len(right_overhang), left_items, right_items)

    def _edge_items(self, edge: SparseDensity | None, sites: Interval):
        if sites.is_empty:
            return [(0, 1.0)]
        assert edge is not None and edge.window.covers(sites)
        marg = marginal(edge, sites)
        return sorted(marg.weights.items())

    def boundary_site_symbols(self) -> dict[int, int]:
        """Site -> symbol map of a deterministic boundary (empty otherwise)."""
        if not isinstance(self.boundary, Deterministic):
            return {}
        out = dict(zip(self.left_sites, self.boundary.left))
        out.update(zip(self.right_sites, self.boundary.right))
        return out

    # -- dynamics ---------------------------------------------------------

    def step(self, g: DeBruijnDensity, *, renormalize: bool = True,
             mass_tol: float | None = None,
             boundary: WhiteNoise | Deterministic | None = None) -> DeBruijnDensity:
        """One application of the global function.

        With ``renormalize=False`` the raw accumulated per-site masses are
        kept (they equal one up to float drift on extendable input).
        ``boundary`` overrides the stationary boundary for this step
        (time-dependent boundary schedules).  ``mass_tol`` is forwarded to
        the reconstruction mass check; the default skips it, which is the
        right setting for pruned trajectories.
        """
        if g.sites != self.interior_sites or g.pattern_window != self.pattern_window:
            raise WindowMismatchError(
                f"state has sites {g.sites} / window {g.pattern_window}, expected "
                f"{self.interior_sites} / {self.pattern_window}"
            )
        plan = self._plan
        if boundary is not None:
            saved = self._g_left, self._g_right
            self._g_left, self._g_right = self._edge_densities(boundary)
            try:
                plan = [self._site_plan(i) for i in self.interior_sites]
            finally:
                self._g_left, self._g_right = saved

        n = self.n_symbols
        table = self.local.table
        out: dict[int, SparseDensity] = {}
        for i, t_u, core_len, right_len, left_items, right_items in plan:
            sub = g.restrict(t_u.shift(i)).shift(-i)
            alpha = reconstruct(sub, mass_tol=mass_tol)
            core_base = n**core_len
            right_base = n**right_len
            acc: dict[int, float] = {}
            for acode, aw in alpha.weights.items():
                for lcode, lw in left_items:
                    head = (lcode * core_base + acode) * right_base
                    law = lw * aw
                    for rcode, rw in right_items:
                        image = table.get(head + rcode)
                        if image is None:
                            raise UnexploredPreimageError(
                                f"preimage pattern {head + rcode} at site {i} "
                                "was never explored",
                                pattern=head + rcode, site=i,
                            )
                        w = law * rw
                        for c, pp in image.weights.items():
                            acc[c] = acc.get(c, 0.0) + w * pp
            dens = SparseDensity(self.pattern_window, n, acc)
            out[i] = normalize(dens) if renormalize else dens
        return DeBruijnDensity(self.interior_sites, self.pattern_window, out)

    def evolve(self, g0: DeBruijnDensity, steps: int, threshold: float = 0.0,
               boundary_schedule=None) -> list[DeBruijnDensity]:
        """Trajectory [g0, f(g0), ...] with per-site pruning after each step."""
        if not 0.0 <= threshold < 1.0:
            raise ValueError("threshold must lie in [0, 1)")
        if boundary_schedule is not None and len(boundary_schedule) < steps:
            raise ValueError("boundary schedule shorter than the trajectory")
        traj = [g0]
        g = g0
        for k in range(steps):
            override = boundary_schedule[k] if boundary_schedule is not None else None
            try:
                g = self.step(g, boundary=override)
            except UnexploredPreimageError as err:
                err.step = k + 1
                raise
            if threshold > 0.0:
                g = DeBruijnDensity(
                    g.sites, g.pattern_window,
                    {i: prune(g.at(i), threshold) for i in g.sites},
                )
            traj.append(g)
        return traj

    # -- bridges between global densities and de Bruijn densities ---------

    def localize_state(self, g: SparseDensity):
        """Split a global density into edge marginals and per-site windows.

        Returns (left, interior de Bruijn density, right); the edge parts
        are None on sides without boundary sites.  For a deterministic
        boundary the global density must put all mass on the boundary
        pattern.
        """
        full = Interval(1, self.m)
        if g.window != full or g.n_symbols != self.n_symbols:
            raise WindowMismatchError(f"global density must live on {full}")
        if not g.is_normalized(1e-6):
            raise ZeroMassError(f"global density has mass {g.total()!r}")
        left = marginal(g, self.left_sites) if self.r else None
        right = marginal(g, self.right_sites) if self.s else None
        if isinstance(self.boundary, Deterministic):
            for part, ours in ((left, self._g_left), (right, self._g_right)):
                if part is not None and set(part.weights) - set(ours.weights):
                    raise ZeroMassError(
                        "global density puts mass off the deterministic "
                        "boundary pattern"
                    )
        v = self.pattern_window
        deb = DeBruijnDensity(
            self.interior_sites, v,
            {i: shift(marginal(g, v.shift(i)), -i) for i in self.interior_sites},
        )
        return left, deb, right

    def assemble_state(self, deb: DeBruijnDensity, left: SparseDensity | None = None,
                       right: SparseDensity | None = None,
                       mass_tol: float | None = 1e-6) -> SparseDensity:
        """Rebuild a global density from edge marginals and window densities.

        Defaults to the automaton's own boundary densities; for a
        deterministic boundary the result carries zero mass off the
        boundary pattern.
        """
        if deb.sites != self.interior_sites or deb.pattern_window != self.pattern_window:
            raise WindowMismatchError("de Bruijn part has the wrong geometry")
        left = left if left is not None else self._g_left
        right = right if right is not None else self._g_right
        core = reconstruct(deb, mass_tol=mass_tol)
        n = self.n_symbols
        core_base = n ** len(core.window)
        right_base = n ** self.s
        left_items = left.weights.items() if left is not None else [(0, 1.0)]
        right_items = (sorted(right.weights.items())
                       if right is not None else [(0, 1.0)])
        out: dict[int, float] = {}
        for lcode, lw in sorted(left_items):
            for ccode, cw in core.weights.items():
                head = (lcode * core_base + ccode) * right_base
                for rcode, rw in right_items:
                    out[head + rcode] = lw * cw * rw
        return SparseDensity(Interval(1, self.m), n, out)

    # -- convenience -------------------------------------------------------

    def uniform_state(self) -> DeBruijnDensity:
        v = self.pattern_window
        return DeBruijnDensity(
            self.interior_sites, v,
            {i: SparseDensity.uniform(v, self.n_symbols) for i in self.interior_sites},
        )

    def point_state(self, site_symbols: dict[int, int]) -> DeBruijnDensity:
        """De Bruijn point mass matching one symbol per site (whole grid)."""
        v = self.pattern_window
        cdc = codec(v, self.n_symbols)
        per_site = {}
        for i in self.interior_sites:
            pat = tuple(site_symbols[i + j] for j in v)
            per_site[i] = SparseDensity(v, self.n_symbols, {cdc.encode(pat): 1.0})
        return DeBruijnDensity(self.interior_sites, v, per_site)
