"""Independent brute-force oracles used to cross-check the fast paths.

Everything here enumerates full pattern spaces and evaluates formulas
directly, without the chain/gluing machinery of the package.
"""
from __future__ import annotations

import itertools

import numpy as np

from cpa.densities import DeBruijnDensity, SparseDensity
from cpa.debruijn import PatternGeometry
from cpa.windows import Interval, codec


def brute_localize(g: SparseDensity, geom: PatternGeometry) -> dict[int, dict[tuple, float]]:
    """Per-site marginals computed by summing over all joint patterns."""
    cdc = g.codec
    v = geom.pattern_window
    out: dict[int, dict[tuple, float]] = {}
    for i in geom.sites:
        acc: dict[tuple, float] = {}
        for code, w in g.weights.items():
            pat = cdc.decode(code)
            lo = (i + v.lo) - g.window.lo
            sub = pat[lo:lo + len(v)]
            acc[sub] = acc.get(sub, 0.0) + w
        out[i] = acc
    return out


def brute_reconstruct_anchored(g: DeBruijnDensity, anchor: int) -> dict[tuple, float]:
    """Anchored reconstruction evaluated over every pattern of the joint window.

    Conditional factors are computed by explicit slice sums over the
    per-site weights; patterns with a vanishing factor get weight zero.
    """
    n = g.n_symbols
    v = g.pattern_window
    lv = len(v)
    joint = v + g.sites
    out: dict[tuple, float] = {}
    site_codecs = codec(v, n)
    for pat in itertools.product(range(n), repeat=len(joint)):
        value = 1.0
        for j in g.sites:
            lo = (j + v.lo) - joint.lo
            sub = pat[lo:lo + lv]
            w = g.per_site[j].weights.get(site_codecs.encode(sub), 0.0)
            if j == anchor:
                factor = w
            elif j < anchor:
                denom = sum(
                    p for c, p in g.per_site[j].weights.items()
                    if site_codecs.decode(c)[1:] == sub[1:]
                )
                factor = 0.0 if denom == 0.0 else w / denom
            else:
                denom = sum(
                    p for c, p in g.per_site[j].weights.items()
                    if site_codecs.decode(c)[:-1] == sub[:-1]
                )
                factor = 0.0 if denom == 0.0 else w / denom
            value *= factor
            if value == 0.0:
                break
        if value > 0.0:
            out[pat] = value
    return out


def random_joint_density(rng: np.random.Generator, window: Interval,
                         n_symbols: int, sparsity: float = 1.0) -> SparseDensity:
    """Dirichlet-weighted density over a random subset of the pattern space."""
    size = codec(window, n_symbols).size
    k = max(1, int(round(size * sparsity)))
    support = rng.choice(size, size=k, replace=False)
    w = rng.dirichlet(np.ones(k))
    return SparseDensity(window, n_symbols, {int(c): float(p) for c, p in zip(support, w)})


def perturb_weights(rng: np.random.Generator, g: DeBruijnDensity) -> DeBruijnDensity:
    """Randomly reweight each site's support (keeps extendability intact)."""
    per_site = {}
    for i in g.sites:
        d = g.per_site[i]
        codes = sorted(d.weights)
        w = rng.dirichlet(np.ones(len(codes)))
        per_site[i] = SparseDensity(d.window, d.n_symbols,
                                    {c: float(p) for c, p in zip(codes, w)})
    return DeBruijnDensity(g.sites, g.pattern_window, per_site)


def mc_site_marginals(values: np.ndarray, partition) -> dict[int, SparseDensity]:
    """Per-site symbol histograms of raw reference states (runs, sites, n)."""
    from cpa.partition import clamp_points

    runs, sites, _ = values.shape
    out = {}
    for site in range(sites):
        clamped, _ = clamp_points(values[:, site, :], partition.box)
        syms = partition.encode_many(clamped)
        counts = np.bincount(syms, minlength=partition.size)
        out[site + 1] = SparseDensity(
            Interval(0, 0), partition.size,
            {int(k): float(c) / runs for k, c in enumerate(counts) if c},
        )
    return out


def dissolved_marginal(density: SparseDensity, partition) -> np.ndarray:
    """Project a single-site symbol density onto the dissolved axis."""
    out = np.zeros(partition.cells_per_dim[0])
    for code, w in density.weights.items():
        out[partition.multi_index(code)[0]] += w
    return out


def white_noise_step_v0(automaton, g: DeBruijnDensity) -> DeBruijnDensity:
    """Independent single-site-pattern step under white-noise boundaries.

    Preimage neighborhood patterns are weighted by the product of interior
    single-site marginals and the joint boundary-window marginals of the
    edge densities (summed over boundary patterns that agree on the
    overlap).
    """
    from cpa.automaton import WhiteNoise
    from cpa.densities import marginal

    assert automaton.pattern_window == Interval(0, 0)
    assert isinstance(automaton.boundary, WhiteNoise)
    u = automaton.neighborhood
    n = automaton.n_symbols
    fixed = codec(u, n)
    out = {}
    for i in automaton.interior_sites:
        acc: dict[int, float] = {}
        for pat in itertools.product(range(n), repeat=len(u)):
            weight = 1.0
            for edge_sites, edge in ((automaton.left_sites, automaton.boundary.left),
                                     (automaton.right_sites, automaton.boundary.right)):
                overlap = edge_sites.intersect(u.shift(i))
                if overlap.is_empty:
                    continue
                marg = marginal(edge, overlap)
                sub = tuple(pat[site - i - u.lo] for site in overlap)
                weight *= marg.weights.get(codec(overlap, n).encode(sub), 0.0)
            for off, sym in zip(u, pat):
                site = i + off
                if site in automaton.interior_sites:
                    weight *= g.per_site[site].weights.get(sym, 0.0)
                elif site not in automaton.left_sites and site not in automaton.right_sites:
                    raise AssertionError("site neither interior nor boundary")
            if weight == 0.0:
                continue
            image = automaton.local.image(fixed.encode(pat))
            for c, p in image.weights.items():
                acc[c] = acc.get(c, 0.0) + weight * p
        out[i] = SparseDensity(Interval(0, 0), n, acc)
    return DeBruijnDensity(automaton.interior_sites, Interval(0, 0), out)


def single_window_global_step(automaton, g: DeBruijnDensity) -> DeBruijnDensity:
    """Independent implementation of the single-site-pattern global function.

    Only valid for pattern window {0}: the preimage probability of a
    neighborhood pattern is the plain product of single-site marginals,
    with boundary sites pinned to the deterministic boundary pattern.
    """
    from cpa.automaton import Deterministic

    assert automaton.pattern_window == Interval(0, 0)
    assert isinstance(automaton.boundary, Deterministic) or automaton.boundary is None
    rho = automaton.boundary_site_symbols()
    u = automaton.neighborhood
    n = automaton.n_symbols
    fixed = codec(u, n)
    out = {}
    for i in automaton.interior_sites:
        acc: dict[int, float] = {}
        for pat in itertools.product(range(n), repeat=len(u)):
            weight = 1.0
            ok = True
            for off, sym in zip(u, pat):
                site = i + off
                if site in rho:
                    if rho[site] != sym:
                        ok = False
                        break
                else:
                    weight *= g.per_site[site].weights.get(sym, 0.0)
            if not ok or weight == 0.0:
                continue
            image = automaton.local.image(fixed.encode(pat))
            for c, p in image.weights.items():
                acc[c] = acc.get(c, 0.0) + weight * p
        out[i] = SparseDensity(Interval(0, 0), n, acc)
    return DeBruijnDensity(automaton.interior_sites, Interval(0, 0), out)
