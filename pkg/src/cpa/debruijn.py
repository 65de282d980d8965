"""Localization and reconstruction calculus for overlapping pattern densities.

``localize`` turns a joint density over a long window into a de Bruijn
density: one marginal per site, each over the shorter pattern window V.
``reconstruct_anchored`` glues the per-site densities back into a joint
density by multiplying the anchor site's marginal with left/right
conditional probabilities along overlapping windows (a spatial Markov
approximation of order |V|-1).  ``reconstruct`` averages the anchored
reconstructions over all sites.

Reconstruction is only defined on *extendable* de Bruijn densities, where
every supported pattern at every site takes part in at least one globally
consistent overlap-gluing.  On localized images of joint densities the two
maps are mutually inverse per site, the anchored reconstructions all agree,
and reconstruction produces the unique fixed point of
reconstruct∘localize within each localization class.
"""
from __future__ import annotations

from dataclasses import dataclass

from .densities import DeBruijnDensity, SparseDensity, l1_distance, marginal, shift
from .errors import NonExtendableError, WindowMismatchError
from .windows import Interval

__all__ = [
    "PatternGeometry",
    "localize",
    "reconstruct_anchored",
    "reconstruct",
    "is_extendable",
    "is_factorizable",
]

#: reconstruction mass may deviate from one by at most this before the
#: input is rejected as non-extendable (exact inputs telescope to 1).
EXTENDABILITY_TOL = 1e-6


@dataclass(frozen=True)
class PatternGeometry:
    """Pattern window V (containing 0) and site window W of a localization."""

    pattern_window: Interval
    sites: Interval

    def __post_init__(self):
        v, w = self.pattern_window, self.sites
        if v.is_empty or not (v.lo <= 0 <= v.hi):
            raise ValueError(f"pattern window {v} must contain site 0")
        if w.is_empty:
            raise ValueError("site window must be nonempty")

    @property
    def joint_window(self) -> Interval:
        return self.pattern_window + self.sites

    @property
    def v_plus(self) -> Interval:
        """Pattern window without its leftmost site."""
        return self.pattern_window.drop_left()

    @property
    def v_minus(self) -> Interval:
        """Pattern window without its rightmost site."""
        return self.pattern_window.drop_right()


def localize(g: SparseDensity, geom: PatternGeometry) -> DeBruijnDensity:
    """Per-site pattern marginals of a joint density over V + W.

    The marginal at site i collects the mass of all joint patterns that
    agree with a given pattern on the window i + V, re-anchored to V.
    Every localized image is extendable.
    """
    if g.window != geom.joint_window:
        raise WindowMismatchError(
            f"density window {g.window} != pattern+site window {geom.joint_window}"
        )
    if not g.is_normalized(EXTENDABILITY_TOL):
        raise ValueError(f"input density has mass {g.total()!r}, expected 1")
    v = geom.pattern_window
    per_site = {i: shift(marginal(g, v.shift(i)), -i) for i in geom.sites}
    return DeBruijnDensity(geom.sites, v, per_site)


def _site_tables(g: DeBruijnDensity):
    """Per-site weight dicts plus marginal masses of the two overlap windows.

    splus[j][c % n^(L-1)] sums the site-j weights of all patterns sharing a
    given right overlap (V without its leftmost site); sminus[j][c // n]
    does the same for the left overlap (V without its rightmost site).
    """
    n = g.n_symbols
    lv = len(g.pattern_window)
    pow_tail = n ** (lv - 1)
    weights, splus, sminus = [], [], []
    for j in g.sites:
        w = g.per_site[j].weights
        sp: dict[int, float] = {}
        sm: dict[int, float] = {}
        for c, p in w.items():
            kp = c % pow_tail
            sp[kp] = sp.get(kp, 0.0) + p
            km = c // n
            sm[km] = sm.get(km, 0.0) + p
        weights.append(w)
        splus.append(sp)
        sminus.append(sm)
    return weights, splus, sminus, pow_tail


def _chains(g: DeBruijnDensity):
    """All overlap-consistent support chains.

    Yields (joint_code, site_codes) for every assignment of one supported
    pattern per site in which neighboring patterns agree on their |V|-1
    overlapping sites.  Joint codes live over V + sites.
    """
    n = g.n_symbols
    lv = len(g.pattern_window)
    pow_tail = n ** (lv - 1)
    site_list = list(g.sites)
    first = sorted(g.per_site[site_list[0]].weights)
    # For each later site, group supported codes by their left overlap.
    ext: list[dict[int, list[int]]] = []
    for j in site_list[1:]:
        groups: dict[int, list[int]] = {}
        for c in sorted(g.per_site[j].weights):
            groups.setdefault(c // n, []).append(c)
        ext.append(groups)

    depth_max = len(site_list) - 1
    stack: list[tuple[int, int, list[int]]] = [(0, c, [c]) for c in reversed(first)]
    while stack:
        depth, joint, codes = stack.pop()
        if depth == depth_max:
            yield joint, codes
            continue
        last = codes[-1]
        for c in ext[depth].get(last % pow_tail, ()):
            stack.append((depth + 1, joint * n + c % n, codes + [c]))


def _alpha_terms(g: DeBruijnDensity, anchors) -> list[dict[int, float]]:
    """Anchored reconstruction weights for several anchors in one pass.

    For a chain with per-site codes c_j, the weight at anchor i is

        w_i(c_i) * prod_{k<i} w_k(c_k)/S+_k(c_k) * prod_{l>i} w_l(c_l)/S-_l(c_l)

    which shares its numerator across anchors; prefix/suffix products of the
    conditional denominators give all anchors in O(|sites|) per chain.
    Chains enumerate exactly the patterns with nonzero weight, and the
    denominators are bounded below by the corresponding numerator factors,
    so no division by zero can occur.
    """
    site_list = list(g.sites)
    index = {j: k for k, j in enumerate(site_list)}
    weights, splus, sminus, pow_tail = _site_tables(g)
    n = g.n_symbols
    m = len(site_list)
    out: list[dict[int, float]] = [dict() for _ in anchors]
    anchor_idx = [index[a] for a in anchors]

    for joint, codes in _chains(g):
        numer = 1.0
        rp = [0.0] * m
        rm = [0.0] * m
        for k in range(m):
            c = codes[k]
            numer *= weights[k][c]
            rp[k] = 1.0 / splus[k][c % pow_tail]
            rm[k] = 1.0 / sminus[k][c // n]
        prefix = [1.0] * (m + 1)
        for k in range(m):
            prefix[k + 1] = prefix[k] * rp[k]
        suffix = [1.0] * (m + 1)
        for k in range(m - 1, -1, -1):
            suffix[k] = suffix[k + 1] * rm[k]
        for slot, k in enumerate(anchor_idx):
            out[slot][joint] = numer * prefix[k] * suffix[k + 1]
    return out


def _check_mass(weights: dict[int, float], tol) -> None:
    if tol is None:
        return
    total = sum(weights.values())
    if abs(total - 1.0) > tol:
        raise NonExtendableError(
            f"reconstruction mass {total!r} deviates from 1 by more than {tol}; "
            "the de Bruijn density is not extendable"
        )


def reconstruct_anchored(g: DeBruijnDensity, anchor: int,
                         mass_tol: float | None = EXTENDABILITY_TOL) -> SparseDensity:
    """Joint density over V + sites rebuilt around one anchor site.

    The anchor's marginal enters directly; sites left of the anchor
    contribute the conditional probability of their leftmost symbol given
    the rest of their pattern, sites right of the anchor the conditional of
    their rightmost symbol.  Pass ``mass_tol=None`` to skip the
    extendability mass check (e.g. on pruned trajectory states).
    """
    if anchor not in g.sites:
        raise WindowMismatchError(f"anchor {anchor} outside {g.sites}")
    terms = _alpha_terms(g, (anchor,))[0]
    _check_mass(terms, mass_tol)
    return SparseDensity(g.pattern_window + g.sites, g.n_symbols, terms)


def reconstruct(g: DeBruijnDensity,
                mass_tol: float | None = EXTENDABILITY_TOL) -> SparseDensity:
    """Arithmetic mean of the anchored reconstructions over all sites.

    On localized images all anchored reconstructions coincide, so the mean
    is a no-op there; off that set it is the symmetric choice.
    """
    anchors = list(g.sites)
    per_anchor = _alpha_terms(g, anchors)
    inv = 1.0 / len(anchors)
    out: dict[int, float] = {}
    for terms in per_anchor:
        for c, w in terms.items():
            out[c] = out.get(c, 0.0) + w * inv
    _check_mass(out, mass_tol)
    return SparseDensity(g.pattern_window + g.sites, g.n_symbols, out)


def is_extendable(g: DeBruijnDensity) -> bool:
    """Whether every supported pattern joins some globally consistent chain.

    Forward/backward reachability over the overlap-consistency relation;
    because windows are intervals, a pattern reachable from both ends lies
    on a full chain.
    """
    n = g.n_symbols
    lv = len(g.pattern_window)
    pow_tail = n ** (lv - 1)
    site_list = list(g.sites)
    supports = [set(g.per_site[j].weights) for j in site_list]

    fwd: list[set[int]] = [set(supports[0])]
    for k in range(1, len(site_list)):
        heads = {c % pow_tail for c in fwd[-1]}
        fwd.append({c for c in supports[k] if c // n in heads})
    bwd: list[set[int]] = [set()] * len(site_list)
    bwd[-1] = set(supports[-1])
    for k in range(len(site_list) - 2, -1, -1):
        tails = {c // n for c in bwd[k + 1]}
        bwd[k] = {c for c in supports[k] if c % pow_tail in tails}
    return all(
        (fwd[k] & bwd[k]) == supports[k] for k in range(len(site_list))
    )


def is_factorizable(g: SparseDensity, geom: PatternGeometry,
                    tol: float = 1e-9) -> bool:
    """Whether g is fixed by reconstruct_anchored∘localize for every anchor.

    Such densities are the unique representatives of their localization
    equivalence classes.
    """
    loc = localize(g, geom)
    for anchor in geom.sites:
        rebuilt = reconstruct_anchored(loc, anchor, mass_tol=None)
        if l1_distance(rebuilt, g) > tol:
            return False
    return True
