import math

import numpy as np
import pytest

from cpa.densities import SparseDensity, l1_distance, mixture
from cpa.errors import StateSpaceError, UnexploredPreimageError
from cpa.models import AveragingFlow, CoarseSimulator, IdentityFlow
from cpa.oracle import (apply_global_transition, build_global_transition,
                        density_boundary_sampler, mc_reference,
                        restrict_function, restrict_samples,
                        restriction_l1_error)
from cpa.partition import Box, RectilinearPartition, UniformPartition
from cpa.translator import SampleBank, estimate_local_function
from cpa.windows import Interval, codec

UNIT4 = UniformPartition(Box((0.0,), (1.0,)), (4,))
UNIT5 = UniformPartition(Box((0.0,), (1.0,)), (5,))


def test_identity_flow_gives_identity_matrix():
    p = build_global_transition(IdentityFlow(), UNIT4, m=3, samples_per_site=3,
                                seed=1)
    for code, row in p.rows.items():
        assert row.weights == {code: 1.0}


def test_rows_are_stochastic():
    p = build_global_transition(AveragingFlow(), UNIT4, m=3, samples_per_site=4,
                                seed=2)
    for row in p.rows.values():
        assert abs(row.total() - 1.0) < 1e-12


def test_apply_global_transition(rng):
    p = build_global_transition(AveragingFlow(), UNIT4, m=3, samples_per_site=4,
                                seed=3)
    full = Interval(1, 3)
    point = SparseDensity(full, 4, {9: 1.0})
    assert l1_distance(apply_global_transition(p, point), p.rows[9]) < 1e-12

    a = SparseDensity(full, 4, {9: 1.0})
    b = SparseDensity(full, 4, {17: 1.0})
    mix = mixture([(0.25, a), (0.75, b)])
    expected = mixture([(0.25, p.rows[9]), (0.75, p.rows[17])])
    assert l1_distance(apply_global_transition(p, mix), expected) < 1e-12

    ident = build_global_transition(IdentityFlow(), UNIT4, m=3,
                                    samples_per_site=2, seed=1)
    g = SparseDensity(full, 4, {0: 0.5, 63: 0.5})
    assert l1_distance(apply_global_transition(ident, g), g) < 1e-12


def test_state_space_guard():
    with pytest.raises(StateSpaceError):
        build_global_transition(IdentityFlow(), UNIT5, m=10, samples_per_site=1)


def test_partial_rows_raise_on_unseen_mass():
    p = build_global_transition(AveragingFlow(), UNIT4, m=3, samples_per_site=3,
                                seed=4, states=[0, 1, 2])
    g = SparseDensity(Interval(1, 3), 4, {5: 1.0})
    with pytest.raises(UnexploredPreimageError):
        apply_global_transition(p, g)


def test_shared_samples_reproduce_local_rule_exactly():
    """Maximal pattern window: the global rows restrict to the local table,
    probability by probability, when both draw from one sample bank."""
    part = UNIT4
    flow = AveragingFlow()
    m, counts, seed = 3, 5, 77
    bank = SampleBank(part, seed)
    u, v = Interval(0, 1), Interval(0, 1)
    lf = estimate_local_function(flow, part, u, v, counts, seed=seed, bank=bank)
    p = build_global_transition(flow, part, m, counts, seed=seed, bank=bank)

    state_codec = codec(Interval(1, m), part.size)
    v_len = len(v)
    for code, row in p.rows.items():
        syms = state_codec.decode(code)
        local = lf.image(code)  # the state code doubles as the window code
        rebuilt: dict[int, float] = {}
        for icode, w in row.weights.items():
            isyms = state_codec.decode(icode)
            assert isyms[-1] == syms[-1]  # boundary site is fixed
            key = codec(v, part.size).encode(isyms[:v_len])
            rebuilt[key] = rebuilt.get(key, 0.0) + w
        assert set(rebuilt) == set(local.weights)
        for key, w in rebuilt.items():
            assert w == local.weights[key]  # bit-identical sharing


def test_restrict_piecewise_constant_is_exact_and_idempotent():
    part = UNIT4
    masses = {0: 0.1, 1: 0.4, 2: 0.25, 3: 0.25}

    def pc_density(points):
        syms = part.encode_many(points)
        return np.array([masses[int(s)] / 0.25 for s in syms])

    r1 = restrict_function(pc_density, part, grid_per_axis=6)
    for code, w in r1.weights.items():
        assert w == pytest.approx(masses[code], abs=1e-12)

    def r1_density(points):
        syms = part.encode_many(points)
        return np.array([r1.weights[int(s)] / 0.25 for s in syms])

    r2 = restrict_function(r1_density, part, grid_per_axis=6)
    assert l1_distance(r1, r2) < 1e-12


def test_restrict_uniform_density():
    part = RectilinearPartition([[0.0, 0.183, 0.31, 0.4, 0.7, 1.0]])
    uniform = restrict_function(lambda pts: np.ones(len(pts)), part)
    widths = np.diff([0.0, 0.183, 0.31, 0.4, 0.7, 1.0])
    for code, w in uniform.weights.items():
        assert w == pytest.approx(widths[code], abs=1e-12)


def gaussian_1d(mean=0.45, sigma=0.12):
    z = sigma * math.sqrt(2 * math.pi)

    def fn(points):
        x = points[:, 0]
        return np.exp(-0.5 * ((x - mean) / sigma) ** 2) / z

    return fn


def test_restrict_gaussian_against_fine_quadrature():
    part = UNIT5
    fn = gaussian_1d()
    r = restrict_function(fn, part, grid_per_axis=64)
    # high-resolution reference quadrature per cell
    for code in range(part.size):
        cell = part.cell_bounds(code)
        xs = np.linspace(cell.lower[0], cell.upper[0], 10**6, endpoint=False)
        xs = xs + (cell.upper[0] - cell.lower[0]) / (2 * 10**6)
        mass = float(np.mean(fn(xs[:, None]))) * cell.volume
        assert abs(r.weights[code] - mass) < 1e-3


def test_restrict_samples_histogram(rng):
    pts = rng.uniform(0.0, 1.0, size=(4000, 1))
    d = restrict_samples(pts, UNIT4)
    for w in d.weights.values():
        assert abs(w - 0.25) < 0.05


def test_restriction_error_shrinks_with_resolution():
    fn = gaussian_1d()
    errs = [restriction_l1_error(fn, UniformPartition(Box((0.0,), (1.0,)), (c,)),
                                 grid_per_axis=64)
            for c in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_mc_reference_identity_point_mass():
    sim = CoarseSimulator(IdentityFlow(n=1), m=3)
    init = np.full((50, 3, 1), 0.55)
    ref = mc_reference(sim, init, None, n_steps=2, n_runs=50,
                       report_steps=[0, 2], partition=UNIT4, seed=9)
    for step in (0, 2):
        for site in (1, 2, 3):
            assert ref.marginals[step][site].weights == {2: 1.0}


def test_mc_reference_reproducible_under_seed():
    part = UNIT4
    sim = CoarseSimulator(AveragingFlow(), m=3)
    edge = SparseDensity(Interval(3, 3), part.size, {1: 0.5, 3: 0.5})
    sampler = density_boundary_sampler(edge, part)

    def initial(rng, n_runs):
        return rng.uniform(0.0, 1.0, size=(n_runs, 3, 1))

    a = mc_reference(sim, initial, sampler, n_steps=3, n_runs=200,
                     report_steps=[3], partition=part, seed=4)
    b = mc_reference(sim, initial, sampler, n_steps=3, n_runs=200,
                     report_steps=[3], partition=part, seed=4)
    for site in (1, 2, 3):
        assert a.marginals[3][site].weights == b.marginals[3][site].weights


def test_density_boundary_sampler_draws_from_cells(rng):
    part = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, 5))
    edge = SparseDensity(Interval(1, 1), part.size,
                         {part.flat_index((2, 0)): 0.5,
                          part.flat_index((4, 0)): 0.5})
    sampler = density_boundary_sampler(edge, part)
    vals = sampler(rng, 400, 2)
    assert vals.shape == (400, 2, 1, 2)
    syms = part.encode_many(vals.reshape(-1, 2))
    seen = set(int(s) for s in syms)
    assert seen == {part.flat_index((2, 0)), part.flat_index((4, 0))}
    frac = np.mean(syms == part.flat_index((2, 0)))
    assert abs(frac - 0.5) < 0.06
