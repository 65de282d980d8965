"""Concrete flow maps with the locality property.

Every flow map is deterministic and shift-invariant: one coarse time step
of a site is a fixed function of the site values in its neighborhood
window, identical at every interior site.  Flows operate on raw window
values; encoding and domain clamping are handled by their callers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _pipe_kernels as kernels
from .errors import ModelInstabilityError, StabilityError
from .partition import Box, clamp_points
from .windows import Interval

__all__ = [
    "FlowMap",
    "IdentityFlow",
    "AveragingFlow",
    "LinearAdvectionFlow",
    "ArsenateParams",
    "ArsenateFlow",
    "ArsenatePipeSimulator",
    "CoarseSimulator",
]

AVERAGING_DIVISOR = 3.75


class FlowMap:
    """Shared behavior: one coarse step of a neighborhood window.

    Subclasses set ``n`` (per-site state dimension), ``neighborhood`` (the
    window of sites a site update reads) and ``tau`` (the fixed coarse time
    step), and implement ``step_batch`` over an array of windows of shape
    (batch, |neighborhood|, n).
    """

    n: int
    neighborhood: Interval
    tau: float

    def step_batch(self, windows: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def step(self, window) -> np.ndarray:
        """Map one window (|neighborhood|, n) to one site value (n,)."""
        win = np.asarray(window, dtype=float).reshape(1, len(self.neighborhood), self.n)
        return self.step_batch(win)[0]


class IdentityFlow(FlowMap):
    """Every site keeps its value; neighborhood {0}."""

    def __init__(self, n: int = 1, tau: float = 1.0):
        self.n = n
        self.neighborhood = Interval(0, 0)
        self.tau = tau

    def step_batch(self, windows):
        return np.array(windows[:, 0, :], dtype=float)


class AveragingFlow(FlowMap):
    """Scalar map (v_i + v_{i+1}) / 3.75 on [0, 1]; neighborhood {0, 1}.

    Images stay within [0, 2/3.75], so the top of the unit interval is
    never reached.
    """

    def __init__(self, tau: float = 1.0):
        self.n = 1
        self.neighborhood = Interval(0, 1)
        self.tau = tau

    def step_batch(self, windows):
        return (windows[:, 0, :] + windows[:, 1, :]) / AVERAGING_DIVISOR


class LinearAdvectionFlow(FlowMap):
    """First-order upwind transport at constant speed.

    The neighborhood is {-1, 0} for rightward transport and {0, 1} for
    leftward; the Courant number |speed| * tau / dx must not exceed one.
    """

    def __init__(self, speed: float, dx: float, tau: float):
        self.n = 1
        self.tau = tau
        self.courant = speed * tau / dx
        if abs(self.courant) > 1.0 + 1e-12:
            raise StabilityError(
                f"|speed| * tau / dx = {abs(self.courant):.4g} exceeds 1"
            )
        self.neighborhood = Interval(-1, 0) if speed >= 0 else Interval(0, 1)

    def step_batch(self, windows):
        nu = abs(self.courant)
        if self.neighborhood == Interval(-1, 0):
            upstream, local = windows[:, 0, :], windows[:, 1, :]
        else:
            local, upstream = windows[:, 0, :], windows[:, 1, :]
        return (1.0 - nu) * local + nu * upstream


@dataclass(frozen=True)
class ArsenateParams:
    """Pipe sorption-transport parameters (defaults are the drinking-water case).

    velocity [m/min], hydraulic_ratio [l/m^2], rate_constant [l/(mg min)],
    capacity [mg/m^2], equilibrium_constant [mg/l], film_rate [l/(m^2 min)],
    dx [m] report-location spacing, tau [min] coarse step, dx_fine/dt_fine
    the fine characteristics grid, d_max [mg/l] the dissolved-range top.
    """

    velocity: float = 10.0
    hydraulic_ratio: float = 50.0
    rate_constant: float = 0.2
    capacity: float = 100.0
    equilibrium_constant: float = 0.0537
    film_rate: float = 2.4
    dx: float = 100.0
    tau: float = 10.0
    dx_fine: float = 1.0
    dt_fine: float = 0.1
    reaction_order: int = 4
    d_max: float = 1.0

    def __post_init__(self):
        if abs(self.tau - self.dx / self.velocity) > 1e-9 * self.tau:
            raise ValueError("tau must equal dx / velocity (transport-exact step)")
        if abs(self.dx_fine - self.velocity * self.dt_fine) > 1e-9 * self.dx_fine:
            raise ValueError("dx_fine must equal velocity * dt_fine")
        for name, whole, part in (("dt_fine", self.tau, self.dt_fine),
                                  ("dx_fine", self.dx, self.dx_fine)):
            ratio = whole / part
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError(f"{name} must divide its coarse counterpart")
        if self.reaction_order not in (1, 4):
            raise ValueError("reaction_order must be 1 or 4")

    @property
    def n_segments(self) -> int:
        return int(round(self.dx / self.dx_fine))

    @property
    def n_substeps(self) -> int:
        return int(round(self.tau / self.dt_fine))

    @property
    def domain(self) -> Box:
        return Box((0.0, 0.0), (self.d_max, self.capacity))

    def kernel_constants(self) -> tuple:
        return (
            self.dt_fine,
            self.reaction_order,
            1.0 / self.hydraulic_ratio,
            1.0 / self.rate_constant,
            self.capacity,
            self.equilibrium_constant,
            1.0 / self.film_rate,
        )


class ArsenateFlow(FlowMap):
    """One coarse step of dissolved/adsorbed arsenate at a report location.

    The window holds the (dissolved, adsorbed) state at the upstream and
    local report locations.  A fine characteristics grid spans the segment
    between them; its interior carries the upstream window value, which is
    held constant and re-injected at the leftmost fine node every fine
    step, while the wall state evolves everywhere.  The coarse image is the
    downstream node after tau.  Outputs are clamped into the state domain
    (the domain is only approximately invariant); ``clamp_escapes`` counts
    how many raw outputs needed clamping.
    """

    def __init__(self, params: ArsenateParams | None = None):
        self.params = params or ArsenateParams()
        self.n = 2
        self.neighborhood = Interval(-1, 0)
        self.tau = self.params.tau
        self.domain = self.params.domain
        self.clamp_escapes = 0
        self.samples_seen = 0

    def _raise_if_bad(self, err: np.ndarray):
        bad = np.flatnonzero(err >= 0)
        if bad.size:
            raise ModelInstabilityError(
                f"non-finite state at fine substep {int(err[bad[0]])} "
                f"for window {int(bad[0])} of the batch"
            )

    def step_batch(self, windows):
        wins = np.ascontiguousarray(np.asarray(windows, dtype=float))
        p = self.params
        out_d, out_a, err = kernels.window_images(
            wins[:, 0, 0].copy(), wins[:, 0, 1].copy(),
            wins[:, 1, 0].copy(), wins[:, 1, 1].copy(),
            p.n_segments, p.n_substeps, *p.kernel_constants(),
        )
        self._raise_if_bad(err)
        raw = np.stack([out_d, out_a], axis=1)
        clamped, n_escaped = clamp_points(raw, self.domain)
        self.clamp_escapes += n_escaped
        self.samples_seen += len(raw)
        return clamped

    def image_points_product(self, site_points):
        """Raw coarse images for the full product of per-site test points.

        site_points is the pair (upstream (c0, 2), local (c1, 2)); the
        result has C-order product shape (c0 * c1, 2) and is *not*
        clamped (translator-side clamping keeps the escape accounting in
        one place).
        """
        if len(site_points) != 2:
            return None
        up, loc = (np.ascontiguousarray(np.asarray(x, dtype=float)) for x in site_points)
        p = self.params
        out_d, out_a, err = kernels.window_images_product(
            up[:, 0].copy(), up[:, 1].copy(), loc[:, 0].copy(), loc[:, 1].copy(),
            p.n_segments, p.n_substeps, *p.kernel_constants(),
        )
        self._raise_if_bad(err)
        return np.stack([out_d, out_a], axis=1)

    def make_pipe_simulator(self, m: int) -> "ArsenatePipeSimulator":
        return ArsenatePipeSimulator(self.params, m)


class ArsenatePipeSimulator:
    """Reference fine-grid simulation of a whole pipe with m report locations.

    The tank (leftmost report location) is pinned to per-coarse-step
    boundary draws, held constant across the fine substeps of each step.
    No state is ever re-initialized between coarse steps, so this is the
    ground truth that window-local coarse stepping approximates.
    """

    def __init__(self, params: ArsenateParams, m: int):
        if m < 2:
            raise ValueError("a pipe needs at least two report locations")
        self.params = params
        self.m = m
        self.n_nodes = (m - 1) * params.n_segments + 1
        self.report_nodes = np.arange(m, dtype=np.int64) * params.n_segments

    def constant_profile(self, value=(0.0, 0.0)) -> np.ndarray:
        prof = np.empty((self.n_nodes, 2))
        prof[:, 0], prof[:, 1] = value
        return prof

    def run(self, initial_profile: np.ndarray, boundary_values: np.ndarray,
            report_steps) -> np.ndarray:
        """Simulate a batch of runs; returns (runs, len(report_steps), m, 2).

        boundary_values has shape (runs, steps, 1, 2) - one drawn
        (dissolved, adsorbed) tank value per coarse step per run.
        """
        prof = np.asarray(initial_profile, dtype=float)
        if prof.shape != (self.n_nodes, 2):
            raise ValueError(f"initial profile must have shape {(self.n_nodes, 2)}")
        bv = np.asarray(boundary_values, dtype=float)
        n_steps = bv.shape[1]
        report_steps = sorted(set(int(s) for s in report_steps))
        if report_steps and not 0 <= report_steps[0] <= report_steps[-1] <= n_steps:
            raise ValueError("report steps outside the simulated range")
        mask = np.zeros(n_steps + 1, dtype=np.bool_)
        mask[report_steps] = True
        p = self.params
        out_d, out_a = kernels.pipe_simulate(
            prof[:, 0].copy(), prof[:, 1].copy(),
            np.ascontiguousarray(bv[:, :, 0, 0]), np.ascontiguousarray(bv[:, :, 0, 1]),
            p.n_substeps, self.report_nodes, mask, *p.kernel_constants(),
        )
        out = np.stack([out_d, out_a], axis=-1)
        if not np.isfinite(out).all():
            raise ModelInstabilityError("non-finite state in reference trajectories")
        return out


class CoarseSimulator:
    """Reference simulation of the coarse site map itself (any flow).

    Interior sites apply the flow window map simultaneously; the boundary
    sites of the neighborhood stencil are pinned to per-step drawn values.
    For flows without fine substructure this *is* the exact dynamics.
    """

    def __init__(self, flow: FlowMap, m: int):
        self.flow = flow
        self.m = m
        u = flow.neighborhood
        self.r, self.s = -u.lo, u.hi
        if m < 1 + self.r + self.s:
            raise ValueError("grid too small for the neighborhood stencil")
        # zero-based index ranges of the pinned boundary sites
        self.left = list(range(self.r))
        self.right = list(range(m - self.s, m))

    def run(self, initial_states: np.ndarray, boundary_values: np.ndarray,
            report_steps) -> np.ndarray:
        state = np.array(initial_states, dtype=float)  # (runs, m, n)
        runs = state.shape[0]
        n_steps = boundary_values.shape[1] if boundary_values is not None else 0
        report_steps = sorted(set(int(s) for s in report_steps))
        out = np.empty((runs, len(report_steps), self.m, self.flow.n))
        t = 0
        if report_steps and report_steps[0] == 0:
            out[:, 0] = state
            t = 1
        u = self.flow.neighborhood
        width = len(u)
        interior = range(self.r, self.m - self.s)
        for step in range(1, (report_steps[-1] if report_steps else 0) + 1):
            if boundary_values is not None and (self.left or self.right):
                drawn = boundary_values[:, step - 1]
                for q, i in enumerate(self.left + self.right):
                    state[:, i] = drawn[:, q]
            windows = np.stack(
                [state[:, i + u.lo: i + u.lo + width] for i in interior], axis=1
            )  # (runs, n_int, width, n)
            flat = windows.reshape(-1, width, self.flow.n)
            images = self.flow.step_batch(flat).reshape(runs, len(list(interior)), self.flow.n)
            state[:, self.r: self.m - self.s] = images
            if t < len(report_steps) and report_steps[t] == step:
                out[:, t] = state
                t += 1
        return out
