"""Command-line front end: build tables, run the automaton, run oracles, compare.

Exit codes: 0 success, 2 configuration/consistency error, 3 numeric failure
(zero mass, unexplored preimage, instability), 4 I/O or file-format error.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .automaton import Automaton, Deterministic, WhiteNoise
from .config import RunConfig, load_config
from .densities import (SparseDensity, marginal, prune, read_marginals_csv,
                        write_marginals_csv)
from .errors import (ConfigError, CpaError, DomainError, FormatError,
                     ModelInstabilityError, NonExtendableError,
                     StabilityError, StateSpaceError, TableMismatchError,
                     UnexploredPreimageError, WindowMismatchError,
                     ZeroMassError)
from .models import ArsenateFlow, CoarseSimulator
from .oracle import (apply_global_transition, build_global_transition,
                     density_boundary_sampler, mc_reference)
from .translator import (compose_local_function, estimate_local_function,
                         load_local_function, save_local_function)
from .windows import Interval, codec

EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_IO = 4


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _initial_symbols(config: RunConfig) -> dict[int, int]:
    """Per-grid-site symbol map of a point initial condition."""
    entries = config.initial_symbols
    flats = [config.partition.flat_index(multi) for multi in entries]
    if len(flats) == 1:
        flats = flats * config.m
    return {site: flats[site - 1] for site in range(1, config.m + 1)}


def _initial_state(config: RunConfig, automaton: Automaton):
    if config.initial_kind == "uniform":
        return automaton.uniform_state()
    return automaton.point_state(_initial_symbols(config))


def cmd_build(args) -> int:
    config = load_config(args.config)
    seed = config.seed("build")
    t0 = time.perf_counter()
    table = estimate_local_function(
        config.flow, config.partition, config.neighborhood,
        config.pattern_window, config.points_per_site, seed=seed,
        workers=args.workers,
    )
    if config.composition_window is not None:
        table = compose_local_function(table, config.composition_window)
    elapsed = time.perf_counter() - t0
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_local_function(table, out)
    report = {
        "config": str(config.path),
        "seed": seed,
        "generated_seeds": config.generated_seeds,
        "points_per_site": list(config.points_per_site),
        "explored": table.explored(),
        "unexplored": table.unexplored(),
        "clamp_escapes": table.meta.clamp_escapes,
        "total_points": table.meta.total_points,
        "clamp_rate": (table.meta.clamp_escapes / table.meta.total_points
                       if table.meta.total_points else 0.0),
        "wall_time_s": elapsed,
        "table": str(out),
    }
    _write_json(out.with_suffix(out.suffix + ".report.json"), report)
    print(f"wrote {out} ({table.explored()} rows, {table.unexplored()} unexplored, "
          f"clamp rate {report['clamp_rate']:.2%}, {elapsed:.1f}s)")
    return 0


def cmd_run(args) -> int:
    config = load_config(args.config)
    table = load_local_function(args.table, partition=config.partition)
    full_v = (config.pattern_window + config.composition_window
              if config.composition_window is not None else config.pattern_window)
    if table.pattern_window != full_v or table.neighborhood != config.neighborhood:
        raise TableMismatchError(
            f"table windows {table.neighborhood}/{table.pattern_window} do not "
            f"match the configured {config.neighborhood}/{full_v}"
        )
    automaton = Automaton(config.m, table, config.boundary)
    state = _initial_state(config, automaton)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)

    def dump(step, deb):
        with open(outdir / f"marginals_step_{step:04d}.csv", "w", newline="") as fh:
            write_marginals_csv(fh, deb.site_marginals(),
                                config.partition.cells_per_dim)

    summary = []
    dump(0, state)
    for step in range(1, config.steps + 1):
        try:
            state = automaton.step(state)
        except UnexploredPreimageError as err:
            err.step = step
            raise
        retained = {}
        if config.threshold > 0.0:
            pruned = {}
            for site in state.sites:
                dens = state.at(site)
                kept = sum(w for w in dens.weights.values()
                           if w >= config.threshold)
                retained[site] = kept / dens.total()
                pruned[site] = prune(dens, config.threshold)
            state = type(state)(state.sites, state.pattern_window, pruned)
        else:
            retained = {site: 1.0 for site in state.sites}
        dump(step, state)
        summary.append({
            "step": step,
            "retained_mass": {str(s): retained[s] for s in state.sites},
            "support_size": {str(s): len(state.at(s)) for s in state.sites},
        })
    _write_json(outdir / "summary.json", {
        "config": str(config.path),
        "table": str(args.table),
        "steps": config.steps,
        "threshold": config.threshold,
        "per_step": summary,
    })
    print(f"wrote {config.steps + 1} marginal files to {outdir}")
    return 0


def _mc_oracle(config: RunConfig, outdir: Path) -> None:
    seed = config.seed("oracle")
    if config.initial_kind != "point":
        raise ConfigError("the reference solver needs a point initial condition",
                          section="initial", key="kind")
    symbols = _initial_symbols(config)
    if config.initial_value is not None:
        values = {site: np.asarray(config.initial_value) for site in symbols}
    else:
        values = {site: config.partition.cell_bounds(sym).midpoint
                  for site, sym in symbols.items()}

    boundary = config.boundary
    samplers = []
    if isinstance(boundary, (Deterministic, WhiteNoise)):
        r, s = -config.neighborhood.lo, config.neighborhood.hi
        if isinstance(boundary, Deterministic):
            left = (SparseDensity.point(Interval(1, r), config.partition.size,
                                        boundary.left) if r else None)
            right = (SparseDensity.point(Interval(config.m - s + 1, config.m),
                                         config.partition.size, boundary.right)
                     if s else None)
        else:
            left, right = boundary.left, boundary.right
        for edge in (left, right):
            if edge is not None:
                samplers.append(density_boundary_sampler(edge, config.partition))

    def boundary_sampler(rng, n_runs, n_steps):
        draws = [s(rng, n_runs, n_steps) for s in samplers]
        return np.concatenate(draws, axis=2) if draws else None

    if config.oracle_simulator == "pipe":
        assert isinstance(config.flow, ArsenateFlow)
        sim = config.flow.make_pipe_simulator(config.m)
        n_seg = config.flow.params.n_segments
        profile = np.empty((sim.n_nodes, 2))
        for site in range(1, config.m + 1):
            lo = (site - 1) * n_seg
            hi = sim.n_nodes if site == config.m else site * n_seg
            profile[lo:hi] = values[site]
        initial = profile
    else:
        sim = CoarseSimulator(config.flow, config.m)

        def initial(rng, n_runs):
            state = np.empty((n_runs, config.m, config.flow.n))
            for site in range(1, config.m + 1):
                state[:, site - 1] = values[site]
            return state

    ref = mc_reference(
        sim, initial, boundary_sampler if samplers else None,
        n_steps=config.steps, n_runs=config.oracle_runs,
        report_steps=config.report_steps, partition=config.partition, seed=seed,
    )
    for step in config.report_steps:
        with open(outdir / f"mc_step_{step:04d}.csv", "w", newline="") as fh:
            write_marginals_csv(fh, ref.marginals[step],
                                config.partition.cells_per_dim)
    _write_json(outdir / "oracle.json", {
        "kind": "mc", "simulator": config.oracle_simulator,
        "n_runs": config.oracle_runs, "seed": seed,
        "generated_seeds": config.generated_seeds,
        "report_steps": config.report_steps,
    })


def _transition_oracle(config: RunConfig, outdir: Path) -> None:
    seed = config.seed("oracle")
    if config.initial_kind != "point":
        raise ConfigError("the transition oracle needs a point initial condition",
                          section="initial", key="kind")
    if isinstance(config.boundary, WhiteNoise):
        raise ConfigError("the transition oracle supports deterministic "
                          "boundaries only", section="boundary", key="kind")
    p = build_global_transition(config.flow, config.partition, config.m,
                                config.oracle_samples_per_site, seed=seed)
    symbols = _initial_symbols(config)
    window = Interval(1, config.m)
    cdc = codec(window, config.partition.size)
    g = SparseDensity(window, config.partition.size,
                      {cdc.encode(tuple(symbols[i] for i in window)): 1.0})
    states = {0: g}
    for step in range(1, config.steps + 1):
        g = apply_global_transition(p, g)
        states[step] = g
    for step in config.report_steps:
        # single-site marginals, re-anchored to offset zero
        marg = {}
        for site in window:
            m_site = marginal(states[step], Interval(site, site))
            marg[site] = SparseDensity(Interval(0, 0), config.partition.size,
                                       dict(m_site.weights))
        with open(outdir / f"transition_step_{step:04d}.csv", "w", newline="") as fh:
            write_marginals_csv(fh, marg, config.partition.cells_per_dim)
    _write_json(outdir / "oracle.json", {
        "kind": "transition", "samples_per_site": config.oracle_samples_per_site,
        "seed": seed, "generated_seeds": config.generated_seeds,
        "report_steps": config.report_steps,
    })


def cmd_oracle(args) -> int:
    config = load_config(args.config)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    if config.oracle_kind == "mc":
        _mc_oracle(config, outdir)
    else:
        _transition_oracle(config, outdir)
    print(f"wrote oracle marginals to {outdir}")
    return 0


def compare_marginals(a: dict, b: dict) -> dict:
    """Per-site L1 distances between two {site: {multi: prob}} mappings."""
    common = sorted(set(a) & set(b))
    if not common:
        raise ConfigError("the marginal files share no sites")
    per_site = {}
    for site in common:
        keys = set(a[site]) | set(b[site])
        dims = {len(k) for k in keys}
        if len(dims) != 1:
            raise ConfigError(f"site {site}: symbol multi-index dimensions differ")
        per_site[site] = sum(abs(a[site].get(k, 0.0) - b[site].get(k, 0.0))
                             for k in keys)
    values = list(per_site.values())
    return {
        "sites": common,
        "dropped_sites": sorted((set(a) | set(b)) - set(common)),
        "per_site": per_site,
        "max": max(values),
        "mean": sum(values) / len(values),
    }


def cmd_compare(args) -> int:
    with open(args.a) as fh:
        a = read_marginals_csv(fh)
    with open(args.b) as fh:
        b = read_marginals_csv(fh)
    report = compare_marginals(a, b)
    for site in report["sites"]:
        print(f"site {site}: L1 = {report['per_site'][site]:.6f}")
    if report["dropped_sites"]:
        print(f"(sites only in one file, ignored: {report['dropped_sites']})")
    print(f"max {report['max']:.6f}  mean {report['mean']:.6f}")
    if args.json:
        _write_json(args.json, {
            "a": str(args.a), "b": str(args.b),
            "per_site": {str(k): v for k, v in report["per_site"].items()},
            "max": report["max"], "mean": report["mean"],
            "dropped_sites": report["dropped_sites"],
        })
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpa",
        description="translate locally-coupled dynamics into a probabilistic "
                    "automaton and propagate uncertainty",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="estimate a local transition table")
    b.add_argument("-c", "--config", required=True)
    b.add_argument("-o", "--output", required=True,
                   help="table file (.json for text, anything else binary)")
    b.add_argument("--workers", type=int, default=1)
    b.set_defaults(func=cmd_build)

    r = sub.add_parser("run", help="evolve the automaton")
    r.add_argument("-c", "--config", required=True)
    r.add_argument("-t", "--table", required=True)
    r.add_argument("-o", "--output", required=True, help="output directory")
    r.set_defaults(func=cmd_run)

    o = sub.add_parser("oracle", help="run a reference computation")
    o.add_argument("-c", "--config", required=True)
    o.add_argument("-o", "--output", required=True, help="output directory")
    o.set_defaults(func=cmd_oracle)

    c = sub.add_parser("compare", help="per-site L1 report between marginal CSVs")
    c.add_argument("a")
    c.add_argument("b")
    c.add_argument("--json", help="also write the report as JSON")
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TableMismatchError, WindowMismatchError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (ZeroMassError, UnexploredPreimageError, NonExtendableError,
            ModelInstabilityError, StateSpaceError, StabilityError,
            DomainError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_IO
    except CpaError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
