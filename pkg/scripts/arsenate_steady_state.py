#!/usr/bin/env python3
"""End-to-end arsenate experiment: table build, automaton run, reference
ensemble, and a consumer-site comparison, all through the library API.

Writes marginal CSVs into --outdir and prints a per-site L1 table.  With
the default 2000 reference runs this takes a couple of minutes; use
--runs 20000 to reproduce the full-size comparison.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from cpa.automaton import Automaton, WhiteNoise
from cpa.densities import SparseDensity, l1_distance, write_marginals_csv
from cpa.models import ArsenateFlow, ArsenateParams, CoarseSimulator
from cpa.oracle import density_boundary_sampler, mc_reference
from cpa.partition import Box, UniformPartition
from cpa.translator import estimate_local_function, save_local_function
from cpa.windows import Interval

D_WEIGHTS = {2: 0.05, 3: 0.15, 4: 0.8}


def tank_density(partition, a_cells):
    weights = {}
    for d, w in D_WEIGHTS.items():
        for a in a_cells:
            weights[partition.flat_index((d, a))] = w / len(a_cells)
    return SparseDensity(Interval(1, 1), partition.size, weights)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--a-cells", type=int, default=5,
                    help="cells along the adsorbed axis (5 or 15)")
    ap.add_argument("--m", type=int, default=7, help="tank + report locations")
    ap.add_argument("--steps", type=int, default=144)
    ap.add_argument("--threshold", type=float, default=5e-5)
    ap.add_argument("--runs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=16)
    ap.add_argument("--outdir", default="out/arsenate_script")
    args = ap.parse_args()

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    partition = UniformPartition(Box((0.0, 0.0), (1.0, 100.0)), (5, args.a_cells))
    saturated = [a for a in range(args.a_cells)
                 if partition.breaks(1)[a] >= 80.0 - 1e-9]
    flow = ArsenateFlow(ArsenateParams())

    t0 = time.perf_counter()
    table = estimate_local_function(flow, partition, Interval(-1, 0),
                                    Interval(0, 0), (37, 75), seed=args.seed)
    save_local_function(table, outdir / "table.json")
    print(f"table: {table.explored()} rows in {time.perf_counter() - t0:.1f}s "
          f"(clamped {table.meta.clamp_escapes}/{table.meta.total_points})")

    tank = tank_density(partition, saturated)
    auto = Automaton(args.m, table, WhiteNoise(left=tank))
    empty = {i: partition.flat_index((0, 0)) for i in range(1, args.m + 1)}
    t0 = time.perf_counter()
    traj = auto.evolve(auto.point_state(empty), args.steps,
                       threshold=args.threshold)
    final = traj[-1]
    print(f"automaton: {args.steps} steps in {time.perf_counter() - t0:.1f}s")
    with open(outdir / "cpa_final.csv", "w", newline="") as fh:
        write_marginals_csv(fh, final.site_marginals(), partition.cells_per_dim)

    sim = CoarseSimulator(flow, args.m)
    sampler = density_boundary_sampler(tank, partition)
    t0 = time.perf_counter()
    ref = mc_reference(sim, np.zeros((args.runs, args.m, 2)), sampler,
                       n_steps=args.steps, n_runs=args.runs,
                       report_steps=[args.steps], partition=partition,
                       seed=9001)
    print(f"reference: {args.runs} runs in {time.perf_counter() - t0:.1f}s")
    mc_marg = ref.marginals[args.steps]
    with open(outdir / "mc_final.csv", "w", newline="") as fh:
        write_marginals_csv(fh, mc_marg, partition.cells_per_dim)

    print("site  L1(full)  L1(dissolved)  modal D cpa/mc")
    cpa_marg = final.site_marginals()
    n_d = partition.cells_per_dim[0]
    for site in sorted(cpa_marg):
        full = l1_distance(cpa_marg[site], mc_marg[site])
        cd = np.zeros(n_d)
        md = np.zeros(n_d)
        for code, w in cpa_marg[site].weights.items():
            cd[partition.multi_index(code)[0]] += w
        for code, w in mc_marg[site].weights.items():
            md[partition.multi_index(code)[0]] += w
        print(f"{site:4d}  {full:8.4f}  {np.abs(cd - md).sum():13.4f}"
              f"  {int(cd.argmax())}/{int(md.argmax())}")


if __name__ == "__main__":
    main()
