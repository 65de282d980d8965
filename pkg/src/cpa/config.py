"""Run configuration: one INI-style file drives build, run, oracle, compare.

Sections: [model], [partition], [automaton], [boundary], [initial], [run],
[translator], [oracle], [seeds], [output].  Every validation failure raises
ConfigError carrying the offending section and key.
"""
from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .automaton import Deterministic, WhiteNoise
from .densities import SparseDensity
from .errors import ConfigError
from .models import (ArsenateFlow, ArsenateParams, AveragingFlow, FlowMap,
                     IdentityFlow, LinearAdvectionFlow)
from .partition import Box, RectilinearPartition, UniformPartition
from .windows import Interval

MODEL_KINDS = ("identity", "averaging", "advection", "arsenate")

ARSENATE_FIELDS = (
    "velocity", "hydraulic_ratio", "rate_constant", "capacity",
    "equilibrium_constant", "film_rate", "dx", "tau", "dx_fine", "dt_fine",
)


@dataclass
class RunConfig:
    model_kind: str
    flow: FlowMap
    partition: RectilinearPartition
    m: int
    neighborhood: Interval
    pattern_window: Interval
    composition_window: Interval | None
    boundary: Deterministic | WhiteNoise | None
    initial_kind: str
    initial_symbols: list[tuple[int, ...]] | None
    initial_value: tuple[float, ...] | None
    steps: int
    threshold: float
    points_per_site: tuple[int, ...]
    oracle_kind: str
    oracle_simulator: str
    oracle_runs: int
    oracle_samples_per_site: int
    report_steps: list[int]
    seeds: dict[str, int | None]
    output_dir: str
    path: str = ""
    generated_seeds: dict[str, int] = field(default_factory=dict)

    def seed(self, name: str) -> int:
        """Configured seed, or a generated one (echoed into reports)."""
        value = self.seeds.get(name)
        if value is None:
            value = self.generated_seeds.get(name)
        if value is None:
            value = int(np.random.SeedSequence().entropy % (2**63))
            self.generated_seeds[name] = value
        return value


def _get(cp, section, key, default=None, required=False):
    if not cp.has_section(section):
        if required:
            raise ConfigError(f"missing section", section=section)
        return default
    raw = cp.get(section, key, fallback=None)
    if raw is None or raw.strip() == "":
        if required:
            raise ConfigError("missing required key", section=section, key=key)
        return default
    return raw.strip()


def _floats(raw, section, key):
    try:
        return tuple(float(tok) for tok in raw.split())
    except ValueError as err:
        raise ConfigError(f"expected numbers: {err}", section=section, key=key)


def _ints(raw, section, key):
    try:
        return tuple(int(tok) for tok in raw.split())
    except ValueError as err:
        raise ConfigError(f"expected integers: {err}", section=section, key=key)


def _interval(raw, section, key) -> Interval:
    toks = _ints(raw, section, key)
    if len(toks) != 2 or toks[0] > toks[1]:
        raise ConfigError("expected 'lo hi' with lo <= hi", section=section, key=key)
    return Interval(toks[0], toks[1])


def _multi_index(token, partition, section, key) -> int:
    parts = token.split(",")
    if len(parts) != partition.ndim:
        raise ConfigError(
            f"multi-index {token!r} needs {partition.ndim} entries",
            section=section, key=key,
        )
    try:
        multi = tuple(int(x) for x in parts)
        return partition.flat_index(multi)
    except (ValueError, IndexError) as err:
        raise ConfigError(f"bad multi-index {token!r}: {err}", section=section, key=key)


def _parse_model(cp) -> tuple[str, FlowMap]:
    kind = _get(cp, "model", "kind", required=True)
    if kind not in MODEL_KINDS:
        raise ConfigError(f"unknown model kind {kind!r}, expected one of "
                          f"{MODEL_KINDS}", section="model", key="kind")
    try:
        if kind == "identity":
            n = int(_get(cp, "model", "n", default="1"))
            tau = float(_get(cp, "model", "tau", default="1.0"))
            return kind, IdentityFlow(n=n, tau=tau)
        if kind == "averaging":
            tau = float(_get(cp, "model", "tau", default="1.0"))
            return kind, AveragingFlow(tau=tau)
        if kind == "advection":
            speed = float(_get(cp, "model", "speed", required=True))
            dx = float(_get(cp, "model", "dx", required=True))
            tau = float(_get(cp, "model", "tau", required=True))
            return kind, LinearAdvectionFlow(speed, dx=dx, tau=tau)
        overrides = {}
        for name in ARSENATE_FIELDS:
            raw = _get(cp, "model", name)
            if raw is not None:
                overrides[name] = float(raw)
        raw = _get(cp, "model", "reaction_order")
        if raw is not None:
            overrides["reaction_order"] = int(raw)
        return kind, ArsenateFlow(ArsenateParams(**overrides))
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err), section="model")


def _parse_partition(cp):
    kind = _get(cp, "partition", "kind", default="uniform")
    try:
        if kind == "uniform":
            lower = _floats(_get(cp, "partition", "lower", required=True),
                            "partition", "lower")
            upper = _floats(_get(cp, "partition", "upper", required=True),
                            "partition", "upper")
            cells = _ints(_get(cp, "partition", "cells", required=True),
                          "partition", "cells")
            return UniformPartition(Box(lower, upper), cells)
        if kind == "rectilinear":
            breaks = []
            dim = 1
            while True:
                raw = _get(cp, "partition", f"breaks_{dim}")
                if raw is None:
                    break
                breaks.append(_floats(raw, "partition", f"breaks_{dim}"))
                dim += 1
            if not breaks:
                raise ConfigError("need breaks_1, breaks_2, ...",
                                  section="partition", key="breaks_1")
            return RectilinearPartition(breaks)
    except ConfigError:
        raise
    except ValueError as err:
        raise ConfigError(str(err), section="partition")
    raise ConfigError(f"unknown partition kind {kind!r}",
                      section="partition", key="kind")


def _parse_edge_density(raw, window, partition, section, key):
    """'mi:weight mi:weight ...' tokens over a one-site edge window, or
    'mi;mi' pattern products for wider windows."""
    entries = {}
    for token in raw.split():
        if ":" in token:
            pat, w_raw = token.rsplit(":", 1)
            try:
                weight = float(w_raw)
            except ValueError:
                raise ConfigError(f"bad weight in {token!r}", section=section, key=key)
        else:
            pat, weight = token, 1.0
        symbols = tuple(_multi_index(t, partition, section, key)
                        for t in pat.split(";"))
        if len(symbols) != len(window):
            raise ConfigError(
                f"pattern {pat!r} needs {len(window)} site entries",
                section=section, key=key,
            )
        code = 0
        for s in symbols:
            code = code * partition.size + s
        entries[code] = entries.get(code, 0.0) + weight
    if not entries:
        raise ConfigError("empty density", section=section, key=key)
    total = sum(entries.values())
    return SparseDensity(window, partition.size,
                         {c: w / total for c, w in entries.items()})


def _parse_boundary(cp, partition, m, neighborhood):
    r, s = -neighborhood.lo, neighborhood.hi
    kind = _get(cp, "boundary", "kind", default="none")
    if kind == "none":
        if r or s:
            raise ConfigError(
                "this neighborhood has boundary sites; configure a boundary",
                section="boundary", key="kind",
            )
        return None
    left_raw = _get(cp, "boundary", "left")
    right_raw = _get(cp, "boundary", "right")
    if r and left_raw is None:
        raise ConfigError("left boundary required", section="boundary", key="left")
    if s and right_raw is None:
        raise ConfigError("right boundary required", section="boundary", key="right")
    if kind == "deterministic":
        left = tuple(_multi_index(t, partition, "boundary", "left")
                     for t in left_raw.split(";")) if r else ()
        right = tuple(_multi_index(t, partition, "boundary", "right")
                      for t in right_raw.split(";")) if s else ()
        if len(left) != r or len(right) != s:
            raise ConfigError(
                f"need {r} left and {s} right symbols", section="boundary",
            )
        return Deterministic(left=left, right=right)
    if kind == "white_noise":
        left = (_parse_edge_density(left_raw, Interval(1, r), partition,
                                    "boundary", "left") if r else None)
        right = (_parse_edge_density(right_raw, Interval(m - s + 1, m), partition,
                                     "boundary", "right") if s else None)
        return WhiteNoise(left=left, right=right)
    raise ConfigError(f"unknown boundary kind {kind!r}", section="boundary", key="kind")


def load_config(path) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")

    model_kind, flow = _parse_model(cp)
    partition = _parse_partition(cp)
    if partition.ndim != flow.n:
        raise ConfigError(
            f"partition dimension {partition.ndim} != model dimension {flow.n}",
            section="partition",
        )

    m = int(_get(cp, "automaton", "m", required=True))
    neighborhood_raw = _get(cp, "automaton", "neighborhood")
    neighborhood = (Interval(flow.neighborhood.lo, flow.neighborhood.hi)
                    if neighborhood_raw is None
                    else _interval(neighborhood_raw, "automaton", "neighborhood"))
    if neighborhood != flow.neighborhood:
        raise ConfigError(
            f"model stencil is {flow.neighborhood}, config says {neighborhood}",
            section="automaton", key="neighborhood",
        )
    pattern_window = _interval(
        _get(cp, "automaton", "pattern_window", default="0 0"),
        "automaton", "pattern_window")
    comp_raw = _get(cp, "automaton", "composition_window")
    composition_window = (_interval(comp_raw, "automaton", "composition_window")
                          if comp_raw is not None else None)

    full_v = (pattern_window + composition_window
              if composition_window is not None else pattern_window)
    r, s = -neighborhood.lo, neighborhood.hi
    p, q = -full_v.lo, full_v.hi
    if min(p, q) < 0:
        raise ConfigError("pattern window must contain 0",
                          section="automaton", key="pattern_window")
    if 1 + p + q + r + s > m:
        raise ConfigError(
            f"window sizes require 1 + p + q + r + s <= m; got p={p}, q={q}, "
            f"r={r}, s={s} and m={m}", section="automaton", key="m",
        )

    boundary = _parse_boundary(cp, partition, m, neighborhood)

    initial_kind = _get(cp, "initial", "kind", default="uniform")
    initial_symbols = None
    initial_value = None
    if initial_kind == "point":
        raw = _get(cp, "initial", "point", required=True)
        tokens = raw.split(";") if ";" in raw else [raw]
        initial_symbols = []
        for tok in tokens:
            multi = tuple(int(x) for x in tok.strip().split(","))
            initial_symbols.append(multi)
        if len(initial_symbols) not in (1, m):
            raise ConfigError(f"need 1 or {m} point entries",
                              section="initial", key="point")
        vraw = _get(cp, "initial", "value")
        if vraw is not None:
            initial_value = _floats(vraw, "initial", "value")
            if len(initial_value) != partition.ndim:
                raise ConfigError("value dimension mismatch",
                                  section="initial", key="value")
    elif initial_kind != "uniform":
        raise ConfigError(f"unknown initial kind {initial_kind!r}",
                          section="initial", key="kind")

    steps = int(_get(cp, "run", "steps", default="0"))
    threshold = float(_get(cp, "run", "threshold", default="0"))
    if not 0.0 <= threshold < 1.0:
        raise ConfigError("threshold must lie in [0, 1)", section="run",
                          key="threshold")

    pre_len = len(neighborhood + pattern_window)
    pps_raw = _get(cp, "translator", "points_per_site", default="16")
    pps = _ints(pps_raw, "translator", "points_per_site")
    if len(pps) == 1:
        pps = pps * pre_len
    if len(pps) != pre_len:
        raise ConfigError(
            f"need 1 or {pre_len} point counts (preimage window "
            f"{neighborhood + pattern_window})",
            section="translator", key="points_per_site",
        )

    oracle_kind = _get(cp, "oracle", "kind", default="mc")
    if oracle_kind not in ("mc", "transition"):
        raise ConfigError(f"unknown oracle kind {oracle_kind!r}",
                          section="oracle", key="kind")
    oracle_simulator = _get(cp, "oracle", "simulator", default="coarse")
    if oracle_simulator not in ("coarse", "pipe"):
        raise ConfigError(f"unknown simulator {oracle_simulator!r}",
                          section="oracle", key="simulator")
    if oracle_simulator == "pipe" and model_kind != "arsenate":
        raise ConfigError("the pipe simulator only exists for the arsenate model",
                          section="oracle", key="simulator")
    oracle_runs = int(_get(cp, "oracle", "n_runs", default="1000"))
    oracle_sps = int(_get(cp, "oracle", "samples_per_site", default="8"))
    report_raw = _get(cp, "oracle", "report_steps")
    report_steps = (sorted(set(_ints(report_raw, "oracle", "report_steps")))
                    if report_raw else [steps])
    if any(t < 0 or t > steps for t in report_steps):
        raise ConfigError("report steps must lie in [0, steps]",
                          section="oracle", key="report_steps")

    seeds = {}
    for name in ("build", "run", "oracle"):
        raw = _get(cp, "seeds", name)
        seeds[name] = int(raw) if raw is not None else None

    output_dir = _get(cp, "output", "dir", default="out")

    return RunConfig(
        model_kind=model_kind, flow=flow, partition=partition, m=m,
        neighborhood=neighborhood, pattern_window=pattern_window,
        composition_window=composition_window, boundary=boundary,
        initial_kind=initial_kind, initial_symbols=initial_symbols,
        initial_value=initial_value, steps=steps, threshold=threshold,
        points_per_site=pps, oracle_kind=oracle_kind,
        oracle_simulator=oracle_simulator, oracle_runs=oracle_runs,
        oracle_samples_per_site=oracle_sps, report_steps=report_steps,
        seeds=seeds, output_dir=output_dir, path=str(path),
    )
