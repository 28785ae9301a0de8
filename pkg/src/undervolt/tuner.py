"""Per-layer voltage selection under a shared error budget, online error
tracking, and per-layer profile characterization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from undervolt.errmodel import DEFAULT_GRID, VoltageErrorProfile


@dataclass(frozen=True)
class TunerInput:
    p_total: float
    r_min: float
    profiles: tuple[VoltageErrorProfile, ...]
    r_grid: tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        grid = tuple(float(r) for r in self.r_grid)
        if not grid:
            raise ValueError("empty voltage grid")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ValueError("voltage grid must be sorted strictly descending")
        if self.p_total < 0:
            raise ValueError("error budget must be non-negative")
        if not any(math.isclose(r, self.r_min) for r in grid):
            raise ValueError(f"r_min={self.r_min} is not on the voltage grid")
        if not self.profiles:
            raise ValueError("at least one layer profile required")
        object.__setattr__(self, "r_grid", grid)
        object.__setattr__(self, "profiles", tuple(self.profiles))

    @property
    def L(self) -> int:
        return len(self.profiles)


@dataclass(frozen=True)
class TunerResult:
    r_star: tuple[float, ...]
    p_star: tuple[float, ...]
    order: tuple[int, ...]
    p_total: float
    r_min: float

    @property
    def p_used(self) -> float:
        return sum(self.p_star)


def tune_per_layer(inp: TunerInput) -> TunerResult:
    """Split ``p_total`` over layers, most error-tolerant rails first.

    Layers are visited in ascending order of their error rate at ``r_min``.
    Each gets an equal share of what remains and takes the lowest grid ratio
    whose error probability fits that share; the probability it actually
    uses is deducted from the remainder. A zero budget disables underscaling.
    """
    L = inp.L
    candidates = [r for r in inp.r_grid if r >= inp.r_min or math.isclose(r, inp.r_min)]
    order = sorted(range(L), key=lambda j: (inp.profiles[j](inp.r_min), j))
    r_star = [1.0] * L
    p_star = [0.0] * L
    p_remain = inp.p_total
    if inp.p_total == 0:
        return TunerResult(tuple(r_star), tuple(p_star), tuple(order), inp.p_total, inp.r_min)
    for pos, j in enumerate(order):
        p_target = p_remain / (L - pos)
        fits = [r for r in candidates if inp.profiles[j](r) <= p_target]
        if fits:
            r_star[j] = min(fits)
            p_star[j] = inp.profiles[j](r_star[j])
        p_remain -= p_star[j]
    return TunerResult(tuple(r_star), tuple(p_star), tuple(order), inp.p_total, inp.r_min)


def format_assignment(result: TunerResult) -> str:
    lines = [
        f"# p_total={result.p_total:.6g} r_min={result.r_min:.6g}",
        "layer_id,r_star,p_at_r_star",
    ]
    lines += [f"{j},{r:.6g},{p:.6g}" for j, (r, p) in enumerate(zip(result.r_star, result.p_star))]
    return "\n".join(lines) + "\n"


# --- online error tracking -------------------------------------------------


@dataclass
class ErrorCounters:
    columns: np.ndarray
    layer_total: int
    batch_totals: list = field(default_factory=list)

    def __post_init__(self):
        if int(self.columns.sum()) != self.layer_total:
            raise AssertionError("column counters do not sum to the layer total")


def track_errors(traces, n: int) -> ErrorCounters:
    """Column adders then the bottom-row reduction over a layer's chain traces.

    A chain's array column is its output row within the tile (``i mod n``);
    each column adder sums the single-bit error flags of its MACs.
    """
    columns = np.zeros(n, dtype=np.int64)
    for trace in traces:
        for ev in trace.events:
            if ev.errored:
                columns[ev.i % n] += 1
    total = 0
    for c in columns:
        total += int(c)
    return ErrorCounters(columns, total)


def counters_from_stats(stats) -> ErrorCounters:
    """Counters gathered by the fast kernel's per-column adders."""
    cols = np.asarray(stats.column_errors, dtype=np.int64)
    return ErrorCounters(cols, int(cols.sum()), list(stats.batch_errors))


# --- characterization ------------------------------------------------------


@dataclass(frozen=True)
class Measurement:
    r: float
    errors: tuple[int, ...]
    executed: tuple[int, ...]


def monotone_correct(rs_desc: Sequence[float], ps: Sequence[float]) -> list[float]:
    """Running maximum as r decreases, so the table is non-increasing in r."""
    out, hi = [], 0.0
    for p in ps:
        hi = max(hi, p)
        out.append(hi)
    return out


def characterize_profiles(
    measure: Callable[[float], Measurement], r_grid: Sequence[float]
) -> tuple[list[VoltageErrorProfile], list[Measurement]]:
    """Build per-layer profiles from measured error counts at each grid ratio.

    ``measure(r)`` runs the simulator with every layer at ratio ``r`` and
    reports per-layer error and executed-MAC counts.
    """
    grid = sorted((float(r) for r in r_grid), reverse=True)
    meas = [measure(r) for r in grid]
    n_layers = len(meas[0].errors)
    profiles = []
    for layer in range(n_layers):
        raw = [m.errors[layer] / m.executed[layer] if m.executed[layer] else 0.0 for m in meas]
        fixed = monotone_correct(grid, raw)
        profiles.append(VoltageErrorProfile.from_rows(zip(grid, fixed)))
    return profiles, meas
