"""Weight-stationary systolic execution: tiling, accumulation chains, cycles.

Each output ``y[i, j]`` of a block is produced by one accumulation chain that
hops through array positions ``k = 1..n`` in order. The staggered schedule
only matters for cycle accounting, which uses ``2n + B`` cycles per block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from undervolt import _kernel
from undervolt.errmodel import ProfileSet, VoltageErrorProfile, error_threshold, prf, settle_cut, STREAM_ERROR
from undervolt.policies import (
    EventKind,
    PolicyConfig,
    PolicyKind,
    step_golden,
    step_ted,
    step_tedrop,
    step_tep,
    ted_recovery_cycles,
)
from undervolt.qarith import QTensor, relu_requantize, wrap24


@dataclass(frozen=True)
class ArrayConfig:
    n: int = 256
    zero_skip: bool = False
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    batch: int = 256

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("array dimension must be at least 1")
        if self.batch < 1:
            raise ValueError("batch size must be at least 1")


class Tile(NamedTuple):
    block: int
    out_tile: int
    in_tile: int
    accumulate: bool  # False for the first tile written into an output tile


@dataclass(frozen=True)
class BlockPlan:
    out_dim: int
    in_dim: int
    batch: int
    n: int
    tiles: tuple[Tile, ...]

    def __len__(self):
        return len(self.tiles)

    @property
    def in_tiles(self) -> int:
        return math.ceil(self.in_dim / self.n)


def plan_blocks(out_dim: int, in_dim: int, batch: int, n: int) -> BlockPlan:
    if min(out_dim, in_dim, batch, n) < 1:
        raise ValueError("all dimensions must be at least 1")
    n_out, n_in = math.ceil(out_dim / n), math.ceil(in_dim / n)
    tiles = tuple(
        Tile(ti * n_in + tk, ti, tk, tk > 0) for ti in range(n_out) for tk in range(n_in)
    )
    return BlockPlan(out_dim, in_dim, batch, n, tiles)


def cycle_count(n: int, batch: int, blocks: int, recovery_cycles: int = 0) -> int:
    if min(n, batch, blocks, recovery_cycles) < 0:
        raise ValueError("counts must be non-negative")
    return blocks * (2 * n + batch) + recovery_cycles


# --- error sources ---------------------------------------------------------


class ChainCoords(NamedTuple):
    """Position of a chain: layer, block, output row i, sample j, first input k."""

    layer: int = 0
    block: int = 0
    i: int = 0
    j: int = 0
    k0: int = 0


@dataclass(frozen=True)
class ErrorSource:
    """Coordinate-keyed Bernoulli(p) errors for one layer run."""

    p: float
    seed: int = 0

    def errs(self, layer, block, i, j, k) -> bool:
        return prf(self.seed, STREAM_ERROR, layer, block, i, j, k) < error_threshold(self.p)

    def cut(self, layer, block, i, j, k) -> int:
        return settle_cut((self.seed, layer, block, i, j, k))


@dataclass(frozen=True)
class ForcedErrors:
    """Errors at fixed chain positions (0-based), for oracle tests."""

    positions: frozenset
    seed: int = 0

    def errs(self, layer, block, i, j, k) -> bool:
        return k in self.positions

    def cut(self, layer, block, i, j, k) -> int:
        return settle_cut((self.seed, layer, block, i, j, k))


NO_ERRORS = ErrorSource(0.0)


class MacEvent(NamedTuple):
    i: int
    j: int
    k: int
    kind: EventKind
    errored: bool = False


@dataclass(frozen=True)
class ChainTrace:
    events: tuple[MacEvent, ...]
    final: int
    latched: tuple[int, ...]  # register contents after each position

    def count(self, kind: EventKind) -> int:
        return sum(e.kind is kind for e in self.events)

    @property
    def errors(self) -> int:
        return sum(e.errored for e in self.events)


def simulate_chain(
    weights_row: Sequence[int],
    activations_col: Sequence[int],
    init: int = 0,
    policy: PolicyConfig | PolicyKind = PolicyKind.GOLDEN,
    error_sampler=NO_ERRORS,
    coords: ChainCoords = ChainCoords(),
    zero_skip: bool = False,
    prev_latched: Sequence[int] | None = None,
    valid: int | None = None,
) -> tuple[int, ChainTrace]:
    """Run one accumulation chain through the policy's step semantics.

    Positions at or beyond ``valid`` are zero padding and are always skipped.
    ``prev_latched`` holds what each position's register latched for the
    previous chain in the stream (TEP corruption source); zeros if omitted.
    """
    n = len(weights_row)
    if len(activations_col) != n:
        raise ValueError(f"chain length mismatch: {n} weights, {len(activations_col)} activations")
    kind = policy.kind if isinstance(policy, PolicyConfig) else PolicyKind.parse(policy)
    valid = n if valid is None else valid
    prev = list(prev_latched) if prev_latched is not None else [0] * n
    layer, block, i, j, k0 = coords

    acc = int(init)
    events, latched = [], []
    pred_err = False
    for kl in range(n):
        k = k0 + kl
        w, a = int(weights_row[kl]), int(activations_col[kl])
        if kl >= valid:
            events.append(MacEvent(i, j, k, EventKind.SKIPPED_ZERO))
            pred_err = False
        elif kind is PolicyKind.TEDROP and pred_err:
            acc, ev, _ = step_tedrop(acc, w, a, True, False)
            events.append(MacEvent(i, j, k, ev))
            pred_err = False
        elif zero_skip and (w == 0 or a == 0):
            events.append(MacEvent(i, j, k, EventKind.SKIPPED_ZERO))
        else:
            sampled = kind is not PolicyKind.GOLDEN and error_sampler.errs(layer, block, i, j, k)
            if kind is PolicyKind.GOLDEN:
                acc, err = step_golden(acc, w, a), False
            elif kind is PolicyKind.TEP:
                cut_coords = (error_sampler.seed, layer, block, i, j, k)
                acc, err = step_tep(acc, w, a, sampled, prev[kl], cut_coords)
            elif kind is PolicyKind.TED:
                acc, err = step_ted(acc, w, a, sampled)
            else:
                acc, _, err = step_tedrop(acc, w, a, False, sampled)
                pred_err = err
            events.append(MacEvent(i, j, k, EventKind.EXECUTED, err))
        latched.append(acc)
    return acc, ChainTrace(tuple(events), acc, tuple(latched))


# --- layers ----------------------------------------------------------------


@dataclass(frozen=True)
class Layer:
    """Fully connected layer: int8 weights (out x in), bias in accumulator units."""

    weights: QTensor
    bias: np.ndarray
    input_scale: float
    output_scale: float
    activation: str = "relu"

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=np.int64).reshape(-1)
        if bias.shape[0] != self.weights.rows:
            raise ValueError(f"bias length {bias.shape[0]} != out_dim {self.weights.rows}")
        if self.activation not in ("relu", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "bias", bias)

    @property
    def out_dim(self) -> int:
        return self.weights.rows

    @property
    def in_dim(self) -> int:
        return self.weights.cols

    @property
    def acc_scale(self) -> float:
        return self.weights.scale * self.input_scale


@dataclass
class ErrorModel:
    """Per-layer error probability for a run: a profile lookup or a flat override."""

    profiles: ProfileSet | Sequence[VoltageErrorProfile] | None = None
    seed: int = 0
    flat_p: float | None = None

    def p(self, layer: int, r: float) -> float:
        if self.flat_p is not None:
            return self.flat_p
        if self.profiles is None:
            return 0.0
        if isinstance(self.profiles, ProfileSet):
            return self.profiles.for_layer(layer)(r)
        return self.profiles[layer](r)


@dataclass
class LayerStats:
    layer: int = 0
    r: float = 1.0
    p: float = 0.0
    executed: int = 0
    skipped: int = 0
    dropped: int = 0
    padded: int = 0
    errors: int = 0
    error_cycles: int = 0
    recovery_cycles: int = 0
    blocks: int = 0
    cycles: int = 0
    n: int = 0
    column_errors: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    batch_errors: list = field(default_factory=list)

    @property
    def mac_slots(self) -> int:
        """Executed plus dropped: the MAC cycles that burn energy."""
        return self.executed + self.dropped

    @property
    def positions(self) -> int:
        return self.executed + self.skipped + self.dropped + self.padded

    def as_dict(self) -> dict:
        return {
            "layer": self.layer,
            "r": self.r,
            "p": self.p,
            "executed": self.executed,
            "skipped": self.skipped,
            "dropped": self.dropped,
            "padded": self.padded,
            "errors": self.errors,
            "error_cycles": self.error_cycles,
            "recovery_cycles": self.recovery_cycles,
            "blocks": self.blocks,
            "cycles": self.cycles,
            "n": self.n,
        }


def _check_shapes(layer: Layer, activations: QTensor):
    if activations.rows != layer.in_dim:
        raise ValueError(
            f"shape mismatch: layer expects {layer.in_dim} inputs, activations have {activations.rows} rows"
        )


def accumulate_layer(
    layer: Layer,
    activations: QTensor,
    config: ArrayConfig,
    p: float = 0.0,
    seed: int = 0,
    layer_index: int = 0,
    sample_ids: np.ndarray | None = None,
    engine: str = "kernel",
    traces: list | None = None,
) -> tuple[np.ndarray, LayerStats]:
    """Run every block of a layer; returns biased 24-bit accumulators and stats."""
    _check_shapes(layer, activations)
    kind = config.policy.kind
    n = config.n
    total = activations.cols
    if sample_ids is None:
        sample_ids = np.arange(total, dtype=np.int64)
    sample_ids = np.ascontiguousarray(sample_ids, dtype=np.int64)
    if sample_ids.shape != (total,):
        raise ValueError("sample_ids must give one id per activation column")
    acc_all = np.zeros((layer.out_dim, total), dtype=np.int64)
    stats = LayerStats(layer=layer_index, p=p, n=n, column_errors=np.zeros(n, dtype=np.int64))
    sample = kind is not PolicyKind.GOLDEN and p > 0
    threshold = error_threshold(p)
    always = threshold >= 1 << 64
    w = np.ascontiguousarray(layer.weights.data)
    counters = np.zeros(_kernel.N_COUNTERS, dtype=np.int64)

    for b0 in range(0, total, config.batch):
        a = np.ascontiguousarray(activations.data[:, b0 : b0 + config.batch])
        batch = a.shape[1]
        plan = plan_blocks(layer.out_dim, layer.in_dim, batch, n)
        acc = np.zeros((layer.out_dim, batch), dtype=np.int64)
        batch_err = np.zeros(1, dtype=np.int64)
        before_cycles = counters[_kernel.ERROR_CYCLES]
        for tile in plan.tiles:
            if engine == "kernel":
                _kernel.run_tile(
                    w, a, acc, n, tile.out_tile, tile.in_tile, plan.in_tiles, int(kind),
                    config.zero_skip, sample, np.uint64(min(threshold, (1 << 64) - 1)), always,
                    np.uint64(seed), layer_index, sample_ids[b0 : b0 + batch], counters,
                    stats.column_errors, batch_err,
                )
            elif engine == "reference":
                _reference_tile(
                    layer, a, acc, config, tile, plan, ErrorSource(p, seed) if sample else NO_ERRORS,
                    layer_index, sample_ids[b0 : b0 + batch], counters, stats.column_errors, batch_err, traces,
                )
            else:
                raise ValueError(f"unknown engine {engine!r}")
        acc_all[:, b0 : b0 + batch] = acc
        stats.blocks += len(plan)
        batch_error_cycles = int(counters[_kernel.ERROR_CYCLES] - before_cycles)
        recovery = ted_recovery_cycles(batch_error_cycles, config.policy.ted_recovery_cycles) if kind is PolicyKind.TED else 0
        stats.recovery_cycles += recovery
        stats.cycles += cycle_count(n, batch, len(plan), recovery)
        stats.batch_errors.append(int(batch_err[0]))

    stats.executed = int(counters[_kernel.EXECUTED])
    stats.skipped = int(counters[_kernel.SKIPPED])
    stats.dropped = int(counters[_kernel.DROPPED])
    stats.padded = int(counters[_kernel.PADDED])
    stats.errors = int(counters[_kernel.ERRORS])
    stats.error_cycles = int(counters[_kernel.ERROR_CYCLES]) if kind is PolicyKind.TED else 0
    acc_all = wrap24(acc_all + layer.bias[:, None])
    return acc_all, stats


def _reference_tile(layer, a, acc, config, tile, plan, sampler, layer_index, ids, counters, col_errors, batch_err, traces):
    n = config.n
    w = layer.weights.data
    in_dim = layer.in_dim
    k_lo, i_lo = tile.in_tile * n, tile.out_tile * n
    valid = min(n, in_dim - k_lo)
    cycles = set()
    for i in range(i_lo, min(i_lo + n, layer.out_dim)):
        wrow = np.zeros(n, dtype=np.int64)
        wrow[:valid] = w[i, k_lo : k_lo + valid]
        prev = [0] * n
        for jl in range(a.shape[1]):
            acol = np.zeros(n, dtype=np.int64)
            acol[:valid] = a[k_lo : k_lo + valid, jl]
            coords = ChainCoords(layer_index, tile.block, i, int(ids[jl]), k_lo)
            final, trace = simulate_chain(
                wrow, acol, 0, config.policy, sampler, coords, config.zero_skip, prev, valid
            )
            prev = list(trace.latched)
            acc[i, jl] = wrap24(acc[i, jl] + final)
            for kl, ev in enumerate(trace.events):
                if kl >= valid:
                    counters[_kernel.PADDED] += 1
                elif ev.kind is EventKind.EXECUTED:
                    counters[_kernel.EXECUTED] += 1
                elif ev.kind is EventKind.DROPPED:
                    counters[_kernel.DROPPED] += 1
                else:
                    counters[_kernel.SKIPPED] += 1
                if ev.errored:
                    counters[_kernel.ERRORS] += 1
                    col_errors[i - i_lo] += 1
                    batch_err[0] += 1
                    cycles.add((i - i_lo) + jl + kl)
            if traces is not None:
                traces.append(trace)
    if config.policy.kind is PolicyKind.TED:
        counters[_kernel.ERROR_CYCLES] += len(cycles)


def finish_layer(layer: Layer, acc: np.ndarray):
    """Apply the output stage: ReLU + requantize, or raw accumulators for argmax."""
    if layer.activation == "none":
        return acc
    return QTensor(relu_requantize(acc, layer.output_scale, layer.acc_scale), layer.output_scale)


def run_layer(
    layer: Layer,
    activations: QTensor,
    config: ArrayConfig,
    r: float = 1.0,
    error_model: ErrorModel | None = None,
    layer_index: int = 0,
    sample_ids: np.ndarray | None = None,
    engine: str = "kernel",
    traces: list | None = None,
):
    """Execute one layer; returns (next activations or raw logits, LayerStats)."""
    error_model = error_model or ErrorModel()
    p = error_model.p(layer_index, r)
    acc, stats = accumulate_layer(
        layer, activations, config, p, error_model.seed, layer_index, sample_ids, engine, traces
    )
    stats.r = r
    return finish_layer(layer, acc), stats


def reference_matmul(layer: Layer, activations: QTensor) -> np.ndarray:
    """Direct integer matmul oracle: wrap24(W @ A + b)."""
    acc = layer.weights.data.astype(np.int64) @ activations.data.astype(np.int64)
    return wrap24(acc + layer.bias[:, None])
