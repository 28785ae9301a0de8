"""Timing-error model: voltage-to-error profiles, coordinate-keyed sampling,
stale-register corruption and process variation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from undervolt.qarith import ACC_BITS, ACC_MASK, from_bits, to_bits

MASK64 = (1 << 64) - 1
GOLDEN64 = 0x9E3779B97F4A7C15

# PRF stream tags, so sampling and the corruption cut never share draws.
STREAM_ERROR = 1
STREAM_CUT = 2

ALL_LAYERS = "*"


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def prf(seed: int, *fields: int) -> int:
    """64-bit pseudo-random function of an integer tuple."""
    h = mix64((seed + GOLDEN64) & MASK64)
    for x in fields:
        h = mix64(((h ^ (x & MASK64)) + GOLDEN64) & MASK64)
    return h


def prf_array(seed: int, *fields) -> np.ndarray:
    """Vectorized ``prf``; each field is an integer scalar or array (broadcast)."""
    u = np.uint64
    arrays = np.broadcast_arrays(*[np.asarray(f, dtype=np.uint64) for f in fields])

    def mix(z):
        z = (z ^ (z >> u(30))) * u(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> u(27))) * u(0x94D049BB133111EB)
        return z ^ (z >> u(31))

    with np.errstate(over="ignore"):
        h = mix(np.full(arrays[0].shape, (seed + GOLDEN64) & MASK64, dtype=np.uint64))
        for x in arrays:
            h = mix((h ^ x) + u(GOLDEN64))
    return h


def error_threshold(p: float) -> int:
    """Integer threshold ``p * 2**64``; a draw ``h`` errs iff ``h < threshold``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability outside [0, 1]: {p}")
    return min(int(p * 2.0**64), 1 << 64)


def sample_error(p: float, coords: Sequence[int]) -> bool:
    """Deterministic Bernoulli(p) draw keyed by (seed, layer, block, i, j, k)."""
    seed, *rest = coords
    return prf(seed, STREAM_ERROR, *rest) < error_threshold(p)


def settle_cut(coords: Sequence[int]) -> int:
    """Bit position below which a late register has already settled, in [0, 23]."""
    seed, *rest = coords
    return prf(seed, STREAM_CUT, *rest) % ACC_BITS


def splice(correct: int, previous: int, cut: int) -> int:
    """Bits [0, cut) from ``correct``, bits [cut, 24) from ``previous``."""
    low = (1 << cut) - 1
    bits = (to_bits(correct) & low) | (to_bits(previous) & ~low & ACC_MASK)
    return from_bits(bits)


def corrupt(correct: int, previous: int, coords: Sequence[int]) -> int:
    """Value latched by a register that missed timing.

    Low-order bits settle first through the carry chain, so the register holds
    the new low bits and stale high bits. A result equal to ``correct`` is a
    silent error.
    """
    return splice(correct, previous, settle_cut(coords))


def global_error_rate(p: float, m: int) -> float:
    """Probability that at least one of ``m`` MACs errs in a cycle."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability outside [0, 1]: {p}")
    if m <= 0 or p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    return -math.expm1(m * math.log1p(-p))


@dataclass(frozen=True)
class VoltageErrorProfile:
    """Monotone table from underscaling ratio r to per-MAC error probability.

    Rows are held in ascending r. Between two nonzero rows, log p is linear
    in r; a segment whose upper row is zero evaluates to zero everywhere
    except at its nonzero lower endpoint. Outside the table, r is clamped.
    """

    r: tuple[float, ...]
    p: tuple[float, ...]

    def __post_init__(self):
        r = tuple(float(v) for v in self.r)
        p = tuple(float(v) for v in self.p)
        if not r:
            raise ValueError("empty voltage-error profile")
        if len(r) != len(p):
            raise ValueError("profile r and p columns differ in length")
        if any(b <= a for a, b in zip(r, r[1:])):
            raise ValueError("profile r values must be strictly increasing")
        if any(not 0.0 < v <= 1.0 for v in r):
            raise ValueError("profile r values must lie in (0, 1]")
        if any(not 0.0 <= v <= 1.0 for v in p):
            raise ValueError("profile p values must lie in [0, 1]")
        if any(b > a for a, b in zip(p, p[1:])):
            raise ValueError("profile p must be non-increasing in r")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "p", p)

    @classmethod
    def from_rows(cls, rows):
        rows = sorted((float(r), float(p)) for r, p in rows)
        return cls(tuple(r for r, _ in rows), tuple(p for _, p in rows))

    @classmethod
    def logistic(cls, r0: float, steepness: float, p_max: float, r_values):
        """Tabulate ``p_max / (1 + exp(steepness * (r - r0)))``."""
        r_values = sorted(float(v) for v in r_values)
        return cls(
            tuple(r_values),
            tuple(p_max / (1.0 + math.exp(steepness * (v - r0))) for v in r_values),
        )

    def __call__(self, r: float) -> float:
        return error_prob(self, r)

    def rows(self):
        return list(zip(self.r, self.p))

    def scaled(self, factor: float) -> "VoltageErrorProfile":
        """Multiply every probability by ``factor`` (saturating at 1)."""
        if factor < 0:
            raise ValueError("scale factor must be non-negative")
        return VoltageErrorProfile(self.r, tuple(min(1.0, v * factor) for v in self.p))

    def shifted(self, factor: float) -> "VoltageErrorProfile":
        """Delay-scaled chip: ``p'(r) = p(r / factor)``."""
        if not factor > 0:
            raise ValueError("delay factor must be positive")
        rows = [(r * factor, p) for r, p in zip(self.r, self.p) if r * factor <= 1.0]
        if not rows or rows[-1][0] < 1.0:
            # Keep the nominal point representable after the shift.
            rows.append((1.0, error_prob(self, 1.0 / factor)))
        return VoltageErrorProfile.from_rows(rows)


def error_prob(profile: VoltageErrorProfile, r: float) -> float:
    rs, ps = profile.r, profile.p
    if r <= rs[0]:
        return ps[0]
    if r >= rs[-1]:
        return ps[-1]
    hi = int(np.searchsorted(rs, r, side="left"))
    if rs[hi] == r:
        return ps[hi]
    lo = hi - 1
    p_lo, p_hi = ps[lo], ps[hi]
    if p_hi == 0.0:
        return 0.0
    t = (r - rs[lo]) / (rs[hi] - rs[lo])
    return math.exp((1 - t) * math.log(p_lo) + t * math.log(p_hi))


# Logistic tail of the default curve: passes through (0.85, 1e-4) and reaches
# 95% of P_MAX at r = 0.65.
P_MAX = 0.2
_LOGIT_HI = math.log(P_MAX / 1e-4 - 1)
_LOGIT_LO = math.log(P_MAX / (0.95 * P_MAX) - 1)
STEEPNESS = (_LOGIT_HI - _LOGIT_LO) / (0.85 - 0.65)
R0 = 0.85 - _LOGIT_HI / STEEPNESS

DEFAULT_GRID = (1.00, 0.95, 0.90, 0.85, 0.80, 0.75, 0.70, 0.65)


def default_profile() -> VoltageErrorProfile:
    """Built-in curve: error-free down to 0.95, 1e-5 at 0.90, 1e-4 at 0.85,
    logistic growth below that saturating near 0.2 at 0.65."""
    tail = VoltageErrorProfile.logistic(R0, STEEPNESS, P_MAX, [round(0.60 + 0.01 * i, 2) for i in range(25)])
    rows = tail.rows() + [(0.85, 1e-4), (0.90, 1e-5), (0.95, 0.0), (1.00, 0.0)]
    return VoltageErrorProfile.from_rows(rows)


def layer_spread(n_layers: int, spread: float = 10.0) -> list[float]:
    """Per-layer probability multipliers: the deepest layer 1, the first 1/spread."""
    if n_layers == 1:
        return [1.0]
    return list(np.geomspace(1.0 / spread, 1.0, n_layers))


def default_layer_profiles(n_layers: int, spread: float = 10.0) -> list[VoltageErrorProfile]:
    base = default_profile()
    return [base.scaled(f) for f in layer_spread(n_layers, spread)]


@dataclass(frozen=True)
class ChipSample:
    factor: float
    seed: int

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("chip delay factor must be positive")


def chip_sample(sigma: float, chip_seed: int) -> ChipSample:
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    f = float(np.random.default_rng(chip_seed).normal(1.0, sigma)) if sigma > 0 else 1.0
    # A 20-sigma tail would be needed to reach zero at sigma=5%.
    return ChipSample(max(f, 1e-3), chip_seed)


def apply_process_variation(profile: VoltageErrorProfile, sigma: float, chip_seed: int) -> VoltageErrorProfile:
    chip = chip_sample(sigma, chip_seed)
    if chip.factor == 1.0:
        return profile
    return profile.shifted(chip.factor)


# --- profile files -------------------------------------------------------


@dataclass
class ProfileSet:
    """Per-layer profiles with an optional all-layers fallback."""

    layers: dict[int, VoltageErrorProfile] = field(default_factory=dict)
    fallback: VoltageErrorProfile | None = None

    def for_layer(self, layer: int) -> VoltageErrorProfile:
        if layer in self.layers:
            return self.layers[layer]
        if self.fallback is None:
            raise KeyError(f"no error profile for layer {layer}")
        return self.fallback

    def resolve(self, n_layers: int) -> list[VoltageErrorProfile]:
        return [self.for_layer(i) for i in range(n_layers)]


class ProfileFormatError(ValueError):
    pass


def parse_profile_text(text: str, source: str = "<string>") -> ProfileSet:
    rows: dict[str, list[tuple[float, float]]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [s.strip() for s in line.split(",")]
        if parts[0] == "layer_id":
            continue
        if len(parts) != 3:
            raise ProfileFormatError(f"{source}:{lineno}: expected layer_id,r,p")
        try:
            r, p = float(parts[1]), float(parts[2])
        except ValueError:
            raise ProfileFormatError(f"{source}:{lineno}: r and p must be decimal numbers") from None
        key = parts[0]
        if key != ALL_LAYERS and not key.isdigit():
            raise ProfileFormatError(f"{source}:{lineno}: layer_id must be an integer or '*'")
        prev = rows.setdefault(key, [])
        if prev and r <= prev[-1][0]:
            raise ProfileFormatError(f"{source}:{lineno}: rows for layer {key} must be sorted by r ascending")
        prev.append((r, p))
    if not rows:
        raise ProfileFormatError(f"{source}: empty profile file")
    out = ProfileSet()
    for key, rs in rows.items():
        try:
            prof = VoltageErrorProfile.from_rows(rs)
        except ValueError as exc:
            raise ProfileFormatError(f"{source}: layer {key}: {exc}") from None
        if key == ALL_LAYERS:
            out.fallback = prof
        else:
            out.layers[int(key)] = prof
    return out


def load_profiles(path) -> ProfileSet:
    path = Path(path)
    return parse_profile_text(path.read_text(), str(path))


def format_profiles(profiles: Mapping[int, VoltageErrorProfile] | Sequence[VoltageErrorProfile]) -> str:
    items = profiles.items() if isinstance(profiles, Mapping) else enumerate(profiles)
    lines = ["layer_id,r,p"]
    for layer, prof in items:
        lines += [f"{layer},{r:.6g},{p:.6g}" for r, p in prof.rows()]
    return "\n".join(lines) + "\n"
