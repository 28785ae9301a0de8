"""Recovery-policy semantics for one MAC step of an accumulation chain.

These scalar step functions are the reference semantics. The fast block
kernel in ``undervolt._kernel`` implements the same rules and is tested
against them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from undervolt.errmodel import corrupt
from undervolt.qarith import mac_step


class PolicyKind(enum.IntEnum):
    GOLDEN = 0
    TEP = 1
    TED = 2
    TEDROP = 3

    @classmethod
    def parse(cls, name) -> "PolicyKind":
        if isinstance(name, PolicyKind):
            return name
        key = str(name).strip().upper().replace("-", "").replace("_", "")
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"unknown policy {name!r}; expected golden, tep, ted or tedrop") from None

    @property
    def label(self) -> str:
        return {0: "golden", 1: "tep", 2: "ted", 3: "tedrop"}[int(self)]

    @property
    def razor(self) -> bool:
        """Whether this design carries Razor instrumentation."""
        return self is not PolicyKind.GOLDEN


class EventKind(enum.IntEnum):
    EXECUTED = 0
    SKIPPED_ZERO = 1
    DROPPED = 2


@dataclass(frozen=True)
class PolicyConfig:
    kind: PolicyKind = PolicyKind.TEDROP
    ted_recovery_cycles: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", PolicyKind.parse(self.kind))
        if self.ted_recovery_cycles < 1 and self.kind is PolicyKind.TED:
            raise ValueError("TED needs at least one recovery cycle")


def step_golden(acc: int, w: int, a: int) -> int:
    return mac_step(acc, w, a)


def step_tep(acc: int, w: int, a: int, error_flag: bool, prev_latched: int, coords) -> tuple[int, bool]:
    """Errors propagate: a late register keeps stale high bits of ``prev_latched``."""
    correct = mac_step(acc, w, a)
    if not error_flag:
        return correct, False
    latched = corrupt(correct, prev_latched, coords)
    return latched, latched != correct


def step_ted(acc: int, w: int, a: int, error_flag: bool) -> tuple[int, bool]:
    """Errors are detected and replayed, so the value is always golden."""
    return mac_step(acc, w, a), bool(error_flag)


def step_tedrop(acc: int, w: int, a: int, predecessor_errored: bool, error_sample: bool) -> tuple[int, EventKind, bool]:
    """One TE-Drop position.

    Returns ``(acc', kind, errored)``. If the previous MAC errored it has stolen
    this cycle, so this position's update is bypassed. Otherwise the update
    happens and completes correctly even when it errs (it steals the next
    cycle in turn).
    """
    if predecessor_errored:
        return acc, EventKind.DROPPED, False
    return mac_step(acc, w, a), EventKind.EXECUTED, bool(error_sample)


def ted_recovery_cycles(error_cycles: int, recovery_cycles: int) -> int:
    if error_cycles < 0 or recovery_cycles < 0:
        raise ValueError("counts must be non-negative")
    return error_cycles * recovery_cycles
