"""Array energy accounting relative to nominal-voltage execution.

Dynamic MAC energy scales with the square of the supply ratio at a fixed
clock. Peripheral energy is not modeled, so every figure is array-only.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from undervolt.dataflow import LayerStats
from undervolt.errmodel import VoltageErrorProfile, global_error_rate
from undervolt.policies import PolicyKind

RAZOR_OVERHEAD = 0.0335
FINE_GRID = tuple(round(1.0 - 0.01 * i, 2) for i in range(36))  # 1.00 .. 0.65


@dataclass(frozen=True)
class EnergyParams:
    e_mac_nominal: float = 1.0
    razor_overhead: float = RAZOR_OVERHEAD
    ted_R: int = 1
    zero_skip_cost: float = 0.0

    def __post_init__(self):
        for name in ("e_mac_nominal", "razor_overhead", "ted_R", "zero_skip_cost"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def mac_energy(r: float, params: EnergyParams = EnergyParams(), razor: bool = True) -> float:
    """Energy of one MAC cycle at ratio ``r``; ``razor=False`` for the unprotected design."""
    if not 0 < r <= 1:
        raise ValueError(f"underscaling ratio must be in (0, 1], got {r}")
    overhead = params.razor_overhead if razor else 0.0
    return params.e_mac_nominal * (1.0 + overhead) * r * r


def layer_energy(stats: LayerStats, r: float, params: EnergyParams, policy: PolicyKind) -> float:
    policy = PolicyKind.parse(policy)
    e = mac_energy(r, params, razor=policy.razor)
    energy = stats.mac_slots * e + stats.skipped * params.zero_skip_cost * e
    if policy is PolicyKind.TED:
        # Whole-array replay: every MAC of the n x n grid burns the recovery cycles.
        energy += stats.recovery_cycles * stats.n * stats.n * e
    return energy


def total_energy(stats: Iterable[LayerStats], params: EnergyParams, policy: PolicyKind) -> float:
    return sum(layer_energy(s, s.r, params, policy) for s in stats)


def savings(run_energy: float, baseline_energy: float) -> float:
    if not baseline_energy > 0:
        raise ValueError("baseline energy must be positive")
    return 1.0 - run_energy / baseline_energy


def ted_cycle_energy(r: float, p: float, m: int, R: int, params: EnergyParams = EnergyParams()) -> float:
    """Expected energy per useful array cycle under global TED, per MAC.

    A cycle in which any of the ``m`` MACs errs costs ``R`` extra cycles.
    """
    return mac_energy(r, params) * (1.0 + R * global_error_rate(p, m))


def ted_energy_curve(
    profile: VoltageErrorProfile,
    r_values=FINE_GRID,
    m: int = 65536,
    R: int = 1,
    params: EnergyParams = EnergyParams(),
):
    """Rows ``(r, p, global_rate, energy, savings)`` of the global-TED energy curve."""
    rows = []
    nominal = params.e_mac_nominal
    for r in r_values:
        p = profile(r)
        e = ted_cycle_energy(r, p, m, R, params)
        rows.append((r, p, global_error_rate(p, m), e, savings(e, nominal)))
    return rows
