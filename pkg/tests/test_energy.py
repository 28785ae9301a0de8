import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_acts, random_layer
from undervolt.dataflow import ArrayConfig, LayerStats, accumulate_layer
from undervolt.energy import (
    FINE_GRID,
    EnergyParams,
    layer_energy,
    mac_energy,
    savings,
    ted_energy_curve,
    total_energy,
)
from undervolt.errmodel import DEFAULT_GRID, default_profile
from undervolt.policies import PolicyConfig, PolicyKind


@pytest.mark.parametrize("r, razor, expected", [(1.0, False, 1.0), (0.65, True, 0.4367), (0.9, True, 0.8371)])
def test_mac_energy_examples(r, razor, expected):
    assert mac_energy(r, razor=razor) == pytest.approx(expected, abs=5e-5)


def test_mac_energy_rejects_bad_ratio():
    for r in (0.0, -0.1, 1.2):
        with pytest.raises(ValueError):
            mac_energy(r)
    with pytest.raises(ValueError):
        EnergyParams(razor_overhead=-1)


def test_flat_savings():
    assert savings(mac_energy(0.65), 1.0) == pytest.approx(0.5633, abs=1e-4)
    with pytest.raises(ValueError):
        savings(1.0, 0.0)


@given(st.floats(0.3, 0.99), st.floats(0.01, 0.3))
def test_savings_increase_as_r_drops(r, dr):
    lo = max(r - dr, 0.2)
    assert savings(mac_energy(lo), 1.0) > savings(mac_energy(r), 1.0)


def _stats(**kw):
    base = dict(executed=100, skipped=20, dropped=5, n=4, r=0.8)
    base.update(kw)
    return LayerStats(**base)


def test_layer_energy_terms():
    p = EnergyParams(zero_skip_cost=0.5)
    e = mac_energy(0.8, p)
    assert layer_energy(_stats(), 0.8, p, PolicyKind.TEDROP) == pytest.approx((105 + 10) * e)
    st = _stats(recovery_cycles=3)
    assert layer_energy(st, 0.8, p, "ted") == pytest.approx((105 + 10 + 3 * 16) * e)
    g = layer_energy(_stats(), 0.8, p, "golden")
    assert g == pytest.approx(115 * mac_energy(0.8, p, razor=False))


def test_energy_is_additive():
    stats = [_stats(r=0.7), _stats(r=0.9, executed=50)]
    p = EnergyParams()
    assert total_energy(stats, p, "tedrop") == pytest.approx(sum(layer_energy(s, s.r, p, "tedrop") for s in stats))


def test_ted_curve_shape():
    prof = default_profile()
    curve = ted_energy_curve(prof, m=65536, R=1)
    best = max(row[-1] for row in curve)
    assert 0.10 <= best <= 0.20
    e5 = [row[3] for row in ted_energy_curve(prof, m=65536, R=5)]
    i = int(np.argmin(e5))
    assert 0 < i < len(e5) - 1
    assert FINE_GRID[i] >= 0.85


def test_ted_curve_on_coarse_grid_is_flat_error_free():
    rows = ted_energy_curve(default_profile(), r_values=DEFAULT_GRID)
    assert rows[0][-1] == pytest.approx(0.0 - 0.0335)
    assert rows[1][2] == 0.0


def test_zero_skip_composition():
    rng = np.random.default_rng(0)
    layer = random_layer(rng, 32, 64, zero_frac=0.4)
    acts = random_acts(rng, 64, 16, zero_frac=0.4)
    p = EnergyParams()

    def energy(policy, zs, r):
        _, st = accumulate_layer(layer, acts, ArrayConfig(8, zs, PolicyConfig(policy)), 0.0)
        return layer_energy(st, r, p, policy)

    base = energy("golden", False, 1.0)
    zs = energy("golden", True, 1.0)
    s_plain = savings(energy("tedrop", False, 0.7), base)
    s_zs = savings(energy("tedrop", True, 0.7), zs)
    assert abs(s_plain - s_zs) < 1e-12
