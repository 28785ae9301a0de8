import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from undervolt.errmodel import (
    DEFAULT_GRID,
    VoltageErrorProfile,
    apply_process_variation,
    chip_sample,
    corrupt,
    default_layer_profiles,
    default_profile,
    error_prob,
    error_threshold,
    format_profiles,
    global_error_rate,
    parse_profile_text,
    ProfileFormatError,
    prf,
    prf_array,
    sample_error,
    settle_cut,
    splice,
    STREAM_ERROR,
)
from undervolt.qarith import from_bits, to_bits

ratios = st.floats(0.5, 1.0)


class TestProfile:
    def test_anchor_points(self):
        prof = default_profile()
        assert error_prob(prof, 0.85) == pytest.approx(1e-4, rel=1e-12)
        assert error_prob(prof, 0.90) == pytest.approx(1e-5, rel=1e-12)
        assert error_prob(prof, 1.0) == 0.0
        assert error_prob(prof, 0.95) == 0.0

    def test_zero_segment_stays_zero(self):
        prof = default_profile()
        assert prof(0.93) == 0.0
        assert prof(0.9001) == 0.0

    def test_saturates_near_floor(self):
        prof = default_profile()
        assert 0.15 < prof(0.65) <= 0.2
        assert prof(0.60) <= 0.2

    def test_log_linear_interpolation(self):
        prof = VoltageErrorProfile.from_rows([(0.8, 1e-2), (0.9, 1e-4)])
        assert prof(0.85) == pytest.approx(1e-3)
        assert prof(0.5) == 1e-2  # clamped
        assert prof(1.0) == 1e-4

    def test_validation(self):
        with pytest.raises(ValueError):
            VoltageErrorProfile((), ())
        with pytest.raises(ValueError):
            VoltageErrorProfile((0.8, 0.9), (1e-4, 1e-2))  # increasing in r
        with pytest.raises(ValueError):
            VoltageErrorProfile((0.9, 0.8), (1e-4, 1e-2))

    @given(ratios, ratios)
    def test_monotone(self, a, b):
        prof = default_profile()
        lo, hi = sorted((a, b))
        assert prof(lo) >= prof(hi)

    @given(ratios, ratios, st.floats(1.0, 30.0))
    def test_scaled_profiles_monotone(self, a, b, spread):
        lo, hi = sorted((a, b))
        for prof in default_layer_profiles(4, spread):
            assert prof(lo) >= prof(hi)

    def test_layer_spread(self):
        profs = default_layer_profiles(4, 10.0)
        at_min = [p(0.65) for p in profs]
        assert at_min == sorted(at_min)
        assert at_min[-1] / at_min[0] == pytest.approx(10.0)


class TestGlobalRate:
    def test_tpu_array(self):
        assert global_error_rate(1e-5, 65536) == pytest.approx(0.4807, abs=1e-4)

    @pytest.mark.parametrize("m", [0, 1, 100])
    def test_zero_p(self, m):
        assert global_error_rate(0.0, m) == 0.0

    def test_two_macs(self):
        assert global_error_rate(0.5, 2) == pytest.approx(0.75)

    @given(st.floats(0.0, 1.0), st.integers(1, 10**6))
    def test_at_least_local(self, p, m):
        g = global_error_rate(p, m)
        assert g >= p - 1e-15
        if m == 1 or p in (0.0, 1.0):
            assert g == pytest.approx(p)


class TestSampling:
    def test_extremes(self):
        for coords in [(0, 0, 0, 0, 0, 0), (7, 3, 2, 100, 5000, 783)]:
            assert sample_error(0.0, coords) is False
            assert sample_error(1.0, coords) is True

    def test_deterministic(self):
        c = (11, 2, 3, 4, 5, 6)
        assert sample_error(0.3, c) == sample_error(0.3, c)
        assert prf(11, 1, 2) != prf(12, 1, 2)

    def test_vectorized_prf_matches_scalar(self):
        k = np.arange(50)
        vec = prf_array(5, STREAM_ERROR, 1, 2, 3, 4, k)
        assert [int(v) for v in vec] == [prf(5, STREAM_ERROR, 1, 2, 3, 4, int(x)) for x in k]

    def test_marginal_rate(self):
        p, n = 0.01, 10**6
        i, k = np.divmod(np.arange(n), 1000)
        h = prf_array(42, STREAM_ERROR, 0, 0, i, 0, k)
        rate = np.mean(h < np.uint64(error_threshold(p)))
        assert abs(rate - p) <= 3 * math.sqrt(p * (1 - p) / n)

    def test_threshold(self):
        assert error_threshold(0.0) == 0
        assert error_threshold(1.0) == 1 << 64
        with pytest.raises(ValueError):
            error_threshold(1.5)


class TestCorrupt:
    def test_splice_examples(self):
        assert splice(5, -7, 0) == -7  # fully stale
        assert splice(1234, 1234, 23) == 1234  # silent
        assert to_bits(splice(0x000001, from_bits(0x800000), 8)) == 0x800001

    @given(st.integers(-(2**23), 2**23 - 1), st.integers(-(2**23), 2**23 - 1), st.integers(0, 23))
    def test_splice_is_bitwise_mix(self, correct, previous, cut):
        out = to_bits(splice(correct, previous, cut))
        low = (1 << cut) - 1
        assert out & low == to_bits(correct) & low
        assert out >> cut == to_bits(previous) >> cut

    def test_cut_range_and_uniformity(self):
        cuts = [settle_cut((1, 0, 0, 0, j, 0)) for j in range(24 * 400)]
        counts = np.bincount(cuts, minlength=24)
        assert counts.min() > 300 and counts.max() < 500
        assert max(cuts) <= 23

    @given(st.integers(-(2**23), 2**23 - 1), st.integers(0, 1000))
    def test_corrupt_silent_when_equal(self, v, j):
        assert corrupt(v, v, (0, 0, 0, 0, j, 0)) == v


class TestProcessVariation:
    def test_sigma_zero_identity(self):
        prof = default_profile()
        assert apply_process_variation(prof, 0.0, 123) == prof

    def test_shift(self):
        prof = default_profile()
        slow = prof.shifted(1.05)
        for r in (0.7, 0.8, 0.85, 0.9):
            assert slow(r * 1.05) == pytest.approx(prof(r), rel=1e-9)

    def test_deterministic_and_unbiased(self):
        f = [chip_sample(0.05, s).factor for s in range(50)]
        assert f == [chip_sample(0.05, s).factor for s in range(50)]
        assert abs(np.mean(f) - 1.0) <= 0.02


class TestProfileFile:
    TEXT = "layer_id,r,p\n*,0.8,1e-2\n*,0.9,1e-4\n*,1.0,0\n# per-layer\n1,0.8,0.05\n1,1.0,0\n"

    def test_parse(self):
        ps = parse_profile_text(self.TEXT)
        assert ps.for_layer(0)(0.9) == 1e-4
        assert ps.for_layer(1)(0.8) == 0.05
        assert ps.for_layer(7)(0.8) == 1e-2

    def test_unsorted_rejected(self):
        with pytest.raises(ProfileFormatError, match="sorted"):
            parse_profile_text("0,0.9,1e-4\n0,0.8,1e-2\n")

    def test_bad_rows(self):
        with pytest.raises(ProfileFormatError):
            parse_profile_text("0,zero,1\n")
        with pytest.raises(ProfileFormatError):
            parse_profile_text("x,0.9,1\n")
        with pytest.raises(ProfileFormatError):
            parse_profile_text("\n")

    def test_round_trip(self):
        profs = default_layer_profiles(3)
        back = parse_profile_text(format_profiles(profs)).resolve(3)
        for a, b in zip(profs, back):
            for r in DEFAULT_GRID:
                assert b(r) == pytest.approx(a(r), rel=1e-5)
