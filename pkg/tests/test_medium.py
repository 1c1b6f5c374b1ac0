import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firewatch.medium import (
    CalibrationPoint,
    ChannelRejected,
    LinkEnvironment,
    Medium,
    MediumError,
    RadioFrame,
    URBAN_CALIBRATION,
    delivery_probability,
    environment,
    forest_environment,
    latency_median,
    rssi_at,
    rssi_median,
    uplink_latency,
    urban_environment,
)

URBAN = urban_environment()


def _rng(seed=0):
    return np.random.default_rng(seed)


def _frame(t=0.0, freq=915_200_000, dr=3, source="n1", payload="0102", air=0.1):
    return RadioFrame(payload, freq, dr, t, air, source)


class TestDeliveryProbability:
    @pytest.mark.parametrize(
        "d,expect", [(100, 1.00), (200, 0.95), (350, 0.10), (700, 0.00)]
    )
    def test_exact_at_calibration_points(self, d, expect):
        assert delivery_probability(d, URBAN) == expect

    def test_interpolated_midpoint(self):
        assert delivery_probability(150, URBAN) == pytest.approx(0.975)

    def test_clamps(self):
        assert delivery_probability(0, URBAN) == 1.0
        assert delivery_probability(5000, URBAN) == 0.0

    def test_negative_distance_rejected(self):
        with pytest.raises(MediumError):
            delivery_probability(-1, URBAN)

    @given(st.floats(0, 2000), st.floats(0, 2000))
    def test_monotone_non_increasing(self, a, b):
        lo, hi = sorted((a, b))
        assert delivery_probability(lo, URBAN) >= delivery_probability(hi, URBAN)


class TestRssiAndLatency:
    @pytest.mark.parametrize("d,expect", [(100, -112.0), (200, -112.0), (350, -115.0)])
    def test_median_passes_through_points(self, d, expect):
        assert rssi_median(d, URBAN) == expect

    def test_flat_extrapolation(self):
        assert rssi_median(10, URBAN) == -112.0
        assert rssi_median(650, URBAN) == -115.0

    @pytest.mark.parametrize("d,expect", [(100, 0.0515), (200, 0.1029), (350, 0.1853)])
    def test_latency_medians(self, d, expect):
        assert latency_median(d, URBAN) == expect

    def test_rssi_noise_spread(self):
        rng = _rng(1)
        vals = np.array([rssi_at(100, URBAN, rng) for _ in range(4000)])
        assert abs(np.median(vals) - (-112.0)) < 0.2
        assert 1.8 < vals.std() < 2.2

    def test_latency_jitter_band(self):
        rng = _rng(2)
        vals = np.array([uplink_latency(200, URBAN, rng) for _ in range(2000)])
        assert vals.min() >= 0.1029 * 0.9
        assert vals.max() <= 0.1029 * 1.1


class TestEnvironments:
    def test_forest_halves_distances(self):
        forest = forest_environment()
        assert delivery_probability(50, forest) == 1.0
        assert delivery_probability(100, forest) == 0.95
        assert delivery_probability(175, forest) == pytest.approx(0.10)
        assert delivery_probability(350, forest) == 0.0

    def test_environment_factory(self):
        assert environment("urban").kind == "urban"
        assert environment("forest").kind == "forest"
        with pytest.raises(MediumError):
            environment("lunar")

    def test_calibration_validation(self):
        with pytest.raises(MediumError):
            LinkEnvironment("x", (CalibrationPoint(100, 1.0, -112, 0.05),))
        with pytest.raises(MediumError):
            LinkEnvironment(
                "x",
                (
                    CalibrationPoint(200, 1.0, -112, 0.05),
                    CalibrationPoint(100, 0.5, -112, 0.05),
                ),
            )
        with pytest.raises(MediumError):
            LinkEnvironment(
                "x",
                (
                    CalibrationPoint(100, 0.5, -112, 0.05),
                    CalibrationPoint(200, 0.9, -112, 0.05),
                ),
            )


class TestTransmit:
    def test_out_of_range_always_dropped(self):
        med = Medium(URBAN, _rng(3))
        for i in range(50):
            out = med.transmit(_frame(t=i * 10.0), (700, 0), (0, 0))
            assert out is None

    def test_zero_distance_always_delivered(self):
        med = Medium(URBAN, _rng(4))
        for i in range(50):
            out = med.transmit(_frame(t=i * 10.0), (0, 0), (0, 0))
            assert out is not None
            assert out.rssi <= 0
            assert out.rx_time >= out.frame.tx_end

    def test_overlapping_same_channel_both_dropped(self):
        med = Medium(URBAN, _rng(5))
        a = med.transmit(_frame(t=0.0, source="a"), (10, 0), (0, 0))
        b = med.transmit(_frame(t=0.05, source="b"), (10, 0), (0, 0))
        assert a is not None and b is not None  # tentative before finalize
        assert med.poll_delivered() == []
        assert med.stats["dropped_collision"] == 2

    def test_overlap_on_other_frequency_survives(self):
        med = Medium(URBAN, _rng(6))
        med.transmit(_frame(t=0.0, source="a"), (10, 0), (0, 0))
        med.transmit(_frame(t=0.05, source="b", freq=915_400_000), (10, 0), (0, 0))
        assert len(med.poll_delivered()) == 2

    def test_overlap_on_other_dr_survives(self):
        med = Medium(URBAN, _rng(7))
        med.transmit(_frame(t=0.0, source="a", dr=3), (10, 0), (0, 0))
        med.transmit(_frame(t=0.05, source="b", dr=4), (10, 0), (0, 0))
        assert len(med.poll_delivered()) == 2

    def test_sequential_frames_do_not_collide(self):
        med = Medium(URBAN, _rng(8))
        med.transmit(_frame(t=0.0, source="a"), (10, 0), (0, 0))
        med.transmit(_frame(t=0.2, source="a"), (10, 0), (0, 0))
        assert len(med.poll_delivered()) == 2

    def test_disabled_channel_rejected_before_air(self):
        med = Medium(URBAN, _rng(9), enabled_freqs={915_200_000})
        with pytest.raises(ChannelRejected):
            med.transmit(_frame(freq=868_100_000), (10, 0), (0, 0))
        assert med.stats["offered"] == 0

    def test_source_order_preserved(self):
        med = Medium(URBAN, _rng(10))
        for i in range(100):
            med.transmit(_frame(t=i * 0.11, source="a"), (10, 0), (0, 0))
        rx = [r.rx_time for r in med.poll_delivered()]
        assert rx == sorted(rx)

    def test_poll_respects_now(self):
        med = Medium(URBAN, _rng(11))
        out = med.transmit(_frame(t=0.0), (10, 0), (0, 0))
        assert med.poll_delivered(now=out.rx_time - 1e-6) == []
        assert len(med.poll_delivered(now=out.rx_time)) == 1

    def test_always_deliver_mode(self):
        med = Medium(URBAN, _rng(12), always_deliver=True)
        for i in range(20):
            assert med.transmit(_frame(t=i * 1.0), (650, 0), (0, 0)) is not None

    def test_invalid_frames_rejected(self):
        with pytest.raises(MediumError):
            _frame(payload="ABC")
        with pytest.raises(MediumError):
            _frame(payload="XZ")
        med = Medium(URBAN, _rng(13))
        with pytest.raises(MediumError):
            med.transmit(_frame(), (float("nan"), 0), (0, 0))


class TestDeterminismAndStatistics:
    def test_bit_identical_sequences_under_fixed_seed(self):
        def run(seed):
            med = Medium(URBAN, _rng(seed))
            out = []
            for i in range(200):
                r = med.transmit(_frame(t=i * 1.0), (250, 0), (0, 0))
                out.append(None if r is None else (r.rssi, r.rx_time))
            return out

        assert run(99) == run(99)
        assert run(99) != run(100)

    @pytest.mark.parametrize(
        "distance,expect", [(100, 1.00), (200, 0.95), (350, 0.10), (700, 0.00)]
    )
    def test_empirical_fraction_within_two_points(self, distance, expect):
        med = Medium(URBAN, _rng(21))
        delivered, _, _ = med.batch_trials(distance, 10_000)
        assert abs(delivered.mean() - expect) <= 0.02

    def test_batch_trials_validates(self):
        med = Medium(URBAN, _rng(22))
        with pytest.raises(MediumError):
            med.batch_trials(100, 0)
