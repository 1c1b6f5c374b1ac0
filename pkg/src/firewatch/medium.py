"""Measurement-calibrated radio medium between nodes and the gateway.

No path-loss law is fitted: the field-measured range table (delivery
fraction, median RSSI, median uplink latency per distance) *is* the
propagation model, interpolated piecewise-linearly.  The medium carries
frames with seeded randomness (delivery draw, RSSI noise, latency jitter),
destroys same-channel same-DR overlaps, and hands finalized deliveries out
in rx-time order.

Latencies are treated as end-to-end node-to-server times, matching how the
range measurements were taken; downstream stages add no further delay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels

#: Spread applied around the calibrated median RSSI (dB).
RSSI_NOISE_SIGMA_DB = 2.0

#: Uplink latency jitter: uniform multiplicative band around the median.
LATENCY_JITTER_FRAC = 0.10


class MediumError(ValueError):
    """Invalid frame or parameter handed to the medium."""


class ChannelRejected(MediumError):
    """Frame offered on a frequency the gateway does not listen on."""


@dataclass(frozen=True)
class CalibrationPoint:
    """One measured range-test row: distance, delivery fraction and the
    median RSSI / uplink latency (None where nothing was received)."""

    distance_m: float
    delivery: float
    rssi_dbm: float | None
    latency_s: float | None


#: Field measurements behind the urban model.  The 300-400 m band is
#: carried at its 350 m midpoint.
URBAN_CALIBRATION = (
    CalibrationPoint(100.0, 1.00, -112.0, 0.0515),
    CalibrationPoint(200.0, 0.95, -112.0, 0.1029),
    CalibrationPoint(350.0, 0.10, -115.0, 0.1853),
    CalibrationPoint(700.0, 0.00, None, None),
)


@dataclass(frozen=True)
class LinkEnvironment:
    kind: str
    calibration: tuple[CalibrationPoint, ...]

    def __post_init__(self):
        pts = self.calibration
        if len(pts) < 2:
            raise MediumError("calibration needs at least two points")
        dists = [p.distance_m for p in pts]
        if any(b <= a for a, b in zip(dists, dists[1:])):
            raise MediumError("calibration distances must be strictly increasing")
        fracs = [p.delivery for p in pts]
        if any(not 0.0 <= f <= 1.0 for f in fracs):
            raise MediumError("delivery fractions must lie in [0,1]")
        if any(b > a for a, b in zip(fracs, fracs[1:])):
            raise MediumError("delivery fractions must be non-increasing with distance")


def urban_environment() -> LinkEnvironment:
    return LinkEnvironment("urban", URBAN_CALIBRATION)


def forest_environment() -> LinkEnvironment:
    """Forest model: the urban table with every distance halved.

    The field campaign only reports that forested paths fared worse,
    without numbers, so this scaling is uncalibrated by construction.
    """
    pts = tuple(
        CalibrationPoint(p.distance_m * 0.5, p.delivery, p.rssi_dbm, p.latency_s)
        for p in URBAN_CALIBRATION
    )
    return LinkEnvironment("forest", pts)


def environment(kind: str) -> LinkEnvironment:
    if kind == "urban":
        return urban_environment()
    if kind == "forest":
        return forest_environment()
    raise MediumError(f"unknown environment kind {kind!r}")


@lru_cache(maxsize=16)
def _tables(env: LinkEnvironment):
    """Interpolation tables (delivery, rssi, latency) as float arrays."""
    del_x = np.array([p.distance_m for p in env.calibration])
    del_p = np.array([p.delivery for p in env.calibration])
    measured = [p for p in env.calibration if p.rssi_dbm is not None and p.latency_s is not None]
    rssi_x = np.array([p.distance_m for p in measured])
    rssi_m = np.array([p.rssi_dbm for p in measured])
    lat_x = np.array([p.distance_m for p in measured])
    lat_m = np.array([p.latency_s for p in measured])
    return del_x, del_p, rssi_x, rssi_m, lat_x, lat_m


def delivery_probability(distance: float, env: LinkEnvironment) -> float:
    """Delivery fraction at ``distance``: monotone piecewise-linear through
    the calibration points, clamped to 1 below the first and to the last
    value (0 for a table ending at zero) beyond the last."""
    if not (math.isfinite(distance) and distance >= 0):
        raise MediumError(f"distance must be finite and >= 0, got {distance!r}")
    del_x, del_p, *_ = _tables(env)
    return float(kernels.interp_scalar(distance, del_x, del_p))


def rssi_median(distance: float, env: LinkEnvironment) -> float:
    *_, rssi_x, rssi_m, _, _ = _tables(env)
    return float(kernels.interp_scalar(distance, rssi_x, rssi_m))


def latency_median(distance: float, env: LinkEnvironment) -> float:
    *_, lat_x, lat_m = _tables(env)
    return float(kernels.interp_scalar(distance, lat_x, lat_m))


def rssi_at(distance: float, env: LinkEnvironment, rng: np.random.Generator) -> float:
    """Median RSSI at ``distance`` plus Gaussian noise (flat extrapolation
    beyond the measured span)."""
    return rssi_median(distance, env) + RSSI_NOISE_SIGMA_DB * float(rng.standard_normal())


def uplink_latency(distance: float, env: LinkEnvironment, rng: np.random.Generator) -> float:
    """Median uplink latency at ``distance`` with +-10% uniform jitter."""
    jitter = float(rng.uniform(1.0 - LATENCY_JITTER_FRAC, 1.0 + LATENCY_JITTER_FRAC))
    return latency_median(distance, env) * jitter


@dataclass(frozen=True)
class RadioFrame:
    """One over-the-air transmission."""

    payload_hex: str
    freq_hz: int
    dr_index: int
    tx_start: float
    tx_airtime: float
    source: str

    def __post_init__(self):
        if len(self.payload_hex) % 2 != 0:
            raise MediumError("payload_hex must have an even number of hex digits")
        try:
            bytes.fromhex(self.payload_hex)
        except ValueError:
            raise MediumError(f"payload_hex is not valid hex: {self.payload_hex!r}") from None
        if self.tx_airtime <= 0:
            raise MediumError("tx_airtime must be positive")

    @property
    def tx_end(self) -> float:
        return self.tx_start + self.tx_airtime


@dataclass(frozen=True)
class ReceivedFrame:
    frame: RadioFrame
    rssi: float
    rx_time: float


@dataclass
class _Flight:
    frame: RadioFrame
    received: ReceivedFrame | None  # None when the delivery draw failed
    collided: bool = False
    polled: bool = False


def _distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


class Medium:
    """Single logical event queue all transmissions serialize through.

    ``transmit`` must be called in tx-start order (the simulation engine
    guarantees this); collision state for a frame is final once sim-time
    passes its rx_time, so ``poll_delivered(now)`` only releases frames
    whose fate is settled.
    """

    def __init__(
        self,
        env: LinkEnvironment,
        rng: np.random.Generator,
        enabled_freqs: set[int] | None = None,
        always_deliver: bool = False,
    ):
        self.env = env
        self.rng = rng
        self.enabled_freqs = enabled_freqs
        self.always_deliver = always_deliver
        self._flights: list[_Flight] = []
        self._last_rx: dict[str, float] = {}
        self.stats = {
            "offered": 0,
            "delivered": 0,
            "dropped_range": 0,
            "dropped_collision": 0,
            "rejected_channel": 0,
        }

    def transmit(self, frame: RadioFrame, node_pos, gw_pos) -> ReceivedFrame | None:
        """Put ``frame`` on the air; returns the tentative reception.

        The tentative result still dies if a later frame overlaps it on the
        same frequency and data rate — both parties of an overlap are lost.
        ``poll_delivered`` yields only survivors.
        """
        for v in (*node_pos, *gw_pos):
            if not math.isfinite(v):
                raise MediumError("positions must be finite")
        if self.enabled_freqs is not None and frame.freq_hz not in self.enabled_freqs:
            self.stats["rejected_channel"] += 1
            raise ChannelRejected(f"frequency {frame.freq_hz} Hz is not an enabled channel")

        self.stats["offered"] += 1
        dist = _distance(node_pos, gw_pos)
        p = 1.0 if self.always_deliver else delivery_probability(dist, self.env)

        received = None
        if self.rng.random() < p:
            rssi = min(0.0, rssi_at(dist, self.env, self.rng))
            rx_time = frame.tx_end + uplink_latency(dist, self.env, self.rng)
            # Links are FIFO per source: a frame never overtakes its
            # predecessor on the jitter draw alone.
            floor = self._last_rx.get(frame.source)
            if floor is not None and rx_time <= floor:
                rx_time = floor + 1e-9
            self._last_rx[frame.source] = rx_time
            received = ReceivedFrame(frame=frame, rssi=rssi, rx_time=rx_time)
        else:
            self.stats["dropped_range"] += 1

        flight = _Flight(frame=frame, received=received)
        self._collide(flight)
        self._flights.append(flight)
        return received

    def _collide(self, flight: _Flight) -> None:
        f = flight.frame
        for other in self._flights:
            o = other.frame
            if o.freq_hz != f.freq_hz or o.dr_index != f.dr_index:
                continue
            if f.tx_start < o.tx_end and o.tx_start < f.tx_end:
                if not other.collided:
                    other.collided = True
                    self.stats["dropped_collision"] += 1
                if not flight.collided:
                    flight.collided = True
                    self.stats["dropped_collision"] += 1

    def pending_rx_times(self) -> list[float]:
        """rx times of tentative deliveries not yet released."""
        return [
            fl.received.rx_time
            for fl in self._flights
            if fl.received is not None and not fl.polled
        ]

    def poll_delivered(self, now: float | None = None) -> list[ReceivedFrame]:
        """Finalized deliveries with rx_time <= now, ordered by
        (rx_time, source).  ``now=None`` drains everything."""
        due, keep = [], []
        for fl in self._flights:
            settled = now is None or (
                fl.frame.tx_end <= now and (fl.received is None or fl.received.rx_time <= now)
            )
            if not settled:
                keep.append(fl)
                continue
            if fl.received is not None and not fl.collided and not fl.polled:
                fl.polled = True
                due.append(fl.received)
                self.stats["delivered"] += 1
        self._flights = keep
        return sorted(due, key=lambda r: (r.rx_time, r.frame.source))

    def batch_trials(self, distance: float, trials: int):
        """Vectorized link trials for range testing.

        Returns (delivered mask, rssi array, latency array); statistics
        match the per-frame path, drawn from this medium's generator.
        """
        if trials < 1:
            raise MediumError("trials must be >= 1")
        del_x, del_p, rssi_x, rssi_m, lat_x, lat_m = _tables(self.env)
        d = np.full(trials, float(distance))
        u = self.rng.random(trials)
        z = self.rng.standard_normal(trials)
        j = self.rng.uniform(1.0 - LATENCY_JITTER_FRAC, 1.0 + LATENCY_JITTER_FRAC, trials)
        return kernels.trial_outcomes(
            d, del_x, del_p, rssi_x, rssi_m, lat_x, lat_m, u, z, j, RSSI_NOISE_SIGMA_DB
        )
