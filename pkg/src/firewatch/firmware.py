"""Node firmware: sampling loop, risk classification and payload codec.

Classification happens in physical units (the flame channel is
un-inverted first) against banded thresholds keyed on the band floors:
value < alert_floor is NoRisk, alert_floor <= value < risk_floor is Alert,
value >= risk_floor is Risk.  The 6-byte payload is three big-endian
16-bit fields in gas, fire, temperature order, temperature signed.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

from . import sensors
from .sensors import AdcReading, Dht22, FlameSensor, Mq135, field_at


class RiskLevel(enum.IntEnum):
    NoRisk = 0
    Alert = 1
    Risk = 2


@dataclass(frozen=True)
class Band:
    alert_floor: float
    risk_floor: float

    def __post_init__(self):
        if not self.alert_floor < self.risk_floor:
            raise ValueError(
                f"alert floor must be below risk floor, got {self.alert_floor}/{self.risk_floor}"
            )


@dataclass(frozen=True)
class RiskThresholds:
    """Per-sensor (alert_floor, risk_floor) pairs in physical units."""

    gas: Band = Band(100.0, 600.0)  # ppm
    flame: Band = Band(900.0, 1100.0)  # wavelength proxy
    temp: Band = Band(30.0, 60.0)  # deg C


def classify(value: float, band: Band) -> RiskLevel:
    if value >= band.risk_floor:
        return RiskLevel.Risk
    if value >= band.alert_floor:
        return RiskLevel.Alert
    return RiskLevel.NoRisk


def combined_level(levels) -> RiskLevel:
    return max(levels, default=RiskLevel.NoRisk)


class PayloadError(ValueError):
    """Payload field out of range or wrong wire size."""


PAYLOAD_LEN = 6


def encode_payload(gas_raw: int, fire_raw: int, temp_c: int) -> bytes:
    """Pack (gas_raw, fire_raw, temp_c) as big-endian u16, u16, i16."""
    if not 0 <= gas_raw <= sensors.ADC_MAX:
        raise PayloadError(f"gas_raw out of ADC range: {gas_raw!r}")
    if not 0 <= fire_raw <= sensors.ADC_MAX:
        raise PayloadError(f"fire_raw out of ADC range: {fire_raw!r}")
    if not -40 <= temp_c <= 80:
        raise PayloadError(f"temp_c out of sensor range: {temp_c!r}")
    return struct.pack(">HHh", gas_raw, fire_raw, temp_c)


def decode_payload(data: bytes) -> tuple[int, int, int]:
    """Inverse of :func:`encode_payload`.

    u16 fields are read as (hi << 8) | lo.  The platform decoder shown in
    the source material shifts by 4, which cannot invert a highByte/lowByte
    split; tests pin that discrepancy.
    """
    if len(data) != PAYLOAD_LEN:
        raise PayloadError(f"payload must be exactly {PAYLOAD_LEN} bytes, got {len(data)}")
    gas_raw, fire_raw, temp_c = struct.unpack(">HHh", data)
    return gas_raw, fire_raw, temp_c


def risk_from_decoded(
    gas_raw: int,
    fire_raw: int,
    temp_c: int,
    thresholds: RiskThresholds | None = None,
    gas_gain: float = 1.0,
) -> dict:
    """Risk levels for a decoded payload, assuming nominal sensor curves.

    Used server-side for display, where only the raw ADC values are known.
    """
    th = thresholds or RiskThresholds()
    gas = classify(sensors.gas_raw_to_ppm(gas_raw, gas_gain), th.gas)
    flame = classify(sensors.flame_raw_to_proxy(fire_raw), th.flame)
    temp = classify(float(temp_c), th.temp)
    return {
        "gas": gas.name,
        "fire": flame.name,
        "temp": temp.name,
        "combined": combined_level([gas, flame, temp]).name,
    }


DEFAULT_SAMPLE_PERIOD_S = 5.0
DEFAULT_HEARTBEAT_PERIOD_S = 60.0


@dataclass
class TickResult:
    levels: dict
    combined: RiskLevel
    reading: AdcReading
    sent: bool
    payload_hex: str | None
    reason: str | None  # "level-change" | "elevated" | "heartbeat"
    log: list = field(default_factory=list)


class SensorNode:
    """Periodic sampler driving a modem with AT command strings.

    ``modem`` needs one method, ``exec_line(line, t) -> reply`` where the
    reply exposes ``.lines``; the node only checks for ERROR in them.
    Sends happen when any per-sensor level changes, every tick while the
    combined level is at least Alert, and as heartbeats otherwise.
    """

    def __init__(
        self,
        dev_id: str,
        position,
        modem,
        rng: np.random.Generator,
        thresholds: RiskThresholds | None = None,
        sample_period: float = DEFAULT_SAMPLE_PERIOD_S,
        heartbeat_period: float = DEFAULT_HEARTBEAT_PERIOD_S,
        mq_gain: float = 1.0,
        noise_free: bool = False,
        boot_time: float = 0.0,
    ):
        self.dev_id = dev_id
        self.position = tuple(position)
        self.modem = modem
        self.thresholds = thresholds or RiskThresholds()
        self.sample_period = sample_period
        self.heartbeat_period = heartbeat_period
        self.dht = Dht22(rng, noise_free=noise_free)
        self.flame = FlameSensor(rng, noise_free=noise_free)
        self.mq = Mq135(rng, gain=mq_gain, noise_free=noise_free)
        self._prev = {
            "gas": RiskLevel.NoRisk,
            "fire": RiskLevel.NoRisk,
            "temp": RiskLevel.NoRisk,
        }
        self._last_send = boot_time
        self.log: list[str] = []

    def sample(self, fires, t: float) -> tuple[AdcReading, dict]:
        f = field_at(fires, self.position, t)
        gas_raw = self.mq.sample(f.gas_ppm)
        fire_raw, _digital = self.flame.sample(f.flame)
        temp_reading = self.dht.sample(f.temp_c, t)
        reading = AdcReading(gas_raw=gas_raw, fire_raw=fire_raw, temp_c=int(temp_reading))
        levels = {
            "gas": classify(sensors.gas_raw_to_ppm(gas_raw, self.mq.gain), self.thresholds.gas),
            "fire": classify(sensors.flame_raw_to_proxy(fire_raw), self.thresholds.flame),
            "temp": classify(temp_reading, self.thresholds.temp),
        }
        return reading, levels

    def tick(self, fires, t: float) -> TickResult:
        log_mark = len(self.log)
        reading, levels = self.sample(fires, t)
        comb = combined_level(levels.values())
        changed = levels != self._prev
        reason = None
        if changed:
            reason = "level-change"
        elif comb >= RiskLevel.Alert:
            reason = "elevated"
        elif t - self._last_send >= self.heartbeat_period:
            reason = "heartbeat"
        self._prev = levels

        payload_hex = None
        sent = False
        if reason is not None:
            payload_hex = encode_payload(reading.gas_raw, reading.fire_raw, reading.temp_c).hex().upper()
            reply = self.modem.exec_line(f"AT+MSGHEX={payload_hex}", t)
            errors = [ln for ln in reply.lines if "ERROR" in ln]
            if errors:
                self.log.append(f"t={t:.3f} uplink failed: {errors[0]}")
            else:
                sent = True
                self._last_send = t
        return TickResult(
            levels={k: v.name for k, v in levels.items()},
            combined=comb,
            reading=reading,
            sent=sent,
            payload_hex=payload_hex,
            reason=reason if sent else None,
            log=self.log[log_mark:],
        )
