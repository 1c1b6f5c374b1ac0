"""Physical world fields and the virtual sensors that sample them.

Timed fire events raise gas, flame-light and temperature fields that decay
exponentially with distance; ambient levels sit mid-band in the measured
no-risk ranges.  Virtual DHT22 / flame / MQ-135 sensors add datasheet lag,
noise and the flame sensor's inverted logic, and quantize onto the 10-bit
ADC (0..1023).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

ADC_MAX = 1023

AMBIENT_GAS_PPM = 15.0
AMBIENT_FLAME = 780.0
AMBIENT_TEMP_C = 28.0

# Full-intensity decay profiles.  Gas: 1300 ppm amplitude with a 3.915 m
# length keeps >=600 ppm out to 3 m and >=100 ppm out past 7 m (smoke is
# the farthest-reaching signal in the field data) while falling below the
# alert band by 15 m.  Heat and flame light are short-range by comparison.
GAS_AMPLITUDE_PPM = 1300.0
GAS_DECAY_M = 3.915
TEMP_AMPLITUDE_C = 70.0
TEMP_DECAY_M = 1.5
FLAME_AMPLITUDE = 900.0
FLAME_DECAY_M = 1.0

#: Top of the flame-wavelength proxy scale (reported on 760..1100).
FLAME_SCALE_MAX = 1100.0

DHT22_RANGE_C = (-40.0, 80.0)
DHT22_SIGMA_C = 0.5
DHT22_TAU_S = 2.0
DHT22_MIN_INTERVAL_S = 2.0

MQ135_RANGE_PPM = 1000.0
MQ135_SIGMA_COUNTS = 5.0
FLAME_SIGMA_COUNTS = 5.0

#: Flame proxy at or above this drives the digital output low (alert).
FLAME_DIGITAL_THRESHOLD = 900.0


@dataclass
class FireEvent:
    """A fire at a fixed position, zero-effect before ``start`` and after
    extinguishing (``active`` False)."""

    x: float
    y: float
    start: float
    intensity: float
    active: bool = True
    fire_id: int = 0

    def __post_init__(self):
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError(f"intensity must lie in [0,1], got {self.intensity!r}")


@dataclass(frozen=True)
class FieldSample:
    gas_ppm: float
    flame: float
    temp_c: float


@dataclass(frozen=True)
class AdcReading:
    gas_raw: int
    fire_raw: int
    temp_c: int


def field_at(fires, pos, t: float) -> FieldSample:
    """Evaluate the three fields at ``pos`` and time ``t``.

    Contributions from distinct fires add linearly above ambient; the
    flame proxy is capped at the top of its reporting scale.
    """
    gas = AMBIENT_GAS_PPM
    flame = AMBIENT_FLAME
    temp = AMBIENT_TEMP_C
    for fire in fires:
        if not fire.active or t < fire.start:
            continue
        d = math.hypot(pos[0] - fire.x, pos[1] - fire.y)
        gas += fire.intensity * GAS_AMPLITUDE_PPM * math.exp(-d / GAS_DECAY_M)
        flame += fire.intensity * FLAME_AMPLITUDE * math.exp(-d / FLAME_DECAY_M)
        temp += fire.intensity * TEMP_AMPLITUDE_C * math.exp(-d / TEMP_DECAY_M)
    return FieldSample(gas_ppm=max(0.0, gas), flame=min(FLAME_SCALE_MAX, flame), temp_c=temp)


def _clamp(v, lo, hi):
    return max(lo, min(hi, v))


class Dht22:
    """Temperature sensor: first-order lag (tau 2 s), 0.5 C noise, clamped
    to the -40..80 C range.  Re-sampling faster than the 2 s response time
    repeats the previous reading."""

    def __init__(self, rng: np.random.Generator, noise_free: bool = False):
        self.rng = rng
        self.noise_free = noise_free
        self._value: float | None = None
        self._t: float | None = None

    def sample(self, field_temp_c: float, t: float) -> float:
        if self._value is None:
            self._value = field_temp_c  # boot assumed converged to ambient
            self._t = t
        elif t - self._t < DHT22_MIN_INTERVAL_S:
            return self._reading()
        else:
            dt = t - self._t
            self._value += (field_temp_c - self._value) * (1.0 - math.exp(-dt / DHT22_TAU_S))
            self._t = t
        return self._reading()

    def _reading(self) -> float:
        noise = 0.0 if self.noise_free else DHT22_SIGMA_C * float(self.rng.standard_normal())
        return _clamp(self._value + noise, *DHT22_RANGE_C)


class FlameSensor:
    """760-1100 nm flame sensor with inverted logic: stronger flame means a
    LOWER analog raw and a LOW digital output.  A damaged sensor's
    resistance runs away, pinning the raw near full scale."""

    def __init__(self, rng: np.random.Generator, noise_free: bool = False, damaged: bool = False):
        self.rng = rng
        self.noise_free = noise_free
        self.damaged = damaged

    def sample(self, field_flame: float) -> tuple[int, int]:
        if self.damaged:
            return ADC_MAX, 1
        scaled = _clamp(field_flame, 0.0, FLAME_SCALE_MAX) * ADC_MAX / FLAME_SCALE_MAX
        raw = ADC_MAX - scaled
        if not self.noise_free:
            raw += FLAME_SIGMA_COUNTS * float(self.rng.standard_normal())
        digital = 0 if field_flame >= FLAME_DIGITAL_THRESHOLD else 1
        return int(_clamp(round(raw), 0, ADC_MAX)), digital


class Mq135:
    """Gas sensor, linear in ppm over its 10-1000 ppm span; the
    potentiometer gain scales the slope."""

    def __init__(self, rng: np.random.Generator, gain: float = 1.0, noise_free: bool = False):
        if gain <= 0:
            raise ValueError(f"sensitivity gain must be positive, got {gain!r}")
        self.rng = rng
        self.gain = gain
        self.noise_free = noise_free

    def sample(self, field_gas_ppm: float) -> int:
        base = _clamp(field_gas_ppm * self.gain * ADC_MAX / MQ135_RANGE_PPM, 0.0, ADC_MAX)
        if not self.noise_free:
            base += MQ135_SIGMA_COUNTS * float(self.rng.standard_normal())
        return int(_clamp(round(base), 0, ADC_MAX))

    def to_ppm(self, raw: int) -> float:
        """Invert the nominal transfer curve (noise not recoverable)."""
        return raw * MQ135_RANGE_PPM / (ADC_MAX * self.gain)


def flame_raw_to_proxy(raw: int) -> float:
    """Undo the inverted analog mapping back to the wavelength proxy."""
    return (ADC_MAX - raw) * FLAME_SCALE_MAX / ADC_MAX


def gas_raw_to_ppm(raw: int, gain: float = 1.0) -> float:
    return raw * MQ135_RANGE_PPM / (ADC_MAX * gain)
