"""LoRa modulation math: symbol, chip and bit rates plus airtime estimates.

The chirp-spread-spectrum relations used here: a symbol spans 2**sf chips,
the chip rate equals the bandwidth (one chip per second per hertz), and
forward error correction scales the useful bit rate by 4/(4+cr).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Bandwidths the RHF76-052 radio supports in LoRa mode (Hz).
LORA_BANDWIDTHS_HZ = (62_500, 125_000, 250_000, 500_000)

SPREADING_FACTORS = (7, 8, 9, 10, 11, 12)

#: Preamble length charged to every frame: 8 programmed symbols plus the
#: 4.25-symbol sync word.  This is an approximation — no header/CRC or
#: low-data-rate-optimisation terms are added.
PREAMBLE_SYMBOLS = 12.25


class ParameterError(ValueError):
    """Invalid modulation parameter or data-rate lookup."""


@dataclass(frozen=True)
class ModulationParams:
    """One LoRa modulation configuration.

    ``cr`` is the coding-rate index (0..4); the code rate is 4/(4+cr),
    so cr=1 means 4/5.  ``bw`` is in Hz.  Non-catalog bandwidths are
    accepted (useful for degenerate test setups); the standard set is
    :data:`LORA_BANDWIDTHS_HZ`.
    """

    sf: int
    bw: float
    cr: int = 0

    def __post_init__(self):
        if not isinstance(self.sf, int) or isinstance(self.sf, bool):
            raise ParameterError(f"sf must be an integer, got {self.sf!r}")
        if not 7 <= self.sf <= 12:
            raise ParameterError(f"sf out of range 7..12: {self.sf}")
        if not (isinstance(self.bw, (int, float)) and math.isfinite(self.bw) and self.bw > 0):
            raise ParameterError(f"bw must be a positive finite frequency, got {self.bw!r}")
        if not isinstance(self.cr, int) or isinstance(self.cr, bool) or not 0 <= self.cr <= 4:
            raise ParameterError(f"cr index out of range 0..4: {self.cr!r}")


def symbol_period(p: ModulationParams) -> float:
    """Symbol period in seconds: 2**sf / bw."""
    return (2 ** p.sf) / p.bw


def symbol_rate(p: ModulationParams) -> float:
    """Symbol rate in symbols/second: bw / 2**sf."""
    return p.bw / (2 ** p.sf)


def chip_rate(p: ModulationParams) -> float:
    """Chip rate in chips/second: symbol_rate * 2**sf, which equals bw.

    Both the division and multiplication are by a power of two, so the
    identity ``chip_rate(p) == p.bw`` holds exactly in floating point.
    """
    return symbol_rate(p) * (2 ** p.sf)


def bit_rate(p: ModulationParams) -> float:
    """Nominal bit rate in bits/second: sf * (4/(4+cr)) * bw / 2**sf.

    With cr=0 this reduces to the uncoded rate sf * bw / 2**sf.
    """
    return p.sf * (4.0 / (4.0 + p.cr)) * p.bw / (2 ** p.sf)


def airtime(payload_len: int, p: ModulationParams) -> float:
    """Approximate time on air in seconds for ``payload_len`` bytes.

    8*payload_len / bit_rate plus a fixed :data:`PREAMBLE_SYMBOLS` worth
    of preamble.  Strictly increasing in payload length.
    """
    if not isinstance(payload_len, int) or isinstance(payload_len, bool) or payload_len < 0:
        raise ParameterError(f"payload_len must be a non-negative integer, got {payload_len!r}")
    return (8.0 * payload_len) / bit_rate(p) + PREAMBLE_SYMBOLS * symbol_period(p)


@dataclass(frozen=True)
class DataRateEntry:
    dr_index: int
    sf: int
    bw: int
    direction: str  # "uplink" or "downlink"

    def params(self, cr: int = 1) -> ModulationParams:
        return ModulationParams(sf=self.sf, bw=self.bw, cr=cr)


# AU915 indices used by the firmware (DR2..DR5 channel ranges, RXWIN2 on
# DR8).  Dindex 7 is unassigned in this table.
AU915_DATA_RATES = {
    0: DataRateEntry(0, 12, 125_000, "uplink"),
    1: DataRateEntry(1, 11, 125_000, "uplink"),
    2: DataRateEntry(2, 10, 125_000, "uplink"),
    3: DataRateEntry(3, 9, 125_000, "uplink"),
    4: DataRateEntry(4, 8, 125_000, "uplink"),
    5: DataRateEntry(5, 7, 125_000, "uplink"),
    6: DataRateEntry(6, 8, 500_000, "uplink"),
    8: DataRateEntry(8, 12, 500_000, "downlink"),
}

_REGION_TABLES = {"AU915": AU915_DATA_RATES}


def dr_lookup(region: str, dr_index: int) -> DataRateEntry:
    """Return the data-rate entry for ``dr_index`` in ``region``."""
    try:
        table = _REGION_TABLES[region]
    except KeyError:
        raise ParameterError(f"unknown region {region!r}") from None
    try:
        return table[dr_index]
    except (KeyError, TypeError):
        raise ParameterError(f"unknown data rate DR{dr_index!r} for {region}") from None
