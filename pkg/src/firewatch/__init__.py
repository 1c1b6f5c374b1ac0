"""Deterministic emulation of a LoRaWAN forest-fire-detection network.

Virtual sensor nodes drive an AT-command LoRa modem over a
measurement-calibrated radio medium; a gateway forwards uplinks to a
TTN-like network server with a query API and live push, and a CLI runs
seeded scenarios, range tests and calibration sweeps.
"""

__version__ = "0.1.0"

from .firmware import RiskLevel, classify, decode_payload, encode_payload
from .phy import ModulationParams, airtime, bit_rate, chip_rate, symbol_period, symbol_rate

__all__ = [
    "ModulationParams",
    "RiskLevel",
    "airtime",
    "bit_rate",
    "chip_rate",
    "classify",
    "decode_payload",
    "encode_payload",
    "symbol_period",
    "symbol_rate",
]
