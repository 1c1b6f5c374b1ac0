"""Packet forwarder between the radio medium and the network server.

Uplinks are wrapped with gateway metadata and shipped over the backhaul as
one JSON object per line with the fields
``{gw_id, dev_payload_hex, freq_hz, dr, rssi_dbm, gw_time_s}`` — the field
names are part of the wire contract.  The backhaul is a reliable
in-process channel with an on/off fault switch; while it is down, up to
``queue_limit`` messages buffer FIFO and the oldest are dropped beyond
that.

Downlinks go out under one of three TX modes: at a requested timestamp,
immediately after the TX start delay, or a fixed 1.5 ms after a trigger
confirmation.

The concentrator hardware's receive sensitivity floor (-142 dBm at
300 bps) is noted here for reference but not simulated: reception odds
come entirely from the medium's calibrated range table.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass

from .medium import ReceivedFrame

#: Lead between trigger confirmation and emission (s).
TRIGGER_LEAD_S = 0.0015

#: Lead the radio needs before a timestamped emission; it has no
#: observable effect in sim-time and is only logged.
TIMESTAMP_PREP_LEAD_S = 0.0015

DEFAULT_QUEUE_LIMIT = 1024


class DownlinkError(ValueError):
    """Downlink request cannot be scheduled (e.g. timestamp in the past)."""


@dataclass(frozen=True)
class UplinkMessage:
    gw_id: str
    dev_payload_hex: str
    freq_hz: int
    dr: int
    rssi_dbm: float
    gw_time_s: float

    def to_line(self) -> str:
        return json.dumps(
            {
                "gw_id": self.gw_id,
                "dev_payload_hex": self.dev_payload_hex,
                "freq_hz": self.freq_hz,
                "dr": self.dr,
                "rssi_dbm": self.rssi_dbm,
                "gw_time_s": self.gw_time_s,
            },
            sort_keys=True,
            separators=(",", ":"),
        )

    @classmethod
    def from_line(cls, line: str) -> "UplinkMessage":
        obj = json.loads(line)
        msg = cls(
            gw_id=str(obj["gw_id"]),
            dev_payload_hex=str(obj["dev_payload_hex"]),
            freq_hz=int(obj["freq_hz"]),
            dr=int(obj["dr"]),
            rssi_dbm=float(obj["rssi_dbm"]),
            gw_time_s=float(obj["gw_time_s"]),
        )
        if not (math.isfinite(msg.rssi_dbm) and math.isfinite(msg.gw_time_s)):
            raise ValueError("non-finite metadata")
        return msg


@dataclass(frozen=True)
class TxMode:
    mode: str  # "timestamp" | "immediate" | "triggered"
    tx_start_delay: float = 0.0

    def __post_init__(self):
        if self.mode not in ("timestamp", "immediate", "triggered"):
            raise DownlinkError(f"unknown TX mode {self.mode!r}")
        if self.tx_start_delay < 0:
            raise DownlinkError("tx_start_delay must be >= 0")


@dataclass(frozen=True)
class DownlinkPacket:
    target: str  # node id
    payload_hex: str
    freq_hz: int
    dr: int
    at_time: float | None = None  # timestamp mode target
    trigger_time: float | None = None  # triggered mode confirmation time


class Gateway:
    """Sequential event handler: radio ingest and downlink scheduling
    interleave in sim-time order."""

    def __init__(
        self,
        gw_id: str,
        position,
        send_line=None,
        emit_downlink=None,
        queue_limit: int = DEFAULT_QUEUE_LIMIT,
    ):
        self.gw_id = gw_id
        self.position = tuple(position)
        self.send_line = send_line  # backhaul: callable(line: str)
        self.emit_downlink = emit_downlink  # callable(packet, emission_time)
        self.queue_limit = queue_limit
        self.backhaul_up = True
        self.buffer: deque[str] = deque()
        self.stats = {"forwarded": 0, "buffered": 0, "buffer_drops": 0, "downlinks": 0}
        self.log: list[str] = []

    def on_receive(self, rx: ReceivedFrame) -> UplinkMessage:
        """Wrap one received frame and forward (or buffer) it."""
        msg = UplinkMessage(
            gw_id=self.gw_id,
            dev_payload_hex=rx.frame.payload_hex,
            freq_hz=rx.frame.freq_hz,
            dr=rx.frame.dr_index,
            rssi_dbm=rx.rssi,
            gw_time_s=rx.rx_time,
        )
        self._ship(msg.to_line())
        return msg

    def _ship(self, line: str) -> None:
        if self.backhaul_up and self.send_line is not None:
            self.send_line(line)
            self.stats["forwarded"] += 1
            return
        if len(self.buffer) >= self.queue_limit:
            self.buffer.popleft()
            self.stats["buffer_drops"] += 1
        self.buffer.append(line)
        self.stats["buffered"] += 1

    def set_backhaul(self, up: bool) -> None:
        self.backhaul_up = up
        if up and self.send_line is not None:
            while self.buffer:
                self.send_line(self.buffer.popleft())
                self.stats["forwarded"] += 1

    def schedule_downlink(self, pkt: DownlinkPacket, mode: TxMode, now: float) -> float:
        """Return the air emission time for ``pkt`` and hand it to the
        radio-side emitter."""
        if mode.mode == "timestamp":
            if pkt.at_time is None:
                raise DownlinkError("timestamp mode needs at_time")
            if pkt.at_time < now:
                raise DownlinkError(f"too late: timestamp {pkt.at_time} is in the past")
            emission = pkt.at_time
            self.log.append(
                f"t={now:.4f} modem prep at {emission - TIMESTAMP_PREP_LEAD_S:.4f} for carimbo {emission:.4f}"
            )
        elif mode.mode == "immediate":
            emission = now + mode.tx_start_delay
        else:  # triggered
            trigger = pkt.trigger_time if pkt.trigger_time is not None else now
            if trigger < now:
                raise DownlinkError("trigger confirmation is in the past")
            emission = trigger + TRIGGER_LEAD_S
        self.stats["downlinks"] += 1
        if self.emit_downlink is not None:
            self.emit_downlink(pkt, emission)
        return emission
