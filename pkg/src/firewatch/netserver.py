"""TTN-like network/application server.

Registers applications and devices, resolves ABP sessions and OTAA-lite
joins, deduplicates uplinks on the per-device frame counter (16-frame
reordering window), decodes payloads through named built-in decoders,
persists records to an append-only JSONL log and fans each stored record
out, exactly once and in ingest order, to live subscribers.

Ingest is total: malformed backhaul lines, unknown devices and key
mismatches are counted and dropped, never raised.
"""

from __future__ import annotations

import json
import re
import threading
from collections import deque
from dataclasses import dataclass, field as dc_field
from pathlib import Path

from . import firmware, frames
from .gateway import DownlinkPacket, TxMode, UplinkMessage
from .modem import DEFAULT_RX1_DELAY_S

DEDUP_WINDOW = 16
SUBSCRIBER_BUFFER = 256

DEFAULT_PORT = 3000


class RegistrationError(ValueError):
    pass


class ConflictError(RegistrationError):
    pass


class AuthError(PermissionError):
    pass


class NotFoundError(KeyError):
    pass


def _check_hex(value: str, width: int, what: str) -> str:
    v = (value or "").strip().upper()
    if len(v) != width or not re.fullmatch(r"[0-9A-F]+", v):
        raise RegistrationError(f"{what} must be {width} hex digits, got {value!r}")
    return v


def _decode_u16be_triple(payload: bytes) -> dict:
    gas, fire, temp = firmware.decode_payload(payload)
    return {"payload_gas": gas, "payload_fire": fire, "payload_temp": temp}


def _decode_raw_hex(payload: bytes) -> dict:
    return {}


DECODERS = {
    "u16be-triple": _decode_u16be_triple,
    "raw-hex": _decode_raw_hex,
}


@dataclass(frozen=True)
class Application:
    app_id: str
    app_eui: str
    access_key: str
    decoder: str = "u16be-triple"


@dataclass(frozen=True)
class AbpActivation:
    dev_addr: str
    nwkskey: str
    appskey: str


@dataclass(frozen=True)
class OtaaActivation:
    dev_eui: str
    appkey: str


@dataclass
class DeviceRegistration:
    dev_id: str
    app_id: str
    activation: AbpActivation | OtaaActivation
    position: tuple[float, float] = (0.0, 0.0)
    last_fcnt: int = -1
    recent_fcnts: deque = dc_field(default_factory=lambda: deque(maxlen=DEDUP_WINDOW))
    session_addr: str | None = None  # OTAA-assigned address
    session_check: str | None = None


@dataclass(frozen=True)
class UplinkRecord:
    dev_id: str
    fcnt: int
    port: int
    payload_hex: str
    decoded: dict | None
    risk: dict | None
    rssi: float
    freq: int
    dr: int
    server_time: float
    gw_id: str
    decode_error: bool = False

    def to_obj(self) -> dict:
        return {
            "dev_id": self.dev_id,
            "fcnt": self.fcnt,
            "port": self.port,
            "payload_hex": self.payload_hex,
            "decoded": self.decoded,
            "risk": self.risk,
            "rssi": self.rssi,
            "freq": self.freq,
            "dr": self.dr,
            "server_time": self.server_time,
            "gw_id": self.gw_id,
            "decode_error": self.decode_error,
        }


class Subscriber:
    """One live-push consumer with a bounded buffer.

    Overflow past :data:`SUBSCRIBER_BUFFER` pending events disconnects the
    subscriber; there is no replay, re-subscribing resumes from the next
    stored record.
    """

    def __init__(self, app_id: str):
        self.app_id = app_id
        self.queue: deque[dict] = deque()
        self.disconnected = False

    def push(self, event: dict) -> None:
        if self.disconnected:
            return
        if len(self.queue) >= SUBSCRIBER_BUFFER:
            self.disconnected = True
            self.queue.clear()
            return
        self.queue.append(event)

    def drain(self) -> list[dict]:
        out = list(self.queue)
        self.queue.clear()
        return out


class NetServer:
    """Application/network server core, transport-agnostic.

    The HTTP/WebSocket surface in :mod:`firewatch.webapi` is a thin layer
    over this class.  Writes serialize through an internal lock; no
    subscriber can block ingest.
    """

    def __init__(self, store_path: str | Path | None = None):
        self.apps: dict[str, Application] = {}
        self.devices: dict[str, DeviceRegistration] = {}
        self._by_abp_addr: dict[str, DeviceRegistration] = {}
        self._by_dev_eui: dict[str, DeviceRegistration] = {}
        self._by_session_addr: dict[str, DeviceRegistration] = {}
        self.records: list[UplinkRecord] = []
        self._latest: dict[str, UplinkRecord] = {}
        self.subscribers: list[Subscriber] = []
        self.counters = {
            "ingested_lines": 0,
            "stored": 0,
            "malformed": 0,
            "unknown_device": 0,
            "key_mismatch": 0,
            "duplicate": 0,
            "decode_errors": 0,
            "joins": 0,
        }
        self.command_log: list[dict] = []
        self._sim = None
        self.request_downlink = None  # callable(DownlinkPacket, TxMode, now)
        self._lock = threading.RLock()
        self._store_path = Path(store_path) if store_path else None
        self._store_file = None
        if self._store_path:
            self._store_path.parent.mkdir(parents=True, exist_ok=True)
            self._store_file = open(self._store_path, "w", encoding="utf-8")
        self._join_addr_seq = 0

    # -- registration --------------------------------------------------------

    def register_application(self, app: Application) -> Application:
        with self._lock:
            if app.app_id in self.apps:
                raise ConflictError(f"application {app.app_id!r} already registered")
            _check_hex(app.app_eui, 16, "app_eui")
            if app.decoder not in DECODERS:
                raise RegistrationError(f"unknown decoder {app.decoder!r}")
            if not app.access_key:
                raise RegistrationError("access_key must be non-empty")
            self.apps[app.app_id] = app
            return app

    def register_device(self, dev: DeviceRegistration) -> DeviceRegistration:
        with self._lock:
            if dev.app_id not in self.apps:
                raise RegistrationError(f"unknown application {dev.app_id!r}")
            if dev.dev_id in self.devices:
                raise ConflictError(f"device {dev.dev_id!r} already registered")
            act = dev.activation
            if isinstance(act, AbpActivation):
                addr = _check_hex(act.dev_addr, 8, "dev_addr")
                _check_hex(act.nwkskey, 32, "nwkskey")
                _check_hex(act.appskey, 32, "appskey")
                if addr in self._by_abp_addr:
                    raise ConflictError(f"dev_addr {addr} already in use")
                dev.activation = AbpActivation(addr, act.nwkskey.upper(), act.appskey.upper())
                dev.session_check = frames.session_check(act.nwkskey, act.appskey)
                self._by_abp_addr[addr] = dev
            elif isinstance(act, OtaaActivation):
                eui = _check_hex(act.dev_eui, 16, "dev_eui")
                _check_hex(act.appkey, 32, "appkey")
                dev.activation = OtaaActivation(eui, act.appkey.upper())
                self._by_dev_eui[eui] = dev
            else:
                raise RegistrationError("activation must be ABP or OTAA")
            self.devices[dev.dev_id] = dev
            return dev

    # -- ingest ----------------------------------------------------------------

    def ingest_line(self, line: str, now: float | None = None) -> UplinkRecord | None:
        """Backhaul entry point; never raises on bad input."""
        self.counters["ingested_lines"] += 1
        try:
            msg = UplinkMessage.from_line(line)
        except (ValueError, KeyError, TypeError):
            self.counters["malformed"] += 1
            return None
        return self.ingest(msg, now=now)

    def ingest(self, msg: UplinkMessage, now: float | None = None) -> UplinkRecord | None:
        now = msg.gw_time_s if now is None else now
        try:
            parsed = frames.parse(msg.dev_payload_hex)
        except frames.FrameFormatError:
            self.counters["malformed"] += 1
            return None
        if isinstance(parsed, frames.JoinRequest):
            self._handle_join(parsed, msg, now)
            return None
        if not isinstance(parsed, frames.DataUplink):
            self.counters["malformed"] += 1
            return None

        with self._lock:
            dev = self._resolve(parsed)
            if dev is None:
                self.counters["unknown_device"] += 1
                return None
            expected = (
                dev.session_check
                if isinstance(dev.activation, AbpActivation)
                else frames.appkey_check(dev.activation.appkey)
            )
            if parsed.key_check != expected:
                self.counters["key_mismatch"] += 1
                return None
            if self._is_duplicate(dev, parsed.fcnt):
                self.counters["duplicate"] += 1
                return None

            app = self.apps[dev.app_id]
            decoded, risk, decode_error = None, None, False
            try:
                payload = bytes.fromhex(parsed.app_payload_hex)
                decoded = DECODERS[app.decoder](payload)
            except (ValueError, firmware.PayloadError):
                decode_error = True
                self.counters["decode_errors"] += 1
            if decoded and {"payload_gas", "payload_fire", "payload_temp"} <= decoded.keys():
                risk = firmware.risk_from_decoded(
                    decoded["payload_gas"], decoded["payload_fire"], decoded["payload_temp"]
                )
            record = UplinkRecord(
                dev_id=dev.dev_id,
                fcnt=parsed.fcnt,
                port=parsed.port,
                payload_hex=parsed.app_payload_hex,
                decoded=decoded if not decode_error else None,
                risk=risk,
                rssi=msg.rssi_dbm,
                freq=msg.freq_hz,
                dr=msg.dr,
                server_time=now,
                gw_id=msg.gw_id,
                decode_error=decode_error,
            )
            self._store(dev, record)
            if parsed.confirmed:
                self._send_ack(dev, parsed, msg, now)
            return record

    def _resolve(self, up: frames.DataUplink) -> DeviceRegistration | None:
        dev = self._by_abp_addr.get(up.dev_addr)
        if dev is not None:
            return dev
        return self._by_session_addr.get(up.dev_addr)

    def _is_duplicate(self, dev: DeviceRegistration, fcnt: int) -> bool:
        if fcnt in dev.recent_fcnts:
            return True
        if fcnt <= dev.last_fcnt - DEDUP_WINDOW:
            return True
        dev.recent_fcnts.append(fcnt)
        dev.last_fcnt = max(dev.last_fcnt, fcnt)
        return False

    def _store(self, dev: DeviceRegistration, record: UplinkRecord) -> None:
        self.records.append(record)
        self._latest[dev.dev_id] = record
        self.counters["stored"] += 1
        if self._store_file is not None:
            self._store_file.write(json.dumps(record.to_obj(), sort_keys=True) + "\n")
            self._store_file.flush()
        event = {
            "dev_id": record.dev_id,
            "payload_fields": dict(record.decoded) if record.decoded else {},
            "metadata": {
                "fcnt": record.fcnt,
                "port": record.port,
                "rssi": record.rssi,
                "freq": record.freq,
                "dr": record.dr,
                "server_time": record.server_time,
                "gw_id": record.gw_id,
                "risk": record.risk,
            },
        }
        for sub in self.subscribers:
            if sub.app_id == dev.app_id:
                sub.push(event)

    def _send_ack(self, dev, parsed, msg, now: float) -> None:
        if self.request_downlink is None:
            return
        addr = parsed.dev_addr
        pkt = DownlinkPacket(
            target=dev.dev_id,
            payload_hex=frames.encode_ack(addr, parsed.fcnt),
            freq_hz=msg.freq_hz,
            dr=msg.dr,
            at_time=now + DEFAULT_RX1_DELAY_S,
        )
        self.request_downlink(pkt, TxMode("timestamp"), now)

    def _handle_join(self, req: frames.JoinRequest, msg: UplinkMessage, now: float) -> None:
        with self._lock:
            dev = self._by_dev_eui.get(req.dev_eui)
            if dev is None:
                self.counters["unknown_device"] += 1
                return
            app = self.apps.get(dev.app_id)
            if app is None or app.app_eui != req.app_eui:
                self.counters["unknown_device"] += 1
                return
            if frames.appkey_check(dev.activation.appkey) != req.key_check:
                self.counters["key_mismatch"] += 1
                return
            if dev.session_addr is None:
                self._join_addr_seq += 1
                dev.session_addr = f"26{self._join_addr_seq:06X}"
                self._by_session_addr[dev.session_addr] = dev
            self.counters["joins"] += 1
            if self.request_downlink is not None:
                pkt = DownlinkPacket(
                    target=dev.dev_id,
                    payload_hex=frames.encode_join_accept(dev.session_addr),
                    freq_hz=msg.freq_hz,
                    dr=msg.dr,
                    at_time=now + DEFAULT_RX1_DELAY_S,
                )
                self.request_downlink(pkt, TxMode("timestamp"), now)

    # -- queries ---------------------------------------------------------------

    def authorize(self, key: str | None) -> Application:
        if key:
            for app in self.apps.values():
                if app.access_key == key:
                    return app
        raise AuthError("missing or wrong access_key")

    def list_applications(self, key: str) -> list[dict]:
        app = self.authorize(key)
        return [
            {"app_id": app.app_id, "app_eui": app.app_eui, "decoder": app.decoder}
        ]

    def list_devices(self, app_id: str, key: str) -> list[dict]:
        app = self.authorize(key)
        if app.app_id != app_id or app_id not in self.apps:
            raise NotFoundError(app_id)
        out = []
        for dev in self.devices.values():
            if dev.app_id != app_id:
                continue
            latest = self._latest.get(dev.dev_id)
            out.append(
                {
                    "dev_id": dev.dev_id,
                    "activation": "ABP" if isinstance(dev.activation, AbpActivation) else "OTAA",
                    "position": list(dev.position),
                    "last_fcnt": dev.last_fcnt,
                    "latest": latest.to_obj() if latest else None,
                }
            )
        return out

    def _device_for_key(self, dev_id: str, key: str) -> DeviceRegistration:
        app = self.authorize(key)
        dev = self.devices.get(dev_id)
        if dev is None or dev.app_id != app.app_id:
            raise NotFoundError(dev_id)
        return dev

    def latest(self, dev_id: str, key: str) -> dict | None:
        dev = self._device_for_key(dev_id, key)
        rec = self._latest.get(dev.dev_id)
        return rec.to_obj() if rec else None

    def device_records(
        self, dev_id: str, key: str, t_from: float | None = None, t_to: float | None = None
    ) -> list[dict]:
        dev = self._device_for_key(dev_id, key)
        out = []
        for rec in self.records:
            if rec.dev_id != dev.dev_id:
                continue
            if t_from is not None and rec.server_time < t_from:
                continue
            if t_to is not None and rec.server_time > t_to:
                continue
            out.append(rec.to_obj())
        return out

    def stats(self, key: str) -> dict:
        self.authorize(key)
        out = dict(self.counters)
        if self._sim is not None and hasattr(self._sim, "stats"):
            out["simulation"] = self._sim.stats()
        return out

    # -- live push ---------------------------------------------------------------

    def subscribe(self, app_id: str, key: str) -> Subscriber:
        app = self.authorize(key)
        if app.app_id != app_id:
            raise AuthError("access_key does not match application")
        sub = Subscriber(app_id)
        with self._lock:
            self.subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._lock:
            if sub in self.subscribers:
                self.subscribers.remove(sub)

    # -- scenario control ----------------------------------------------------------

    def attach_simulation(self, sim) -> None:
        self._sim = sim

    def scenario_control(self, command: dict) -> dict:
        if self._sim is None:
            return {"ok": False, "error": "unavailable: no simulation attached"}
        if not isinstance(command, dict) or "cmd" not in command:
            return {"ok": False, "error": "command must be an object with a 'cmd' field"}
        result = self._sim.control(command)
        self.command_log.append({"command": command, "result": result})
        return result

    def close(self) -> None:
        if self._store_file is not None:
            self._store_file.close()
            self._store_file = None
