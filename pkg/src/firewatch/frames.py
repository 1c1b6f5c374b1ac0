"""Over-the-air envelope carried in RadioFrame.payload_hex.

There is no AES/MIC in this emulation; a session is an exact key plus
address match at the server.  So the envelope carries the device address,
frame counter, port and a 4-byte key check folded from the session keys —
enough for the server to resolve, verify and deduplicate without crypto.

Layout (bytes):
    data uplink   [mhdr][dev_addr:4][fcnt:2][port:1][key_check:4][app payload...]
    join request  [0x00][app_eui:8][dev_eui:8][key_check:4]
    join accept   [0x20][dev_addr:4]
    ack downlink  [0x60][dev_addr:4][acked fcnt:2]

mhdr 0x40 marks an unconfirmed and 0x80 a confirmed data uplink.
"""

from __future__ import annotations

from dataclasses import dataclass

MHDR_JOIN_REQUEST = 0x00
MHDR_JOIN_ACCEPT = 0x20
MHDR_UNCONFIRMED_UP = 0x40
MHDR_ACK_DOWN = 0x60
MHDR_CONFIRMED_UP = 0x80

DATA_HEADER_LEN = 1 + 4 + 2 + 1 + 4
JOIN_REQUEST_LEN = 1 + 8 + 8 + 4

DEFAULT_PORT = 0


class FrameFormatError(ValueError):
    """Envelope bytes do not parse."""


def _fold4(key: bytes) -> bytes:
    out = bytes(4)
    for i in range(0, len(key), 4):
        chunk = key[i : i + 4].ljust(4, b"\x00")
        out = bytes(a ^ b for a, b in zip(out, chunk))
    return out


def session_check(nwkskey_hex: str, appskey_hex: str) -> str:
    """4-byte check derived from both session keys (hex in, hex out)."""
    nwk = bytes.fromhex(nwkskey_hex)
    app = bytes.fromhex(appskey_hex)
    mixed = bytes(a ^ b for a, b in zip(nwk, app))
    return _fold4(mixed).hex().upper()


def appkey_check(appkey_hex: str) -> str:
    return _fold4(bytes.fromhex(appkey_hex)).hex().upper()


@dataclass(frozen=True)
class DataUplink:
    confirmed: bool
    dev_addr: str  # 8 hex chars
    fcnt: int  # on-air 16-bit counter
    port: int
    key_check: str  # 8 hex chars
    app_payload_hex: str


@dataclass(frozen=True)
class JoinRequest:
    app_eui: str
    dev_eui: str
    key_check: str


def encode_data_uplink(
    dev_addr: str,
    fcnt: int,
    key_check: str,
    app_payload_hex: str,
    confirmed: bool = False,
    port: int = DEFAULT_PORT,
) -> str:
    mhdr = MHDR_CONFIRMED_UP if confirmed else MHDR_UNCONFIRMED_UP
    head = bytes([mhdr]) + bytes.fromhex(dev_addr) + (fcnt % 0x10000).to_bytes(2, "big")
    head += bytes([port]) + bytes.fromhex(key_check)
    return (head + bytes.fromhex(app_payload_hex)).hex().upper()


def encode_join_request(app_eui: str, dev_eui: str, key_check: str) -> str:
    body = bytes([MHDR_JOIN_REQUEST]) + bytes.fromhex(app_eui) + bytes.fromhex(dev_eui)
    return (body + bytes.fromhex(key_check)).hex().upper()


def encode_join_accept(dev_addr: str) -> str:
    return (bytes([MHDR_JOIN_ACCEPT]) + bytes.fromhex(dev_addr)).hex().upper()


def encode_ack(dev_addr: str, fcnt: int) -> str:
    body = bytes([MHDR_ACK_DOWN]) + bytes.fromhex(dev_addr)
    return (body + (fcnt % 0x10000).to_bytes(2, "big")).hex().upper()


def parse(payload_hex: str) -> DataUplink | JoinRequest | dict:
    """Parse an envelope; raises :class:`FrameFormatError` on junk.

    Downlink envelopes come back as small dicts since only the modem
    consumes them.
    """
    try:
        raw = bytes.fromhex(payload_hex)
    except ValueError:
        raise FrameFormatError("payload is not valid hex") from None
    if not raw:
        raise FrameFormatError("empty payload")
    mhdr = raw[0]
    if mhdr in (MHDR_UNCONFIRMED_UP, MHDR_CONFIRMED_UP):
        if len(raw) < DATA_HEADER_LEN:
            raise FrameFormatError(f"data uplink shorter than header ({len(raw)} bytes)")
        return DataUplink(
            confirmed=mhdr == MHDR_CONFIRMED_UP,
            dev_addr=raw[1:5].hex().upper(),
            fcnt=int.from_bytes(raw[5:7], "big"),
            port=raw[7],
            key_check=raw[8:12].hex().upper(),
            app_payload_hex=raw[12:].hex().upper(),
        )
    if mhdr == MHDR_JOIN_REQUEST:
        if len(raw) != JOIN_REQUEST_LEN:
            raise FrameFormatError(f"join request must be {JOIN_REQUEST_LEN} bytes")
        return JoinRequest(
            app_eui=raw[1:9].hex().upper(),
            dev_eui=raw[9:17].hex().upper(),
            key_check=raw[17:21].hex().upper(),
        )
    if mhdr == MHDR_JOIN_ACCEPT:
        if len(raw) != 5:
            raise FrameFormatError("join accept must be 5 bytes")
        return {"kind": "join_accept", "dev_addr": raw[1:5].hex().upper()}
    if mhdr == MHDR_ACK_DOWN:
        if len(raw) != 7:
            raise FrameFormatError("ack must be 7 bytes")
        return {
            "kind": "ack",
            "dev_addr": raw[1:5].hex().upper(),
            "fcnt": int.from_bytes(raw[5:7], "big"),
        }
    raise FrameFormatError(f"unknown mhdr 0x{mhdr:02X}")
