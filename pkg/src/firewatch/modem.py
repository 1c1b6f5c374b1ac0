"""Virtual RHF76-052 LoRa modem: AT command set, state and class-A radio.

``handle_command`` is purely functional — it never mutates its input
state, so an ERROR reply trivially leaves the modem unchanged.  Reply
grammar is ``+<NAME>: <body>`` with ``ERROR(<code>)`` bodies on failure:

    -1   unknown command
    -2   malformed arguments
    -11  no enabled channel admits the current data rate
    -12  no session (keys/address unset, or OTAA not joined)

``VirtualModem`` binds a state to the radio medium and a clock, adding
uplink transmission, receive windows and the byte-stream serial surface
(CR LF terminated both ways).

The RXWIN1 command is implemented as a per-channel RX1 frequency override;
the reference firmware never exercises it, so treat it as unproven.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from . import frames, phy
from .medium import ChannelRejected, Medium, MediumError, RadioFrame

ERR_UNKNOWN = -1
ERR_MALFORMED = -2
ERR_NO_CHANNEL = -11
ERR_NO_SESSION = -12

NUM_CHANNELS = 72
RX_WINDOW_LEN_S = 0.5
RX2_OFFSET_S = 1.0
DEFAULT_RX1_DELAY_S = 1.0

ZERO4 = "00000000"
ZERO8 = "0000000000000000"
ZERO16 = "00000000000000000000000000000000"


@dataclass(frozen=True)
class ChannelConfig:
    freq_hz: int  # 0 = disabled
    dr_min: int
    dr_max: int

    @property
    def enabled(self) -> bool:
        return self.freq_hz > 0


def _au915_default_channels() -> tuple[ChannelConfig, ...]:
    chans = [ChannelConfig(915_200_000 + 200_000 * n, 0, 5) for n in range(64)]
    chans += [ChannelConfig(915_900_000 + 1_600_000 * n, 6, 6) for n in range(8)]
    return tuple(chans)


@dataclass(frozen=True)
class ModemState:
    region: str = "AU915"
    dev_addr: str = ZERO4
    dev_eui: str = ZERO8
    app_eui: str = ZERO8
    nwkskey: str = ZERO16
    appskey: str = ZERO16
    appkey: str = ZERO16
    mode: str = "LWOTAA"
    device_class: str = "A"
    adr: bool = True
    dr_index: int = 0
    channels: tuple[ChannelConfig, ...] = field(default_factory=_au915_default_channels)
    rxwin1: tuple[tuple[int, int], ...] = ()  # (channel, freq_hz) overrides
    rxwin2_freq_hz: int = 923_300_000
    rxwin2_dr: int = 8
    rx1_delay_s: float = DEFAULT_RX1_DELAY_S
    fcnt_up: int = 0
    lowpower: bool = False
    joined: bool = False
    chan_rr: int = 0


def factory_state(chan_rr: int = 0) -> ModemState:
    return ModemState(chan_rr=chan_rr)


@dataclass(frozen=True)
class AtReply:
    lines: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not any("ERROR" in ln for ln in self.lines)

    def text(self) -> str:
        return "".join(ln + "\r\n" for ln in self.lines)


@dataclass(frozen=True)
class UplinkPlan:
    """A frame ready for the air, produced by MSGHEX/CMSGHEX."""

    channel_index: int
    freq_hz: int
    dr_index: int
    envelope_hex: str
    confirmed: bool
    fcnt: int


class _CmdError(Exception):
    def __init__(self, code: int):
        self.code = code


def _reply(name: str, *bodies: str) -> AtReply:
    return AtReply(tuple(f"+{name}: {b}" for b in bodies))


def _error(name: str, code: int) -> AtReply:
    return _reply(name, f"ERROR({code})")


def _mhz(freq_hz: int) -> str:
    return f"{freq_hz / 1e6:.1f}"


def _parse_mhz(text: str) -> int:
    try:
        mhz = float(text)
    except ValueError:
        raise _CmdError(ERR_MALFORMED) from None
    if mhz < 0 or mhz > 10_000:
        raise _CmdError(ERR_MALFORMED)
    return int(round(mhz * 1e6))


def _parse_int(text: str, lo: int, hi: int) -> int:
    try:
        v = int(text, 10)
    except ValueError:
        raise _CmdError(ERR_MALFORMED) from None
    if not lo <= v <= hi:
        raise _CmdError(ERR_MALFORMED)
    return v


def _parse_hex_id(text: str, width: int) -> str:
    v = text.strip().strip('"').replace(" ", "").replace(":", "").upper()
    if len(v) != width or not re.fullmatch(r"[0-9A-F]+", v):
        raise _CmdError(ERR_MALFORMED)
    return v


def _parse_dr_token(text: str) -> int:
    t = text.strip().upper()
    if t.startswith("DR"):
        t = t[2:]
    try:
        return int(t, 10)
    except ValueError:
        raise _CmdError(ERR_MALFORMED) from None


def _set_channel(state: ModemState, idx: int, cfg: ChannelConfig) -> ModemState:
    chans = state.channels[:idx] + (cfg,) + state.channels[idx + 1 :]
    return replace(state, channels=chans)


def _channel_body(idx: int, ch: ChannelConfig) -> str:
    if not ch.enabled:
        return f"{idx},OFF"
    return f"{idx},{_mhz(ch.freq_hz)},DR{ch.dr_min}:DR{ch.dr_max}"


# ---------------------------------------------------------------------------
# command handlers: fn(state, args) -> (state, [reply bodies])


def _cmd_at(state, args):
    if args is not None:
        raise _CmdError(ERR_MALFORMED)
    return state, ["OK"]


def _cmd_help(state, args):
    names = " ".join(sorted([*_HANDLERS, "MSGHEX", "CMSGHEX"]))
    return state, [names]


def _cmd_fdefault(state, args):
    return factory_state(chan_rr=state.chan_rr), ["OK"]


def _cmd_reset(state, args):
    # Soft reboot: stored configuration persists, volatile state clears.
    return replace(state, lowpower=False, joined=False), ["OK"]


def _cmd_dfu(state, args):
    return state, ["OK"]  # firmware update is a reply-only stub


def _cmd_lowpower(state, args):
    if args in (None, "", "ON"):
        return replace(state, lowpower=True), ["SLEEP"]
    if args in ("OFF", "WAKEUP"):
        return replace(state, lowpower=False), ["WAKEUP"]
    if args == "?":
        return state, ["ON" if state.lowpower else "OFF"]
    raise _CmdError(ERR_MALFORMED)


def _cmd_ch(state, args):
    if args in (None, "", "?"):
        bodies = [
            _channel_body(i, ch) for i, ch in enumerate(state.channels) if ch.enabled
        ]
        return state, bodies or ["NONE"]
    parts = [p.strip() for p in args.split(",")]
    idx = _parse_int(parts[0], 0, NUM_CHANNELS - 1)
    if len(parts) == 1:
        return state, [_channel_body(idx, state.channels[idx])]
    freq_hz = _parse_mhz(parts[1])
    if freq_hz == 0:
        new = _set_channel(state, idx, ChannelConfig(0, 0, 0))
        return new, [f"{idx},OFF"]
    if len(parts) == 2:
        dr_min, dr_max = state.channels[idx].dr_min, state.channels[idx].dr_max
    elif len(parts) == 4:
        dr_min = _parse_int(parts[2], 0, 15)
        dr_max = _parse_int(parts[3], 0, 15)
    else:
        raise _CmdError(ERR_MALFORMED)
    if dr_min > dr_max:
        raise _CmdError(ERR_MALFORMED)
    cfg = ChannelConfig(freq_hz, dr_min, dr_max)
    return _set_channel(state, idx, cfg), [_channel_body(idx, cfg)]


def _cmd_adr(state, args):
    if args == "?" or args in (None, ""):
        return state, ["ON" if state.adr else "OFF"]
    if args == "ON":
        return replace(state, adr=True), ["ON"]
    if args == "OFF":
        return replace(state, adr=False), ["OFF"]
    raise _CmdError(ERR_MALFORMED)


def _cmd_dr(state, args):
    if args in (None, "", "?"):
        return state, [f"DR{state.dr_index}", state.region]
    token = args.strip().upper()
    if token in phy._REGION_TABLES:
        # Selecting a band scheme loads its default plan.
        new = replace(
            state,
            region=token,
            channels=_au915_default_channels(),
            rxwin2_freq_hz=923_300_000,
            rxwin2_dr=8,
            dr_index=0,
        )
        return new, [token]
    idx = _parse_dr_token(token)
    try:
        entry = phy.dr_lookup(state.region, idx)
    except phy.ParameterError:
        raise _CmdError(ERR_MALFORMED) from None
    if entry.direction != "uplink":
        raise _CmdError(ERR_MALFORMED)
    return replace(state, dr_index=idx), [f"DR{idx}"]


def _cmd_rxwin1(state, args):
    if args in (None, "", "?"):
        bodies = [f"{ch},{_mhz(f)}" for ch, f in state.rxwin1] or ["NONE"]
        return state, bodies
    parts = [p.strip() for p in args.split(",")]
    if len(parts) != 2:
        raise _CmdError(ERR_MALFORMED)
    idx = _parse_int(parts[0], 0, NUM_CHANNELS - 1)
    freq_hz = _parse_mhz(parts[1])
    overrides = dict(state.rxwin1)
    if freq_hz == 0:
        overrides.pop(idx, None)
    else:
        overrides[idx] = freq_hz
    new = replace(state, rxwin1=tuple(sorted(overrides.items())))
    return new, [f"{idx},{_mhz(freq_hz)}"]


def _cmd_rxwin2(state, args):
    if args in (None, "", "?"):
        return state, [f"{_mhz(state.rxwin2_freq_hz)},DR{state.rxwin2_dr}"]
    parts = [p.strip() for p in args.split(",")]
    if len(parts) != 2:
        raise _CmdError(ERR_MALFORMED)
    freq_hz = _parse_mhz(parts[0])
    if freq_hz == 0:
        raise _CmdError(ERR_MALFORMED)
    dr = _parse_dr_token(parts[1])
    if not 0 <= dr <= 15:
        raise _CmdError(ERR_MALFORMED)
    new = replace(state, rxwin2_freq_hz=freq_hz, rxwin2_dr=dr)
    return new, [f"{_mhz(freq_hz)},DR{dr}"]


def _cmd_mode(state, args):
    if args in (None, "", "?"):
        return state, [state.mode]
    if args in ("LWABP", "LWOTAA"):
        return replace(state, mode=args), [args]
    raise _CmdError(ERR_MALFORMED)


_ID_FIELDS = {"DEVADDR": ("dev_addr", 8), "DEVEUI": ("dev_eui", 16), "APPEUI": ("app_eui", 16)}
_ID_NAMES = {"DEVADDR": "DevAddr", "DEVEUI": "DevEui", "APPEUI": "AppEui"}


def _cmd_id(state, args):
    if args in (None, "", "?"):
        return state, [
            f"DevAddr, {state.dev_addr}",
            f"DevEui, {state.dev_eui}",
            f"AppEui, {state.app_eui}",
        ]
    parts = args.split(",", 1)
    which = parts[0].strip().upper()
    if which not in _ID_FIELDS:
        raise _CmdError(ERR_MALFORMED)
    attr, width = _ID_FIELDS[which]
    if len(parts) == 1 or parts[1].strip() in ("", "?"):
        return state, [f"{_ID_NAMES[which]}, {getattr(state, attr)}"]
    value = _parse_hex_id(parts[1], width)
    return replace(state, **{attr: value}), [f"{_ID_NAMES[which]}, {value}"]


_KEY_FIELDS = {"NWKSKEY": "nwkskey", "APPSKEY": "appskey", "APPKEY": "appkey"}
_KEY_NAMES = {"NWKSKEY": "NwkSKey", "APPSKEY": "AppSKey", "APPKEY": "AppKey"}


def _cmd_key(state, args):
    if args in (None, "", "?"):
        raise _CmdError(ERR_MALFORMED)  # keys are write-only as a whole
    parts = args.split(",", 1)
    which = parts[0].strip().upper()
    if which not in _KEY_FIELDS or len(parts) != 2:
        raise _CmdError(ERR_MALFORMED)
    value = _parse_hex_id(parts[1], 32)
    return replace(state, **{_KEY_FIELDS[which]: value}), [f"{_KEY_NAMES[which]}, {value}"]


def _cmd_class(state, args):
    if args in (None, "", "?"):
        return state, [state.device_class]
    if args in ("A", "B", "C"):
        return replace(state, device_class=args), [args]
    raise _CmdError(ERR_MALFORMED)


def _cmd_delay(state, args):
    if args in (None, "", "?"):
        return state, [str(int(round(state.rx1_delay_s * 1000)))]
    ms = _parse_int(args.strip(), 0, 3_600_000)
    return replace(state, rx1_delay_s=ms / 1000.0), [str(ms)]


_HANDLERS = {
    "AT": _cmd_at,
    "HELP": _cmd_help,
    "FDEFAULT": _cmd_fdefault,
    "RESET": _cmd_reset,
    "DFU": _cmd_dfu,
    "LOWPOWER": _cmd_lowpower,
    "CH": _cmd_ch,
    "ADR": _cmd_adr,
    "DR": _cmd_dr,
    "RXWIN1": _cmd_rxwin1,
    "RXWIN2": _cmd_rxwin2,
    "MODE": _cmd_mode,
    "ID": _cmd_id,
    "KEY": _cmd_key,
    "CLASS": _cmd_class,
    "DELAY": _cmd_delay,
}


def _split_line(line: str):
    """Return (name, args) where args is None when no '=' was given."""
    text = line.strip().strip("\x00")
    if text.upper() == "AT":
        return "AT", None
    m = re.match(r"(?i)^AT\+([^=]*)(?:=(.*))?$", text, re.DOTALL)
    if not m:
        return None, None
    name = m.group(1).strip().upper()
    args = m.group(2)
    return name or None, args.strip() if args is not None else None


def _error_name(line: str) -> str:
    name, _ = _split_line(line)
    if name and re.fullmatch(r"[A-Z0-9]{1,16}", name):
        return name
    return "AT"


def handle_command(state: ModemState, line: str) -> tuple[ModemState, AtReply]:
    """Process one AT command line (terminator already stripped).

    Total over arbitrary input: every line yields exactly one reply, and
    an ERROR reply is always paired with the unchanged input state.
    """
    name, args = _split_line(line)
    if name in ("MSGHEX", "CMSGHEX"):
        new_state, reply, _plan = msghex(state, args or "", name == "CMSGHEX")
        return new_state, reply
    if name is None or name not in _HANDLERS:
        return state, _error(_error_name(line), ERR_UNKNOWN)
    try:
        new_state, bodies = _HANDLERS[name](state, args)
    except _CmdError as e:
        return state, _error(name, e.code)
    except Exception:
        return state, _error(name, ERR_MALFORMED)
    return new_state, _reply(name, *bodies)


def _normalize_payload(text: str) -> str:
    v = text.strip().strip('"').replace(" ", "").upper()
    if len(v) % 2 != 0 or not re.fullmatch(r"[0-9A-F]*", v):
        raise _CmdError(ERR_MALFORMED)
    return v


def _session(state: ModemState):
    """(dev_addr, key_check) for the active session, else _CmdError(-12)."""
    if state.mode == "LWABP":
        if state.dev_addr == ZERO4 or state.nwkskey == ZERO16 or state.appskey == ZERO16:
            raise _CmdError(ERR_NO_SESSION)
        return state.dev_addr, frames.session_check(state.nwkskey, state.appskey)
    if not state.joined or state.dev_addr == ZERO4:
        raise _CmdError(ERR_NO_SESSION)
    return state.dev_addr, frames.appkey_check(state.appkey)


def _pick_channel(state: ModemState) -> tuple[int, ChannelConfig]:
    usable = [
        (i, ch)
        for i, ch in enumerate(state.channels)
        if ch.enabled and ch.dr_min <= state.dr_index <= ch.dr_max
    ]
    if not usable:
        raise _CmdError(ERR_NO_CHANNEL)
    return usable[state.chan_rr % len(usable)]


def msghex(
    state: ModemState, payload_hex: str, confirmed: bool
) -> tuple[ModemState, AtReply, UplinkPlan | None]:
    """Build an uplink for ``payload_hex``; fcnt advances on success.

    Channel choice is a round-robin over the enabled channels admitting
    the current data rate, starting from the seeded ``chan_rr`` cursor.
    """
    name = "CMSGHEX" if confirmed else "MSGHEX"
    try:
        payload = _normalize_payload(payload_hex)
        dev_addr, key_check = _session(state)
        idx, ch = _pick_channel(state)
    except _CmdError as e:
        return state, _error(name, e.code), None
    envelope = frames.encode_data_uplink(
        dev_addr, state.fcnt_up, key_check, payload, confirmed=confirmed
    )
    plan = UplinkPlan(
        channel_index=idx,
        freq_hz=ch.freq_hz,
        dr_index=state.dr_index,
        envelope_hex=envelope,
        confirmed=confirmed,
        fcnt=state.fcnt_up % 0x10000,
    )
    new = replace(state, fcnt_up=state.fcnt_up + 1, chan_rr=state.chan_rr + 1)
    body = "Start" if confirmed else "Done"
    return new, _reply(name, body), plan


@dataclass(frozen=True)
class RxWindow:
    kind: str  # "RX1" | "RX2"
    open_t: float
    close_t: float
    freq_hz: int
    dr_index: int


def class_a_cycle(
    state: ModemState, t_end: float, uplink_channel: int, uplink_freq_hz: int, uplink_dr: int
) -> tuple[RxWindow, RxWindow]:
    """Receive windows after an uplink ending at ``t_end``.

    RX1 opens after rx1_delay on the uplink parameters (or the RXWIN1
    frequency override for that channel); RX2 opens one second later on
    the RXWIN2 settings.
    """
    rx1_freq = dict(state.rxwin1).get(uplink_channel, uplink_freq_hz)
    rx1_open = t_end + state.rx1_delay_s
    rx2_open = rx1_open + RX2_OFFSET_S
    rx1 = RxWindow("RX1", rx1_open, rx1_open + RX_WINDOW_LEN_S, rx1_freq, uplink_dr)
    rx2 = RxWindow("RX2", rx2_open, rx2_open + RX_WINDOW_LEN_S, state.rxwin2_freq_hz, state.rxwin2_dr)
    return rx1, rx2


class VirtualModem:
    """A modem instance bound to the radio medium.

    Owned by a single node; the medium is the only cross-modem
    synchronization point.  ``exec_line`` is the command surface the node
    firmware drives; ``feed`` is the raw CR-LF byte-stream equivalent.
    """

    def __init__(
        self,
        node_id: str,
        medium: Medium | None = None,
        position=(0.0, 0.0),
        gateway_pos=(0.0, 0.0),
        state: ModemState | None = None,
        chan_rr_seed: int = 0,
        on_event=None,
    ):
        self.node_id = node_id
        self.medium = medium
        self.position = tuple(position)
        self.gateway_pos = tuple(gateway_pos)
        self.state = state or factory_state(chan_rr=chan_rr_seed)
        self.windows: list[RxWindow] = []
        self.pending_confirm: int | None = None
        self.confirm_deadline: float | None = None
        self.join_deadline: float | None = None
        self.unsolicited: list[str] = []
        self.on_event = on_event
        self._rx_buffer = b""

    # -- command surface ----------------------------------------------------

    def exec_line(self, line: str, t: float = 0.0) -> AtReply:
        self.check_timeouts(t)
        name, args = _split_line(line)
        if name in ("MSGHEX", "CMSGHEX"):
            before = self.state
            self.state, reply, plan = msghex(self.state, args or "", name == "CMSGHEX")
            if plan is not None:
                reply = self._launch(plan, t, reply)
                if not reply.ok:
                    self.state = before
            return reply
        self.state, reply = handle_command(self.state, line)
        return reply

    def feed(self, data: bytes, t: float = 0.0) -> bytes:
        """Byte-stream serial interface: CR LF in, CR LF out."""
        self._rx_buffer += data
        out = []
        while True:
            m = re.search(rb"\r\n|\n", self._rx_buffer)
            if not m:
                break
            raw, self._rx_buffer = self._rx_buffer[: m.start()], self._rx_buffer[m.end() :]
            line = raw.decode("utf-8", errors="replace")
            if line.strip():
                out.append(self.exec_line(line, t).text())
            out.extend(ln + "\r\n" for ln in self.drain_unsolicited())
        return "".join(out).encode()

    def run_script(self, script: str, t: float = 0.0) -> list[AtReply]:
        """Run a command-per-line boot script (comments start with '#')."""
        replies = []
        for line in script.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            replies.append(self.exec_line(line, t))
        return replies

    def drain_unsolicited(self) -> list[str]:
        out, self.unsolicited = self.unsolicited, []
        return out

    # -- radio --------------------------------------------------------------

    def _launch(self, plan: UplinkPlan, t: float, reply: AtReply) -> AtReply:
        if self.medium is None:
            return reply
        entry = phy.dr_lookup(self.state.region, plan.dr_index)
        air = phy.airtime(len(plan.envelope_hex) // 2, entry.params(cr=1))
        frame = RadioFrame(
            payload_hex=plan.envelope_hex,
            freq_hz=plan.freq_hz,
            dr_index=plan.dr_index,
            tx_start=t,
            tx_airtime=air,
            source=self.node_id,
        )
        name = "CMSGHEX" if plan.confirmed else "MSGHEX"
        try:
            self.medium.transmit(frame, self.position, self.gateway_pos)
        except ChannelRejected:
            return _error(name, ERR_NO_CHANNEL)
        except MediumError:
            return _error(name, ERR_MALFORMED)
        rx1, rx2 = class_a_cycle(
            self.state, frame.tx_end, plan.channel_index, plan.freq_hz, plan.dr_index
        )
        self.windows.extend([rx1, rx2])
        if plan.confirmed:
            self.pending_confirm = plan.fcnt
            self.confirm_deadline = rx2.close_t
        if self.on_event:
            self.on_event(
                {
                    "kind": "uplink",
                    "node": self.node_id,
                    "t": t,
                    "freq_hz": plan.freq_hz,
                    "dr": plan.dr_index,
                    "fcnt": plan.fcnt,
                    "airtime_s": air,
                }
            )
        return reply

    def join(self, t: float = 0.0) -> AtReply:
        """OTAA join request; the accept arrives through a receive window."""
        if self.state.mode != "LWOTAA":
            return _error("JOIN", ERR_NO_SESSION)
        if self.state.app_eui == ZERO8 or self.state.appkey == ZERO16:
            return _error("JOIN", ERR_NO_SESSION)
        try:
            idx, ch = _pick_channel(self.state)
        except _CmdError as e:
            return _error("JOIN", e.code)
        envelope = frames.encode_join_request(
            self.state.app_eui, self.state.dev_eui, frames.appkey_check(self.state.appkey)
        )
        entry = phy.dr_lookup(self.state.region, self.state.dr_index)
        air = phy.airtime(len(envelope) // 2, entry.params(cr=1))
        frame = RadioFrame(envelope, ch.freq_hz, self.state.dr_index, t, air, self.node_id)
        self.state = replace(self.state, chan_rr=self.state.chan_rr + 1)
        if self.medium is not None:
            self.medium.transmit(frame, self.position, self.gateway_pos)
        rx1, rx2 = class_a_cycle(self.state, frame.tx_end, idx, ch.freq_hz, self.state.dr_index)
        self.windows.extend([rx1, rx2])
        self.join_deadline = rx2.close_t
        return _reply("JOIN", "Start")

    def window_open_at(self, t: float, freq_hz: int, dr_index: int) -> bool:
        if self.state.device_class == "C":
            if freq_hz == self.state.rxwin2_freq_hz and dr_index == self.state.rxwin2_dr:
                return True
        return any(
            w.open_t <= t <= w.close_t and w.freq_hz == freq_hz and w.dr_index == dr_index
            for w in self.windows
        )

    def receive_downlink(self, payload_hex: str, freq_hz: int, dr_index: int, t: float) -> bool:
        """Deliver a downlink to the modem; returns True when accepted."""
        self.check_timeouts(t)
        if not self.window_open_at(t, freq_hz, dr_index):
            return False
        try:
            parsed = frames.parse(payload_hex)
        except frames.FrameFormatError:
            return False
        if isinstance(parsed, dict) and parsed.get("kind") == "join_accept":
            if self.join_deadline is None:
                return False
            self.state = replace(self.state, dev_addr=parsed["dev_addr"], joined=True)
            self.join_deadline = None
            self.unsolicited.append("+JOIN: Network joined")
            self.unsolicited.append(f"+JOIN: NetID 000000 DevAddr {parsed['dev_addr']}")
            return True
        if isinstance(parsed, dict) and parsed.get("kind") == "ack":
            if self.pending_confirm is None or parsed["fcnt"] != self.pending_confirm:
                return False
            if parsed["dev_addr"] != self.state.dev_addr:
                return False
            self.pending_confirm = None
            self.confirm_deadline = None
            self.unsolicited.append("+CMSGHEX: ACK received")
            return True
        return False

    def check_timeouts(self, t: float) -> None:
        if self.confirm_deadline is not None and t > self.confirm_deadline:
            self.pending_confirm = None
            self.confirm_deadline = None
            self.unsolicited.append("+CMSGHEX: ACK timeout")
        if self.join_deadline is not None and t > self.join_deadline:
            self.join_deadline = None
            self.unsolicited.append("+JOIN: Join failed")
        self.windows = [w for w in self.windows if w.close_t >= t]
