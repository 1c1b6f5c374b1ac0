"""Discrete-event simulation binding nodes, medium, gateway and server.

Batch runs are single-threaded and deterministic: one master seed spawns
per-component generators, the event queue orders work by (time, seq), and
every artifact (event log, uplink store) is a pure function of
(scenario, seed, command log).  Serve mode drives the same engine from a
wall-clock thread; scenario-control commands enter under the engine lock
and are stamped with sim time, so a run remains replayable from its
command log.
"""

from __future__ import annotations

import heapq
import itertools
import json
import threading
from importlib import resources
from pathlib import Path

import numpy as np

from . import phy
from .firmware import RiskThresholds, Band, SensorNode
from .gateway import DownlinkError, DownlinkPacket, Gateway, TxMode
from .medium import ChannelRejected, Medium, MediumError
from .modem import VirtualModem
from .netserver import (
    AbpActivation,
    Application,
    DeviceRegistration,
    NetServer,
    OtaaActivation,
)
from .scenario import Scenario
from .sensors import FireEvent

#: Frequencies the gateway listens on — the first AU915 sub-band, matching
#: the channels the boot script enables.
GATEWAY_CHANNELS_HZ = frozenset(915_200_000 + 200_000 * n for n in range(8))


def boot_script_text() -> str:
    return resources.files("firewatch.data").joinpath("boot_script.at").read_text()


def _thresholds(spec_th: dict) -> RiskThresholds:
    defaults = RiskThresholds()
    return RiskThresholds(
        gas=Band(*spec_th["gas"]) if "gas" in spec_th else defaults.gas,
        flame=Band(*spec_th["flame"]) if "flame" in spec_th else defaults.flame,
        temp=Band(*spec_th["temp"]) if "temp" in spec_th else defaults.temp,
    )


class Simulation:
    """One scenario run.

    ``commands`` replays scenario-control actions at given sim times:
    each entry is ``{"t": float, ...command fields...}``.
    """

    def __init__(
        self,
        scenario: Scenario,
        out_dir: str | Path | None = None,
        commands: list[dict] | None = None,
        always_deliver: bool = False,
    ):
        self.scenario = scenario
        self.now = 0.0
        self.paused = False
        self.lock = threading.RLock()
        self._queue: list = []
        self._seq = itertools.count()
        self.events: list[dict] = []
        self.fires: list[FireEvent] = []
        self._fire_seq = itertools.count(1)

        self.out_dir = Path(out_dir) if out_dir else None
        store_path = None
        if self.out_dir:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            store_path = self.out_dir / "store.jsonl"

        ss = np.random.SeedSequence(scenario.seed)
        children = ss.spawn(1 + len(scenario.nodes))
        medium_rng = np.random.default_rng(children[0])

        self.medium = Medium(
            scenario.env,
            medium_rng,
            enabled_freqs=set(GATEWAY_CHANNELS_HZ),
            always_deliver=always_deliver,
        )
        self.server = NetServer(store_path=store_path)
        self.server.attach_simulation(self)
        self.gateway = Gateway(
            scenario.gw_id,
            scenario.gw_position,
            send_line=self._backhaul_line,
            emit_downlink=self._emit_downlink,
        )
        self.server.request_downlink = self._request_downlink

        self.server.register_application(
            Application(
                app_id=scenario.app_id,
                app_eui=scenario.app_eui,
                access_key=scenario.access_key,
                decoder=scenario.decoder,
            )
        )

        boot = boot_script_text()
        self.nodes: dict[str, SensorNode] = {}
        self.modems: dict[str, VirtualModem] = {}
        for spec, child in zip(scenario.nodes, children[1:]):
            rng = np.random.default_rng(child)
            if spec.activation == "abp":
                activation = AbpActivation(spec.dev_addr, spec.nwkskey, spec.appskey)
            else:
                activation = OtaaActivation(spec.dev_eui, spec.appkey)
            self.server.register_device(
                DeviceRegistration(
                    dev_id=spec.dev_id,
                    app_id=scenario.app_id,
                    activation=activation,
                    position=spec.position,
                )
            )
            modem = VirtualModem(
                node_id=spec.dev_id,
                medium=self.medium,
                position=spec.position,
                gateway_pos=scenario.gw_position,
                chan_rr_seed=int(rng.integers(0, 8)),
                on_event=self._log_event,
            )
            modem.run_script(boot, t=0.0)
            # The bundled script carries the reference identity; each node
            # then loads its own registration.
            if spec.activation == "abp":
                identity = (
                    f'AT+ID=DevAddr,"{spec.dev_addr}"',
                    f'AT+KEY=NwkSKey,"{spec.nwkskey}"',
                    f'AT+KEY=AppSKey,"{spec.appskey}"',
                )
            else:
                identity = (
                    "AT+MODE=LWOTAA",
                    f'AT+ID=DevEui,"{spec.dev_eui}"',
                    f'AT+ID=AppEui,"{scenario.app_eui}"',
                    f'AT+KEY=AppKey,"{spec.appkey}"',
                )
            for line in identity:
                modem.exec_line(line, 0.0)
            if spec.activation == "otaa":
                self._schedule(0.0, lambda m=modem: self._start_join(m))
            node = SensorNode(
                dev_id=spec.dev_id,
                position=spec.position,
                modem=modem,
                rng=rng,
                thresholds=_thresholds(spec.thresholds),
                sample_period=spec.sample_period_s,
                heartbeat_period=spec.heartbeat_period_s,
                mq_gain=spec.mq_gain,
                noise_free=spec.noise_free,
                boot_time=0.0,
            )
            self.nodes[spec.dev_id] = node
            self.modems[spec.dev_id] = modem
            self._schedule(0.0, lambda n=node: self._node_tick(n))

        for f in scenario.fires:
            self._add_fire(f["x"], f["y"], f["intensity"], start=f["start"])

        for c in commands or []:
            c = dict(c)
            t = float(c.pop("t", 0.0))
            self._schedule(t, lambda cmd=c: self._apply_command(cmd))

    # -- event queue ---------------------------------------------------------

    def _schedule(self, t: float, fn) -> None:
        heapq.heappush(self._queue, (t, next(self._seq), fn))

    def process_until(self, until: float) -> None:
        with self.lock:
            while self._queue and self._queue[0][0] <= until:
                t, _, fn = heapq.heappop(self._queue)
                self.now = max(self.now, t)
                fn()
            self.now = max(self.now, until)

    #: Grace period after the scenario duration so frames already on the
    #: air (and their RX windows) can land; node ticks self-limit to the
    #: duration, so no new traffic starts in it.
    RADIO_DRAIN_S = 5.0

    def run(self, until: float | None = None) -> None:
        end = self.scenario.duration_s if until is None else until
        self.process_until(end)
        self.process_until(end + self.RADIO_DRAIN_S)
        self.flush()

    def flush(self) -> None:
        if self.out_dir:
            with open(self.out_dir / "events.jsonl", "w", encoding="utf-8") as fh:
                for ev in self.events:
                    fh.write(json.dumps(ev, sort_keys=True) + "\n")
            self._write_summary()
        self.server.close()

    def _write_summary(self) -> None:
        rows = []
        for dev_id, node in self.nodes.items():
            recs = [r for r in self.server.records if r.dev_id == dev_id]
            last_risk = recs[-1].risk["combined"] if recs and recs[-1].risk else ""
            rows.append((dev_id, len(recs), last_risk))
        with open(self.out_dir / "summary.csv", "w", encoding="utf-8") as fh:
            fh.write("dev_id,records,last_combined_risk\n")
            for dev_id, n, risk in rows:
                fh.write(f"{dev_id},{n},{risk}\n")

    def _log_event(self, ev: dict) -> None:
        self.events.append(ev)

    # -- node / radio path -----------------------------------------------------

    def _node_tick(self, node: SensorNode) -> None:
        t = self.now
        node.modem.check_timeouts(t)
        try:
            result = node.tick(self.fires, t)
        except (MediumError, ChannelRejected) as e:
            node.log.append(f"t={t:.3f} radio error: {e}")
            result = None
        if result and result.sent:
            self._log_event(
                {
                    "kind": "node-send",
                    "t": t,
                    "dev_id": node.dev_id,
                    "reason": result.reason,
                    "levels": result.levels,
                    "payload_hex": result.payload_hex,
                }
            )
            self._schedule_medium_poll()
        nxt = t + node.sample_period
        if nxt <= self.scenario.duration_s:
            self._schedule(nxt, lambda: self._node_tick(node))

    def _start_join(self, modem: VirtualModem) -> None:
        reply = modem.join(t=self.now)
        self._log_event(
            {"kind": "join-request", "t": self.now, "dev_id": modem.node_id,
             "ok": reply.ok}
        )
        self._schedule_medium_poll()

    def _schedule_medium_poll(self) -> None:
        # Poll at each pending rx_time; the drain is idempotent.
        for rx_time in self.medium.pending_rx_times():
            self._schedule(rx_time, self._poll_medium)

    def _poll_medium(self) -> None:
        for rcv in self.medium.poll_delivered(self.now):
            msg = self.gateway.on_receive(rcv)
            self._log_event(
                {
                    "kind": "gateway-forward",
                    "t": self.now,
                    "rssi": rcv.rssi,
                    "freq_hz": msg.freq_hz,
                    "payload_hex": msg.dev_payload_hex,
                }
            )

    def _backhaul_line(self, line: str) -> None:
        record = self.server.ingest_line(line, now=self.now)
        if record is not None:
            self._log_event(
                {
                    "kind": "server-store",
                    "t": self.now,
                    "dev_id": record.dev_id,
                    "fcnt": record.fcnt,
                    "risk": record.risk,
                }
            )

    def _request_downlink(self, pkt: DownlinkPacket, mode: TxMode, now: float) -> None:
        try:
            self.gateway.schedule_downlink(pkt, mode, now=self.now)
        except DownlinkError as e:
            self._log_event({"kind": "downlink-rejected", "t": self.now, "error": str(e)})

    def _emit_downlink(self, pkt: DownlinkPacket, emission: float) -> None:
        entry = phy.AU915_DATA_RATES.get(pkt.dr)
        air = phy.airtime(len(pkt.payload_hex) // 2, entry.params(cr=1)) if entry else 0.05
        arrival = emission + air

        def deliver():
            modem = self.modems.get(pkt.target)
            if modem is None:
                return
            accepted = modem.receive_downlink(pkt.payload_hex, pkt.freq_hz, pkt.dr, self.now)
            self._log_event(
                {
                    "kind": "downlink",
                    "t": self.now,
                    "dev_id": pkt.target,
                    "accepted": accepted,
                }
            )

        self._schedule(arrival, deliver)

    # -- scenario control --------------------------------------------------------

    def control(self, command: dict) -> dict:
        """Apply a scenario-control command at the current sim time."""
        with self.lock:
            result = self._apply_command(dict(command))
            return result

    def _apply_command(self, command: dict) -> dict:
        cmd = command.get("cmd")
        t = self.now
        try:
            if cmd == "inject_fire":
                fire = self._add_fire(
                    float(command["x"]), float(command["y"]),
                    float(command.get("intensity", 1.0)), start=t,
                )
                result = {"ok": True, "fire_id": fire.fire_id}
            elif cmd == "extinguish":
                fid = int(command["fire_id"])
                match = [f for f in self.fires if f.fire_id == fid and f.active]
                if not match:
                    result = {"ok": False, "error": f"not-found: fire {fid}"}
                else:
                    match[0].active = False
                    result = {"ok": True, "fire_id": fid}
            elif cmd in ("place_node", "move_node"):
                dev_id = command["dev_id"]
                node = self.nodes.get(dev_id)
                if node is None:
                    result = {"ok": False, "error": f"not-found: device {dev_id}"}
                else:
                    pos = (float(command["x"]), float(command["y"]))
                    node.position = pos
                    node.modem.position = pos
                    dev = self.server.devices.get(dev_id)
                    if dev is not None:
                        dev.position = pos
                    result = {"ok": True, "dev_id": dev_id, "position": list(pos)}
            elif cmd == "pause":
                self.paused = True
                result = {"ok": True, "paused": True}
            elif cmd == "resume":
                self.paused = False
                result = {"ok": True, "paused": False}
            elif cmd == "step":
                dt = float(command.get("dt", 5.0))
                target = self.now + dt
                self.paused = False
                self.process_until(target)
                self.paused = True
                result = {"ok": True, "now": self.now}
            else:
                result = {"ok": False, "error": f"unknown command {cmd!r}"}
        except (KeyError, TypeError, ValueError) as e:
            result = {"ok": False, "error": f"bad command: {e}"}
        self._log_event({"kind": "command", "t": t, "command": command, "result": result})
        return result

    def _add_fire(self, x: float, y: float, intensity: float, start: float) -> FireEvent:
        fire = FireEvent(x=x, y=y, start=start, intensity=intensity,
                         fire_id=next(self._fire_seq))
        self.fires.append(fire)
        return fire

    def stats(self) -> dict:
        return {
            "now": self.now,
            "medium": dict(self.medium.stats),
            "gateway": dict(self.gateway.stats),
            "fires_active": sum(1 for f in self.fires if f.active),
        }


class RealTimeRunner(threading.Thread):
    """Maps wall-clock time onto sim time (scaled by ``speed``) for serve
    mode; pausing freezes the mapping."""

    def __init__(self, sim: Simulation, speed: float = 1.0, tick_s: float = 0.02):
        super().__init__(daemon=True)
        self.sim = sim
        self.speed = speed
        self.tick_s = tick_s
        self._stop = threading.Event()
        self._sim_target = 0.0

    def run(self) -> None:
        import time

        last = time.monotonic()
        while not self._stop.is_set():
            now = time.monotonic()
            if not self.sim.paused:
                self._sim_target = min(
                    self.sim.scenario.duration_s,
                    self._sim_target + (now - last) * self.speed,
                )
                self.sim.process_until(self._sim_target)
            last = now
            if self._sim_target >= self.sim.scenario.duration_s:
                break
            time.sleep(self.tick_s)

    def stop(self) -> None:
        self._stop.set()
