import json

import pytest

from firewatch import frames
from firewatch.firmware import encode_payload
from firewatch.gateway import UplinkMessage
from firewatch.netserver import (
    AbpActivation,
    Application,
    AuthError,
    ConflictError,
    DeviceRegistration,
    NetServer,
    NotFoundError,
    OtaaActivation,
    RegistrationError,
    SUBSCRIBER_BUFFER,
)

NWK = "F6012FAD4F28BEA501A4E9841D8A0EBC"
APPS = "A484A36F909D5A74D7456BBB2C511058"
APPKEY = "2B7E151628AED2A6ABF7158809CF4F3C"
KEY = "ttn-account-v2.test-key"


def make_server(store_path=None) -> NetServer:
    server = NetServer(store_path=store_path)
    server.register_application(
        Application("fire-monitoring", "70B3D57ED0014F64", KEY)
    )
    server.register_device(
        DeviceRegistration(
            dev_id="node-1",
            app_id="fire-monitoring",
            activation=AbpActivation("2603172D", NWK, APPS),
            position=(80.0, 30.0),
        )
    )
    return server


def uplink_line(fcnt=0, gas=985, fire=400, temp=28, confirmed=False,
                dev_addr="2603172D", key_check=None, gw_time=5.0):
    payload = encode_payload(gas, fire, temp).hex().upper()
    kc = key_check if key_check is not None else frames.session_check(NWK, APPS)
    env = frames.encode_data_uplink(dev_addr, fcnt, kc, payload, confirmed=confirmed)
    return UplinkMessage("B827EBFFFE7AD9C2", env, 915_200_000, 3, -112.0, gw_time).to_line()


class TestRegistration:
    def test_duplicate_app_rejected(self):
        server = make_server()
        with pytest.raises(ConflictError):
            server.register_application(Application("fire-monitoring", "70B3D57ED0014F64", "k"))

    def test_duplicate_dev_addr_rejected(self):
        server = make_server()
        with pytest.raises(ConflictError):
            server.register_device(
                DeviceRegistration("node-2", "fire-monitoring",
                                   AbpActivation("2603172D", NWK, APPS))
            )

    def test_malformed_dev_addr_rejected(self):
        server = make_server()
        with pytest.raises(RegistrationError):
            server.register_device(
                DeviceRegistration("node-x", "fire-monitoring", AbpActivation("XYZ", NWK, APPS))
            )

    def test_unknown_app_rejected(self):
        server = make_server()
        with pytest.raises(RegistrationError):
            server.register_device(
                DeviceRegistration("node-x", "nope", AbpActivation("26030001", NWK, APPS))
            )

    def test_unknown_decoder_rejected(self):
        server = NetServer()
        with pytest.raises(RegistrationError):
            server.register_application(Application("a", "70B3D57ED0014F64", "k", decoder="exotic"))


class TestIngest:
    def test_decodes_reference_payload(self):
        server = make_server()
        rec = server.ingest_line(uplink_line())
        assert rec.decoded == {"payload_gas": 985, "payload_fire": 400, "payload_temp": 28}
        assert rec.dev_id == "node-1"
        assert rec.rssi == -112.0
        assert rec.risk["gas"] == "Risk"

    def test_duplicate_fcnt_stored_once(self):
        server = make_server()
        assert server.ingest_line(uplink_line(fcnt=7)) is not None
        assert server.ingest_line(uplink_line(fcnt=7)) is None
        assert server.counters["duplicate"] == 1
        assert len(server.records) == 1

    def test_reordering_within_window_accepted(self):
        server = make_server()
        assert server.ingest_line(uplink_line(fcnt=5)) is not None
        assert server.ingest_line(uplink_line(fcnt=3)) is not None  # late but fresh
        assert server.ingest_line(uplink_line(fcnt=3)) is None

    def test_stale_fcnt_beyond_window_dropped(self):
        server = make_server()
        server.ingest_line(uplink_line(fcnt=100))
        assert server.ingest_line(uplink_line(fcnt=50)) is None

    def test_unknown_device_counted(self):
        server = make_server()
        assert server.ingest_line(uplink_line(dev_addr="DEADBEEF")) is None
        assert server.counters["unknown_device"] == 1

    def test_key_mismatch_counted(self):
        server = make_server()
        assert server.ingest_line(uplink_line(key_check="00000000")) is None
        assert server.counters["key_mismatch"] == 1

    def test_malformed_line_counted_not_raised(self):
        server = make_server()
        for junk in ("", "{", "null", '{"gw_id": 1}', "\x00\xff", "[1,2,3]"):
            assert server.ingest_line(junk) is None
        assert server.counters["malformed"] == 6

    def test_decoder_failure_stores_raw_with_flag(self):
        server = make_server()
        env = frames.encode_data_uplink(
            "2603172D", 0, frames.session_check(NWK, APPS), "0102"  # wrong length
        )
        line = UplinkMessage("B827EBFFFE7AD9C2", env, 915_200_000, 3, -112.0, 5.0).to_line()
        rec = server.ingest_line(line)
        assert rec.decode_error
        assert rec.decoded is None
        assert rec.payload_hex == "0102"
        assert server.counters["decode_errors"] == 1

    def test_store_uniqueness_invariant(self):
        server = make_server()
        for fcnt in (0, 1, 1, 2, 0, 5, 3, 5, 100, 99, 84, 83):
            server.ingest_line(uplink_line(fcnt=fcnt))
        seen = [(r.dev_id, r.fcnt) for r in server.records]
        assert len(seen) == len(set(seen))


class TestLivePush:
    def test_fanout_exactly_once_in_order(self):
        server = make_server()
        sub_a = server.subscribe("fire-monitoring", KEY)
        sub_b = server.subscribe("fire-monitoring", KEY)
        for fcnt in range(5):
            server.ingest_line(uplink_line(fcnt=fcnt, gw_time=float(fcnt)))
        ev_a, ev_b = sub_a.drain(), sub_b.drain()
        assert [e["metadata"]["fcnt"] for e in ev_a] == [0, 1, 2, 3, 4]
        assert ev_a == ev_b
        assert sub_a.drain() == []

    def test_payload_fields_key_names(self):
        server = make_server()
        sub = server.subscribe("fire-monitoring", KEY)
        server.ingest_line(uplink_line())
        event = sub.drain()[0]
        assert set(event["payload_fields"]) == {"payload_gas", "payload_fire", "payload_temp"}
        assert event["dev_id"] == "node-1"

    def test_zero_subscribers_still_persists(self):
        server = make_server()
        server.ingest_line(uplink_line())
        assert len(server.records) == 1

    def test_slow_subscriber_disconnected_on_overflow(self):
        server = make_server()
        sub = server.subscribe("fire-monitoring", KEY)
        for fcnt in range(SUBSCRIBER_BUFFER + 1):
            server.ingest_line(uplink_line(fcnt=fcnt))
        assert sub.disconnected
        assert sub.drain() == []
        # ingest kept going regardless
        assert len(server.records) == SUBSCRIBER_BUFFER + 1

    def test_subscribe_requires_matching_key(self):
        server = make_server()
        with pytest.raises(AuthError):
            server.subscribe("fire-monitoring", "wrong")


class TestQueries:
    def test_latest_and_records(self):
        server = make_server()
        server.ingest_line(uplink_line(fcnt=0, gw_time=1.0))
        server.ingest_line(uplink_line(fcnt=1, gw_time=2.0))
        latest = server.latest("node-1", KEY)
        assert latest["fcnt"] == 1
        recs = server.device_records("node-1", KEY, t_from=0.0, t_to=1.5)
        assert [r["fcnt"] for r in recs] == [0]
        assert server.device_records("node-1", KEY, t_from=10.0, t_to=20.0) == []

    def test_auth_required_everywhere(self):
        server = make_server()
        for call in (
            lambda: server.list_applications("bad"),
            lambda: server.list_devices("fire-monitoring", "bad"),
            lambda: server.latest("node-1", ""),
            lambda: server.device_records("node-1", None),
            lambda: server.stats("bad"),
        ):
            with pytest.raises(AuthError):
                call()

    def test_unknown_device_not_found(self):
        server = make_server()
        with pytest.raises(NotFoundError):
            server.latest("ghost", KEY)

    def test_list_devices(self):
        server = make_server()
        devices = server.list_devices("fire-monitoring", KEY)
        assert devices[0]["dev_id"] == "node-1"
        assert devices[0]["position"] == [80.0, 30.0]

    def test_stats_counters(self):
        server = make_server()
        server.ingest_line(uplink_line())
        server.ingest_line("junk")
        stats = server.stats(KEY)
        assert stats["stored"] == 1
        assert stats["malformed"] == 1


class TestOtaaJoin:
    def _server_with_otaa(self):
        server = make_server()
        server.register_device(
            DeviceRegistration(
                dev_id="node-otaa",
                app_id="fire-monitoring",
                activation=OtaaActivation("00E0136E0847D7F8", APPKEY),
            )
        )
        return server

    def _join_line(self, key_check=None, app_eui="70B3D57ED0014F64"):
        env = frames.encode_join_request(
            app_eui, "00E0136E0847D7F8", key_check or frames.appkey_check(APPKEY)
        )
        return UplinkMessage("B827EBFFFE7AD9C2", env, 915_200_000, 3, -110.0, 3.0).to_line()

    def test_join_assigns_address_and_requests_accept(self):
        server = self._server_with_otaa()
        requested = []
        server.request_downlink = lambda pkt, mode, now: requested.append(pkt)
        server.ingest_line(self._join_line())
        dev = server.devices["node-otaa"]
        assert dev.session_addr is not None
        assert requested and requested[0].target == "node-otaa"
        parsed = frames.parse(requested[0].payload_hex)
        assert parsed == {"kind": "join_accept", "dev_addr": dev.session_addr}

    def test_join_with_wrong_appkey_rejected(self):
        server = self._server_with_otaa()
        server.ingest_line(self._join_line(key_check="00000000"))
        assert server.counters["key_mismatch"] == 1
        assert server.devices["node-otaa"].session_addr is None

    def test_session_uplink_after_join(self):
        server = self._server_with_otaa()
        server.request_downlink = lambda *a: None
        server.ingest_line(self._join_line())
        addr = server.devices["node-otaa"].session_addr
        env = frames.encode_data_uplink(
            addr, 0, frames.appkey_check(APPKEY), encode_payload(10, 20, 25).hex()
        )
        line = UplinkMessage("B827EBFFFE7AD9C2", env, 915_200_000, 3, -110.0, 9.0).to_line()
        rec = server.ingest_line(line)
        assert rec is not None and rec.dev_id == "node-otaa"


class TestConfirmedAck:
    def test_ack_requested_for_confirmed_uplink(self):
        server = make_server()
        requested = []
        server.request_downlink = lambda pkt, mode, now: requested.append((pkt, mode))
        server.ingest_line(uplink_line(fcnt=4, confirmed=True, gw_time=7.0))
        assert len(requested) == 1
        pkt, mode = requested[0]
        assert mode.mode == "timestamp"
        parsed = frames.parse(pkt.payload_hex)
        assert parsed == {"kind": "ack", "dev_addr": "2603172D", "fcnt": 4}
        assert pkt.at_time == pytest.approx(8.0)


class TestPersistence:
    def test_store_written_and_byte_deterministic(self, tmp_path):
        def run(path):
            server = make_server(store_path=path)
            for fcnt in range(4):
                server.ingest_line(uplink_line(fcnt=fcnt, gw_time=float(fcnt)))
            server.close()
            return path.read_bytes()

        a = run(tmp_path / "a.jsonl")
        b = run(tmp_path / "b.jsonl")
        assert a == b
        first = json.loads(a.decode().splitlines()[0])
        assert first["dev_id"] == "node-1"

    def test_scenario_control_detached(self):
        server = make_server()
        out = server.scenario_control({"cmd": "inject_fire", "x": 0, "y": 0})
        assert out["ok"] is False and "unavailable" in out["error"]
