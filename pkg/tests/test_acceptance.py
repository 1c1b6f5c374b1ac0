"""Acceptance suite: one test per release criterion.

Each test prints a PASS/FAIL line (visible with ``pytest -s``) and pins
its tolerances inline.  Run the whole thing with::

    pytest tests/test_acceptance.py -v -s
"""

import json
import random
import string
import time
from contextlib import contextmanager

import numpy as np
import pytest

from firewatch import frames
from firewatch.cli import range_test_rows
from firewatch.engine import Simulation, boot_script_text
from firewatch.firmware import (
    RiskLevel,
    RiskThresholds,
    classify,
    decode_payload,
    encode_payload,
)
from firewatch.gateway import UplinkMessage
from firewatch.modem import VirtualModem, factory_state, handle_command
from firewatch.netserver import NetServer
from firewatch.phy import (
    LORA_BANDWIDTHS_HZ,
    SPREADING_FACTORS,
    ModulationParams,
    bit_rate,
    chip_rate,
    symbol_period,
)
from firewatch.scenario import parse_scenario

from test_netserver import make_server, uplink_line


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"FAIL: {name}")
        raise
    print(f"PASS: {name}")


def rel_err(a, b):
    return abs(a - b) / abs(b)


# ---------------------------------------------------------------------------


def test_modulation_numeric_suite():
    """Rate equations: reference values at 1e-9 relative, under 1 second."""
    with criterion("modulation numeric suite (1e-9 rel, <1 s)"):
        t0 = time.perf_counter()
        assert rel_err(symbol_period(ModulationParams(12, 125_000)), 0.032768) < 1e-9
        for sf in SPREADING_FACTORS:
            for bw in LORA_BANDWIDTHS_HZ:
                assert chip_rate(ModulationParams(sf, bw)) == bw
        assert rel_err(bit_rate(ModulationParams(7, 125_000, 1)), 5468.75) < 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"numeric suite took {elapsed:.3f} s"


def test_range_table_reproduction():
    """10k-trial range test lands on the measured table: delivery within
    +-2 points, median RSSI within +-1 dB, median latency within +-5%."""
    with criterion("range table reproduction (10k trials, <30 s)"):
        t0 = time.perf_counter()
        rows = range_test_rows((100.0, 200.0, 350.0, 700.0), 10_000, "urban", seed=20_26)
        expected_delivery = (100.0, 95.0, 10.0, 0.0)
        expected_rssi = (-112.0, -112.0, -115.0)
        expected_latency_ms = (51.5, 102.9, 185.3)
        for row, exp in zip(rows, expected_delivery):
            assert abs(row["delivery_pct"] - exp) <= 2.0, row
        for row, exp in zip(rows, expected_rssi):
            assert abs(row["median_rssi_dbm"] - exp) <= 1.0, row
        for row, exp in zip(rows, expected_latency_ms):
            assert abs(row["median_uplink_ms"] - exp) <= 0.05 * exp, row
        assert rows[3]["median_rssi_dbm"] is None  # nothing received at 700 m
        elapsed = time.perf_counter() - t0
        assert elapsed < 30.0, f"range test took {elapsed:.1f} s"


def _np_roundtrip_exhaustive():
    """Vectorized mirror of the codec over the full input product."""
    gas = np.repeat(np.arange(1024, dtype=np.int64), 1024)
    fire = np.tile(np.arange(1024, dtype=np.int64), 1024)
    for temp in range(-40, 81):
        b0, b1 = gas >> 8, gas & 0xFF
        b2, b3 = fire >> 8, fire & 0xFF
        t16 = np.int64(temp) & 0xFFFF
        b4, b5 = t16 >> 8, t16 & 0xFF
        g = (b0 << 8) | b1
        f = (b2 << 8) | b3
        t = (int(b4) << 8) | int(b5)
        t = t - 0x10000 if t >= 0x8000 else t
        assert (g == gas).all() and (f == fire).all() and t == temp


def test_payload_pipeline():
    """encode -> wire -> server decode, exhaustive round-trip, and the
    reference platform's shift-by-4 decoder bug pinned."""
    with criterion("payload pipeline (exhaustive round-trip + decoder regression)"):
        assert encode_payload(985, 400, 28).hex().upper() == "03D90190001C"

        server = make_server()
        rec = server.ingest_line(uplink_line(gas=985, fire=400, temp=28))
        assert rec.decoded == {"payload_gas": 985, "payload_fire": 400, "payload_temp": 28}

        # Real codec, exhaustive per axis in every cross position.
        for gas in range(1024):
            assert decode_payload(encode_payload(gas, 511, 28)) == (gas, 511, 28)
        for fire in range(1024):
            assert decode_payload(encode_payload(13, fire, -40)) == (13, fire, -40)
        for temp in range(-40, 81):
            assert decode_payload(encode_payload(1023, 0, temp)) == (1023, 0, temp)

        # Real codec against the vectorized mirror on random triples ...
        rng = random.Random(99)
        for _ in range(20_000):
            g, f, t = rng.randrange(1024), rng.randrange(1024), rng.randint(-40, 80)
            assert decode_payload(encode_payload(g, f, t)) == (g, f, t)
        # ... then the mirror closes the full 1024 x 1024 x 121 product.
        _np_roundtrip_exhaustive()

        # Fig-style regression: a shift of 4 cannot invert highByte/lowByte.
        hi, lo = 0x03, 0xD9
        assert (hi << 4) | lo == 249
        assert decode_payload(bytes.fromhex("03D90190001C"))[0] == 985


def test_risk_classifier_suite():
    """Measured risk bands, with boundary values landing on the higher level."""
    with criterion("risk classifier bands + boundaries"):
        th = RiskThresholds()
        assert classify(15, th.gas) == RiskLevel.NoRisk
        assert classify(250, th.gas) == RiskLevel.Alert
        assert classify(700, th.gas) == RiskLevel.Risk
        assert classify(25, th.temp) == RiskLevel.NoRisk
        assert classify(45, th.temp) == RiskLevel.Alert
        assert classify(70, th.temp) == RiskLevel.Risk
        assert classify(780, th.flame) == RiskLevel.NoRisk
        assert classify(950, th.flame) == RiskLevel.Alert
        assert classify(1100, th.flame) == RiskLevel.Risk
        assert classify(100, th.gas) == RiskLevel.Alert
        assert classify(600, th.gas) == RiskLevel.Risk
        assert classify(30, th.temp) == RiskLevel.Alert
        assert classify(60, th.temp) == RiskLevel.Risk
        assert classify(900, th.flame) == RiskLevel.Alert
        assert classify(1100, th.flame) == RiskLevel.Risk


def test_boot_script_replay():
    """The full firmware configuration script leaves the reference state."""
    with criterion("boot script replay (field-by-field modem state)"):
        modem = VirtualModem("ref")
        replies = modem.run_script(boot_script_text())
        assert all(r.ok for r in replies)
        s = modem.state
        assert s.mode == "LWABP"
        assert s.device_class == "A"
        assert s.dr_index == 3
        assert s.adr is True
        assert s.rxwin2_freq_hz == 923_300_000
        assert s.rxwin2_dr == 8
        expected = [915_200_000 + 200_000 * n for n in range(8)]
        assert [s.channels[n].freq_hz for n in range(8)] == expected
        assert all((s.channels[n].dr_min, s.channels[n].dr_max) == (2, 5) for n in range(8))
        assert all(not s.channels[n].enabled for n in range(8, 72))


FIRE_DRILL = {
    "seed": 7,
    "duration_s": 15,
    "environment": {"kind": "urban"},
    "gateway": {"gw_id": "B827EBFFFE7AD9C2", "position": [0, 0]},
    "application": {
        "app_id": "fire-monitoring",
        "app_eui": "70B3D57ED0014F64",
        "access_key": "drill-key",
    },
    "nodes": [
        {
            "dev_id": "drill-node",
            "dev_addr": "2603172D",
            "nwkskey": "F6012FAD4F28BEA501A4E9841D8A0EBC",
            "appskey": "A484A36F909D5A74D7456BBB2C511058",
            "position": [100, 0],
        }
    ],
}


def _drill_run(tmp_path, tag):
    out = tmp_path / tag
    sim = Simulation(
        parse_scenario(dict(FIRE_DRILL)),
        out_dir=out,
        commands=[{"t": 0.0, "cmd": "inject_fire", "x": 103.0, "y": 0.0, "intensity": 1.0}],
    )
    sub = sim.server.subscribe("fire-monitoring", "drill-key")
    sim.run()
    return sim, sub, (out / "store.jsonl").read_bytes()


def test_end_to_end_fire_drill(tmp_path):
    """Node 3 m from a full fire, gateway 100 m out: a Risk record lands
    within 15 sim-seconds, push matches the store 1:1, and reruns are
    byte-identical."""
    with criterion("end-to-end fire drill (Risk <=15 s, push==store, replayable)"):
        sim, sub, store_a = _drill_run(tmp_path, "a")
        records = sim.server.records
        assert records, "no uplinks reached the server"
        risky = [r for r in records if r.risk and r.risk["combined"] == "Risk"]
        assert risky and risky[0].server_time <= 15.0
        events = sub.drain()
        assert len(events) == len(records)
        assert [e["metadata"]["fcnt"] for e in events] == [r.fcnt for r in records]
        _, _, store_b = _drill_run(tmp_path, "b")
        assert store_a == store_b and len(store_a) > 0


def _random_at_lines(n):
    rng = random.Random(4242)
    alphabet = string.printable
    commands = ["AT", "AT+CH", "AT+DR", "AT+ID", "AT+KEY", "AT+MSGHEX", "AT+MODE",
                "AT+RXWIN2", "AT+CLASS", "AT+DELAY", "AT+ADR", "AT+LOWPOWER"]
    for _ in range(n):
        style = rng.randrange(3)
        if style == 0:
            yield "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 40)))
        elif style == 1:
            args = "".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 24)))
            yield f"{rng.choice(commands)}={args}"
        else:
            yield rng.choice(commands) + "".join(
                rng.choice(",=?0123456789abcdefXYZ\"") for _ in range(rng.randrange(0, 16))
            )


def _random_backhaul_lines(n):
    rng = random.Random(31337)
    for _ in range(n):
        style = rng.randrange(4)
        if style == 0:
            yield "".join(rng.choice(string.printable) for _ in range(rng.randrange(0, 60)))
        elif style == 1:
            yield json.dumps({"gw_id": rng.randrange(99), "x": "y"})
        elif style == 2:
            payload = "".join(rng.choice("0123456789ABCDEFXZ") for _ in range(rng.randrange(0, 50)))
            yield UplinkMessage("B827EBFFFE7AD9C2", "".join(
                c for c in payload if c in "0123456789ABCDEF"
            ), 915_200_000, 3, -112.0, 1.0).to_line()
        else:
            yield json.dumps([rng.random()] * rng.randrange(0, 4))


def test_robustness_fuzz():
    """10k random AT lines and 10k random backhaul lines: no crashes, and
    every ERROR reply leaves the modem state unchanged."""
    with criterion("robustness fuzz (10k AT + 10k backhaul lines)"):
        state = factory_state()
        for line in _random_at_lines(10_000):
            before = state
            state, reply = handle_command(state, line)
            assert reply.lines, f"empty reply for {line!r}"
            if not reply.ok:
                assert state == before, f"state changed on ERROR for {line!r}"

        server = make_server()
        for line in _random_backhaul_lines(10_000):
            server.ingest_line(line)  # must never raise
        assert server.counters["ingested_lines"] == 10_000
