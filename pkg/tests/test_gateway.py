import json

import pytest

from firewatch.gateway import (
    DownlinkError,
    DownlinkPacket,
    Gateway,
    TxMode,
    UplinkMessage,
)
from firewatch.medium import RadioFrame, ReceivedFrame


def _rx(rssi=-112.0, rx_time=5.0, payload="400102", freq=915_200_000, dr=3):
    frame = RadioFrame(payload, freq, dr, rx_time - 1.0, 0.1, "n1")
    return ReceivedFrame(frame=frame, rssi=rssi, rx_time=rx_time)


def collector():
    lines = []
    return lines, lines.append


class TestForwarding:
    def test_metadata_passthrough(self):
        lines, send = collector()
        gw = Gateway("00000000AABBCCDD", (0, 0), send_line=send)
        msg = gw.on_receive(_rx(rssi=-112.0))
        assert msg.rssi_dbm == -112.0
        assert len(lines) == 1
        obj = json.loads(lines[0])
        assert obj["rssi_dbm"] == -112.0
        assert obj["gw_id"] == "00000000AABBCCDD"

    def test_wire_format_field_names(self):
        msg = UplinkMessage("A" * 16, "400102", 915_200_000, 3, -112.5, 12.25)
        obj = json.loads(msg.to_line())
        assert set(obj) == {"gw_id", "dev_payload_hex", "freq_hz", "dr", "rssi_dbm", "gw_time_s"}

    def test_wire_format_golden(self, golden_dir):
        msg = UplinkMessage(
            gw_id="B827EBFFFE7AD9C2",
            dev_payload_hex="402603172D000000F2A1B3C403D90190001C",
            freq_hz=915_200_000,
            dr=3,
            rssi_dbm=-112.0,
            gw_time_s=5.1875,
        )
        expected = (golden_dir / "backhaul_line.json").read_text().strip()
        assert msg.to_line() == expected
        back = UplinkMessage.from_line(expected)
        assert back == msg

    def test_backhaul_down_buffers_fifo(self):
        lines, send = collector()
        gw = Gateway("A" * 16, (0, 0), send_line=send)
        gw.set_backhaul(False)
        for i in range(3):
            gw.on_receive(_rx(rx_time=float(i)))
        assert lines == []
        gw.set_backhaul(True)
        assert len(lines) == 3
        times = [json.loads(ln)["gw_time_s"] for ln in lines]
        assert times == [0.0, 1.0, 2.0]

    def test_overflow_drops_oldest_with_counter(self):
        lines, send = collector()
        gw = Gateway("A" * 16, (0, 0), send_line=send, queue_limit=1024)
        gw.set_backhaul(False)
        for i in range(1025):
            gw.on_receive(_rx(rx_time=float(i)))
        assert gw.stats["buffer_drops"] == 1
        gw.set_backhaul(True)
        assert len(lines) == 1024
        assert json.loads(lines[0])["gw_time_s"] == 1.0  # oldest (0.0) was dropped


class TestDownlinkScheduling:
    def _gw(self):
        emitted = []
        gw = Gateway("A" * 16, (0, 0), emit_downlink=lambda p, t: emitted.append((p, t)))
        return gw, emitted

    def _pkt(self, **kw):
        return DownlinkPacket(target="n1", payload_hex="600102030400AA",
                              freq_hz=915_200_000, dr=3, **kw)

    def test_immediate_with_tx_start_delay(self):
        gw, emitted = self._gw()
        t = gw.schedule_downlink(self._pkt(), TxMode("immediate", 0.0005), now=10.0)
        assert t == 10.0005
        assert emitted[0][1] == 10.0005

    def test_triggered_adds_lead(self):
        gw, emitted = self._gw()
        t = gw.schedule_downlink(self._pkt(trigger_time=20.0), TxMode("triggered"), now=20.0)
        assert t == pytest.approx(20.0015)

    def test_timestamp_mode_emits_at_carimbo(self):
        gw, emitted = self._gw()
        t = gw.schedule_downlink(self._pkt(at_time=42.0), TxMode("timestamp"), now=40.0)
        assert t == 42.0
        assert gw.log  # modem prep lead is logged, not simulated

    def test_timestamp_in_past_rejected(self):
        gw, _ = self._gw()
        with pytest.raises(DownlinkError, match="too late"):
            gw.schedule_downlink(self._pkt(at_time=5.0), TxMode("timestamp"), now=10.0)

    def test_bad_mode_rejected(self):
        with pytest.raises(DownlinkError):
            TxMode("warp")
        with pytest.raises(DownlinkError):
            TxMode("immediate", -1.0)
