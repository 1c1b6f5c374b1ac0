/**
 * Client-side device state: registrations from the query API plus the
 * latest live record per device.  Marker color is a pure function of the
 * latest record's combined risk level.
 */

export type RiskName = "NoRisk" | "Alert" | "Risk";

export interface UplinkEvent {
  dev_id: string;
  payload_fields: {
    payload_gas?: number;
    payload_fire?: number;
    payload_temp?: number;
  };
  metadata: {
    fcnt: number;
    server_time: number;
    rssi: number;
    risk: { gas: string; fire: string; temp: string; combined: RiskName } | null;
  };
}

export interface DeviceInfo {
  dev_id: string;
  position: [number, number];
}

export interface DeviceMarker {
  devId: string;
  position: [number, number];
  color: string;
  lastSeen: number | null;
  risk: RiskName | null;
}

export const RISK_COLORS: Record<RiskName, string> = {
  NoRisk: "#2e9e4f", // green
  Alert: "#e6a817", // amber
  Risk: "#d9342b", // red
};

export const NO_DATA_COLOR = "#7a8288";

export function markerColor(risk: RiskName | null): string {
  return risk === null ? NO_DATA_COLOR : RISK_COLORS[risk];
}

export class DeviceStore {
  private devices = new Map<string, DeviceInfo>();
  private latest = new Map<string, UplinkEvent>();
  private listeners: Array<(devId: string) => void> = [];

  setDevices(infos: DeviceInfo[]): void {
    this.devices.clear();
    for (const info of infos) this.devices.set(info.dev_id, info);
  }

  moveDevice(devId: string, position: [number, number]): void {
    const dev = this.devices.get(devId);
    if (dev) dev.position = position;
  }

  /** Last-write-wins per device. */
  onUplink(event: UplinkEvent): void {
    this.latest.set(event.dev_id, event);
    for (const fn of this.listeners) fn(event.dev_id);
  }

  latestFor(devId: string): UplinkEvent | null {
    return this.latest.get(devId) ?? null;
  }

  subscribe(fn: (devId: string) => void): void {
    this.listeners.push(fn);
  }

  markers(): DeviceMarker[] {
    const out: DeviceMarker[] = [];
    for (const dev of this.devices.values()) {
      const last = this.latest.get(dev.dev_id);
      const risk = last?.metadata.risk?.combined ?? null;
      out.push({
        devId: dev.dev_id,
        position: dev.position,
        color: markerColor(risk),
        lastSeen: last ? last.metadata.server_time : null,
        risk,
      });
    }
    return out;
  }
}
