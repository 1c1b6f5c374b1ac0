/**
 * Per-device modal: three gauges (gas, fire, temp) fed live, titled with
 * the device id.  When the device has no fresh data the last-seen record
 * renders with a stale badge.
 */

import { applyGauge, gaugeView, GaugeElements } from "./gauge.js";
import { DeviceStore, UplinkEvent } from "./store.js";

const STALE_AFTER_S = 120;

function gaugeDom(root: HTMLElement, name: string): GaugeElements {
  return {
    fill: root.querySelector(`.gauge_${name} .gauge__fill`) as HTMLElement,
    cover: root.querySelector(`.gauge_${name} .gauge__cover`) as HTMLElement,
    valueText: root.querySelector(`.gauge_${name}_text`) as HTMLElement,
  };
}

export class DeviceModal {
  private devId: string | null = null;

  constructor(
    private root: HTMLElement,
    private store: DeviceStore,
  ) {
    store.subscribe((devId) => {
      if (devId === this.devId) this.refresh();
    });
    const close = this.root.querySelector(".modal-close");
    close?.addEventListener("click", () => this.hide());
  }

  show(devId: string): void {
    this.devId = devId;
    (this.root.querySelector(".modal-title") as HTMLElement).textContent = devId;
    this.root.classList.add("visible");
    this.refresh();
  }

  hide(): void {
    this.devId = null;
    this.root.classList.remove("visible");
  }

  get visibleDevice(): string | null {
    return this.devId;
  }

  refresh(now?: number): void {
    if (this.devId === null) return;
    const last = this.store.latestFor(this.devId);
    const badge = this.root.querySelector(".stale-badge") as HTMLElement;
    if (last === null) {
      badge.textContent = "no data yet";
      badge.classList.add("visible");
      return;
    }
    this.applyEvent(last);
    const age = (now ?? last.metadata.server_time) - last.metadata.server_time;
    if (age > STALE_AFTER_S) {
      badge.textContent = `stale — last seen t=${last.metadata.server_time.toFixed(1)}s`;
      badge.classList.add("visible");
    } else {
      badge.classList.remove("visible");
    }
  }

  private applyEvent(event: UplinkEvent): void {
    const f = event.payload_fields;
    applyGauge(gaugeDom(this.root, "gas"), gaugeView("gas", f.payload_gas ?? 0));
    applyGauge(gaugeDom(this.root, "fire"), gaugeView("fire", f.payload_fire ?? 0));
    applyGauge(gaugeDom(this.root, "temp"), gaugeView("temp", f.payload_temp ?? 0));
  }
}
