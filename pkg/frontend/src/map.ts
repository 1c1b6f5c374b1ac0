/**
 * Planar device map.
 *
 * Scenario coordinates are meters around the gateway; this view scales
 * them into the viewport.  A tile URL template can be configured for a
 * real map backdrop; without one the offline single-color fallback is
 * used.  Interaction modes: "select" opens a device modal, "fire" sends
 * inject-fire at the clicked ground position, "node" moves the selected
 * device there.
 */

import { DeviceStore } from "./store.js";

export type MapMode = "select" | "fire" | "node";

export interface FireIcon {
  fireId: number;
  x: number;
  y: number;
  intensity: number;
}

export interface MapCallbacks {
  onMarkerClick?: (devId: string) => void;
  onGroundClick?: (x: number, y: number) => void;
  onFireClick?: (fireId: number) => void;
}

const PADDING_M = 60;

export class MapView {
  mode: MapMode = "select";
  fires: FireIcon[] = [];
  private bounds = { minX: -100, maxX: 100, minY: -100, maxY: 100 };

  constructor(
    private root: HTMLElement,
    private store: DeviceStore,
    private callbacks: MapCallbacks = {},
    private tileUrl: string | null = null,
  ) {
    this.root.classList.add("map");
    if (this.tileUrl === null) this.root.classList.add("map-offline");
    this.root.addEventListener("click", (ev) => this.handleClick(ev));
  }

  fitBounds(): void {
    const xs: number[] = [0];
    const ys: number[] = [0];
    for (const m of this.store.markers()) {
      xs.push(m.position[0]);
      ys.push(m.position[1]);
    }
    for (const f of this.fires) {
      xs.push(f.x);
      ys.push(f.y);
    }
    this.bounds = {
      minX: Math.min(...xs) - PADDING_M,
      maxX: Math.max(...xs) + PADDING_M,
      minY: Math.min(...ys) - PADDING_M,
      maxY: Math.max(...ys) + PADDING_M,
    };
  }

  toScreen(x: number, y: number): [number, number] {
    const { minX, maxX, minY, maxY } = this.bounds;
    const w = this.root.clientWidth || 800;
    const h = this.root.clientHeight || 600;
    const px = ((x - minX) / (maxX - minX)) * w;
    const py = h - ((y - minY) / (maxY - minY)) * h; // north up
    return [px, py];
  }

  toGround(px: number, py: number): [number, number] {
    const { minX, maxX, minY, maxY } = this.bounds;
    const w = this.root.clientWidth || 800;
    const h = this.root.clientHeight || 600;
    const x = minX + (px / w) * (maxX - minX);
    const y = minY + ((h - py) / h) * (maxY - minY);
    return [x, y];
  }

  private handleClick(ev: MouseEvent): void {
    const target = ev.target as HTMLElement;
    const marker = target.closest(".marker") as HTMLElement | null;
    if (marker && this.mode !== "node") {
      this.callbacks.onMarkerClick?.(marker.dataset.devId!);
      return;
    }
    const fire = target.closest(".fire-icon") as HTMLElement | null;
    if (fire) {
      this.callbacks.onFireClick?.(Number(fire.dataset.fireId));
      return;
    }
    if (this.mode === "fire" || this.mode === "node") {
      const rect = this.root.getBoundingClientRect();
      const [x, y] = this.toGround(ev.clientX - rect.left, ev.clientY - rect.top);
      this.callbacks.onGroundClick?.(Math.round(x * 10) / 10, Math.round(y * 10) / 10);
    }
  }

  addFire(fire: FireIcon): void {
    this.fires.push(fire);
    this.render();
  }

  removeFire(fireId: number): void {
    this.fires = this.fires.filter((f) => f.fireId !== fireId);
    this.render();
  }

  render(): void {
    this.fitBounds();
    this.root.replaceChildren();

    // gateway at the origin
    const gw = document.createElement("div");
    gw.className = "gateway-icon";
    gw.title = "gateway";
    const [gx, gy] = this.toScreen(0, 0);
    gw.style.left = `${gx}px`;
    gw.style.top = `${gy}px`;
    this.root.appendChild(gw);

    for (const m of this.store.markers()) {
      const el = document.createElement("div");
      el.className = "marker";
      el.dataset.devId = m.devId;
      el.style.background = m.color;
      const [px, py] = this.toScreen(m.position[0], m.position[1]);
      el.style.left = `${px}px`;
      el.style.top = `${py}px`;
      el.title = `${m.devId} (${m.risk ?? "no data"})`;
      const label = document.createElement("span");
      label.className = "marker-label";
      label.textContent = m.devId;
      el.appendChild(label);
      this.root.appendChild(el);
    }

    for (const f of this.fires) {
      const el = document.createElement("div");
      el.className = "fire-icon";
      el.dataset.fireId = String(f.fireId);
      el.textContent = "\u{1F525}";
      el.title = `fire ${f.fireId} (intensity ${f.intensity}) — click to extinguish`;
      const [px, py] = this.toScreen(f.x, f.y);
      el.style.left = `${px}px`;
      el.style.top = `${py}px`;
      this.root.appendChild(el);
    }
  }
}
