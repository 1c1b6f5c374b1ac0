/**
 * Dashboard wiring: query API for registrations, live channel for
 * updates, map + modal + steering controls.
 */

import { LiveClient, liveUrl } from "./live.js";
import { MapView, MapMode } from "./map.js";
import { DeviceModal } from "./modal.js";
import { DeviceStore } from "./store.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function toast(text: string, isError = false): void {
  const box = el<HTMLDivElement>("toasts");
  const item = document.createElement("div");
  item.className = isError ? "toast toast-error" : "toast";
  item.textContent = text;
  box.appendChild(item);
  setTimeout(() => item.remove(), 4000);
}

async function fetchDevices(appId: string, key: string): Promise<any[]> {
  const resp = await fetch(`/api/apps/${encodeURIComponent(appId)}/devices?key=${encodeURIComponent(key)}`);
  if (!resp.ok) throw new Error(`device query failed: HTTP ${resp.status}`);
  return resp.json();
}

async function start(appId: string, key: string): Promise<void> {
  const store = new DeviceStore();
  const devices = await fetchDevices(appId, key);
  store.setDevices(devices.map((d) => ({ dev_id: d.dev_id, position: d.position })));

  const modal = new DeviceModal(el("modalDevice"), store);
  const status = el<HTMLSpanElement>("conn-status");
  const steerButtons = Array.from(document.querySelectorAll<HTMLButtonElement>(".steer"));

  const map = new MapView(el("map"), store, {
    onMarkerClick: (devId) => modal.show(devId),
    onGroundClick: (x, y) => void groundClick(x, y),
    onFireClick: (fireId) => void extinguish(fireId),
  });

  const live = new LiveClient(liveUrl(appId, key), {
    onUplink: (event) => {
      store.onUplink(event);
      map.render();
    },
    onStateChange: (connected) => {
      status.textContent = connected ? "live" : "disconnected";
      status.className = connected ? "status-ok" : "status-bad";
      for (const b of steerButtons) b.disabled = !connected;
      if (!connected) setMode("select");
    },
  });

  let selectedNode: string | null = null;

  function setMode(mode: MapMode): void {
    map.mode = mode;
    for (const b of steerButtons) b.classList.toggle("active", b.dataset.mode === mode);
    el("map").dataset.mode = mode;
  }

  async function groundClick(x: number, y: number): Promise<void> {
    if (map.mode === "fire") {
      const intensity = Number(el<HTMLInputElement>("intensity").value);
      const result = await live.control({ cmd: "inject_fire", x, y, intensity });
      if (result.ok && typeof result.fire_id === "number") {
        map.addFire({ fireId: result.fire_id, x, y, intensity });
        toast(`fire ${result.fire_id} injected at (${x}, ${y})`);
      } else {
        toast(result.error ?? "inject rejected", true);
      }
    } else if (map.mode === "node") {
      if (!selectedNode) {
        toast("pick a device first (click its marker in node mode)", true);
        return;
      }
      const moved = selectedNode;
      const before = store.markers().find((m) => m.devId === moved)?.position;
      store.moveDevice(moved, [x, y]);
      map.render();
      const result = await live.control({ cmd: "move_node", dev_id: moved, x, y });
      if (!result.ok) {
        if (before) store.moveDevice(moved, before); // roll back
        map.render();
        toast(result.error ?? "move rejected", true);
      } else {
        toast(`${moved} moved to (${x}, ${y})`);
      }
    }
  }

  async function extinguish(fireId: number): Promise<void> {
    const result = await live.control({ cmd: "extinguish", fire_id: fireId });
    if (result.ok) {
      map.removeFire(fireId);
      toast(`fire ${fireId} extinguished`);
    } else {
      toast(result.error ?? "extinguish rejected", true);
    }
  }

  for (const b of steerButtons) {
    b.addEventListener("click", () => setMode(b.dataset.mode as MapMode));
  }
  el("map").addEventListener("click", (ev) => {
    const marker = (ev.target as HTMLElement).closest(".marker") as HTMLElement | null;
    if (marker && map.mode === "node") {
      selectedNode = marker.dataset.devId ?? null;
      toast(`selected ${selectedNode}; click the map to move it`);
    }
  });

  live.connect();
  map.render();
  setMode("select");
}

function boot(): void {
  const form = el<HTMLFormElement>("connect-form");
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const appId = el<HTMLInputElement>("app-id").value.trim();
    const key = el<HTMLInputElement>("access-key").value.trim();
    start(appId, key)
      .then(() => el("connect-panel").classList.add("hidden"))
      .catch((err) => toast(String(err), true));
  });
}

boot();
