/**
 * Semicircular gauge logic.
 *
 * `gaugeFraction` is a faithful port of the dashboard's original value
 * scaling, discontinuities included: the divisor steps at 10, 100 and
 * 1000, so the output stays inside [0, 0.9999] for inputs 0..9999.
 */

export interface GaugeView {
  label: string;
  rawText: string;
  fraction: number;
  percentText: string;
}

export function gaugeFraction(value: unknown): number {
  if (typeof value !== "number" && typeof value !== "string") return 0;
  const num = Number(value);
  if (Number.isNaN(num)) return 0;
  const val = Math.trunc(num);
  if (val >= 1000) {
    return val / 10000;
  } else if (val >= 100) {
    return val / 1000;
  } else if (val >= 10) {
    return val / 100;
  } else {
    return val / 10;
  }
}

export function gaugeView(label: string, raw: unknown): GaugeView {
  const fraction = gaugeFraction(raw);
  return {
    label,
    rawText: `(${raw})`,
    fraction,
    percentText: `${Math.round(fraction * 100)}%`,
  };
}

export interface GaugeRender {
  rotationTurns: number;
  coverText: string;
}

/**
 * Visual state for a fill fraction: the fill rotates fraction/2 of a
 * turn and the cover shows the rounded percentage.  Out-of-range input
 * yields no update (null), mirroring the original guard.
 */
export function renderGauge(fraction: number): GaugeRender | null {
  if (fraction < 0 || fraction > 1) {
    return null;
  }
  return {
    rotationTurns: fraction / 2,
    coverText: `${Math.round(fraction * 100)}%`,
  };
}

/** Minimal element contract so the DOM appliers stay testable. */
export interface GaugeElements {
  fill: { style: { transform: string } };
  cover: { textContent: string };
  valueText: { textContent: string };
}

export function applyGauge(els: GaugeElements, view: GaugeView): void {
  const render = renderGauge(view.fraction);
  els.valueText.textContent = view.rawText;
  if (render === null) return;
  els.fill.style.transform = `rotate(${render.rotationTurns}turn)`;
  els.cover.textContent = render.coverText;
}
