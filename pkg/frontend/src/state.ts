/**
 * Pure view-state logic for the risk explorer.
 *
 * Everything here is rendering arithmetic over numbers served by the
 * model service; no risk quantity is computed client-side.
 */

import type {
  DensityPoint,
  ModelDocument,
  PredictResponse,
  TermDescriptor,
} from './types';

export const SUPPORTED_SCHEMA_VERSION = '1';

/** Throws when the served document speaks a different schema version. */
export function checkSchemaVersion(doc: ModelDocument): void {
  if (doc.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    throw new Error(
      `model schema_version ${JSON.stringify(doc.schema_version)} is not ` +
        `supported (expected "${SUPPORTED_SCHEMA_VERSION}")`,
    );
  }
}

export interface ControlSpec {
  name: string;
  widget: 'toggle' | 'number';
  hint: string;
  /** Set when the term kind is unknown and a generic control is used. */
  warning?: string;
}

function transformHint(term: TermDescriptor): string {
  if (!term.transform) return '';
  return term.transform.type === 'cap_above'
    ? `capped at ${term.transform.value}`
    : `floored at ${term.transform.value}`;
}

/** One input control per served term, in term order. */
export function buildControls(doc: ModelDocument): ControlSpec[] {
  return doc.terms.map((term) => {
    const hints: string[] = [];
    const t = transformHint(term);
    if (t) hints.push(t);
    if (term.kind === 'binary') {
      return { name: term.name, widget: 'toggle' as const, hint: hints.join('; ') };
    }
    if (term.kind === 'ordinal') {
      hints.unshift('integer');
      return { name: term.name, widget: 'number' as const, hint: hints.join('; ') };
    }
    if (term.kind === 'continuous') {
      return { name: term.name, widget: 'number' as const, hint: hints.join('; ') };
    }
    return {
      name: term.name,
      widget: 'number' as const,
      hint: hints.join('; '),
      warning: `unknown term kind "${term.kind}"; treating as numeric`,
    };
  });
}

/** Fixed-point rendering used for the numeric readouts (6 decimals). */
export function formatRisk(value: number): string {
  return value.toFixed(6);
}

export function formatPercent(value: number): string {
  return `${(100 * value).toFixed(1)}%`;
}

/** Patient-facing sentence under the chart. */
export function summaryText(prediction: PredictResponse, level = 0.95): string {
  const [lo, hi] = prediction.cri;
  const pct = Math.round(level * 100);
  return (
    `In people with the same characteristics, the expected risk is ` +
    `${formatPercent(prediction.post_mean)} ` +
    `(${pct}% CrI ${formatPercent(lo)}–${formatPercent(hi)}).`
  );
}

/**
 * Treat/no-treat chip state from the served posterior mean: treat on
 * ties, flipping exactly where post_mean crosses the threshold.
 */
export function chipState(postMean: number, threshold: number): 'treat' | 'no-treat' {
  return postMean >= threshold ? 'treat' : 'no-treat';
}

// Threshold slider: two log decades over [0.001, 0.1] occupy the first
// 60% of the travel so that 2%, 5%, 10% thresholds are easy to hit;
// the rest is linear up to 0.99.
const SLIDER_BREAK = 0.6;
const LOG_MIN = 0.001;
const LOG_MAX = 0.1;
const LIN_MAX = 0.99;

export function sliderToThreshold(position: number): number {
  const s = Math.min(Math.max(position, 0), 1);
  if (s <= SLIDER_BREAK) {
    const decades = Math.log10(LOG_MAX / LOG_MIN);
    return LOG_MIN * Math.pow(10, (s / SLIDER_BREAK) * decades);
  }
  return LOG_MAX + ((s - SLIDER_BREAK) / (1 - SLIDER_BREAK)) * (LIN_MAX - LOG_MAX);
}

export function thresholdToSlider(threshold: number): number {
  const z = Math.min(Math.max(threshold, LOG_MIN), LIN_MAX);
  if (z <= LOG_MAX) {
    const decades = Math.log10(LOG_MAX / LOG_MIN);
    return (Math.log10(z / LOG_MIN) / decades) * SLIDER_BREAK;
  }
  return SLIDER_BREAK + ((z - LOG_MAX) / (LIN_MAX - LOG_MAX)) * (1 - SLIDER_BREAK);
}

export interface Marker {
  x: number;
  y: number;
  label: string;
}

export interface DensityGeometry {
  /** Polyline through the served grid, linear interpolation only. */
  curve: Array<{ x: number; y: number }>;
  /** Closed polygon shading the credible band under the curve. */
  band: Array<{ x: number; y: number }>;
  markers: Marker[];
  /** Degenerate posterior: render a spike at the plug-in value. */
  spike: { x: number } | null;
  yMax: number;
}

function interpolate(density: DensityPoint[], p: number): number {
  if (p <= density[0][0]) return density[0][1];
  const last = density[density.length - 1];
  if (p >= last[0]) return last[1];
  for (let i = 1; i < density.length; i += 1) {
    const [p1, f1] = density[i];
    if (p <= p1) {
      const [p0, f0] = density[i - 1];
      const w = (p - p0) / (p1 - p0);
      return f0 + w * (f1 - f0);
    }
  }
  return last[1];
}

/**
 * Chart-space geometry (unit square, y growing upward) for the served
 * density, credible band, and the two point-summary markers. The band
 * endpoints are exactly the served interval bounds.
 */
export function densityGeometry(prediction: PredictResponse): DensityGeometry {
  const { density, cri, plug_in: plugIn, post_mean: postMean } = prediction;
  if (!density || density.length === 0) {
    return {
      curve: [],
      band: [],
      markers: [{ x: plugIn, y: 1, label: 'plug-in = posterior mean' }],
      spike: { x: plugIn },
      yMax: 1,
    };
  }
  const yMax = Math.max(...density.map(([, f]) => f));
  const curve = density.map(([p, f]) => ({ x: p, y: f / yMax }));
  const [lo, hi] = cri;
  const inside = density.filter(([p]) => p > lo && p < hi);
  const band = [
    { x: lo, y: 0 },
    { x: lo, y: interpolate(density, lo) / yMax },
    ...inside.map(([p, f]) => ({ x: p, y: f / yMax })),
    { x: hi, y: interpolate(density, hi) / yMax },
    { x: hi, y: 0 },
  ];
  const markers = [
    { x: plugIn, y: interpolate(density, plugIn) / yMax, label: 'plug-in' },
    { x: postMean, y: interpolate(density, postMean) / yMax, label: 'posterior mean' },
  ];
  return { curve, band, markers, spike: null, yMax };
}

/**
 * Collect raw form values into a feature payload. Presence is the only
 * client-side check; the service is the authority on domains.
 */
export function collectFeatures(
  controls: ControlSpec[],
  raw: Record<string, string | boolean>,
): { features: Record<string, number>; missing: string[] } {
  const features: Record<string, number> = {};
  const missing: string[] = [];
  for (const control of controls) {
    const value = raw[control.name];
    if (control.widget === 'toggle') {
      features[control.name] = value === true || value === '1' ? 1 : 0;
      continue;
    }
    if (value === undefined || value === '') {
      missing.push(control.name);
      continue;
    }
    features[control.name] = Number(value);
  }
  return { features, missing };
}
