/**
 * DOM wiring for the what-if risk explorer.
 *
 * One control per model term, a harm-benefit threshold slider, and a
 * density panel. Rapid input is debounced (250 ms) so at most one
 * request is in flight; every displayed number comes from the service.
 */

import { ApiError, fetchModel, postDecision, postPredict } from './api';
import {
  ControlSpec,
  buildControls,
  checkSchemaVersion,
  chipState,
  collectFeatures,
  densityGeometry,
  formatRisk,
  sliderToThreshold,
  summaryText,
  thresholdToSlider,
} from './state';
import type { ModelDocument, PredictResponse } from './types';

const DEBOUNCE_MS = 250;

interface Ui {
  banner: HTMLElement;
  controls: HTMLElement;
  chart: SVGSVGElement;
  summary: HTMLElement;
  chip: HTMLElement;
  readouts: HTMLElement;
  slider: HTMLInputElement;
  thresholdLabel: HTMLElement;
  baseUrl: HTMLInputElement;
  load: HTMLButtonElement;
}

function grab(): Ui {
  const get = (id: string) => {
    const el = document.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el;
  };
  return {
    banner: get('banner'),
    controls: get('controls'),
    chart: get('chart') as unknown as SVGSVGElement,
    summary: get('summary'),
    chip: get('chip'),
    readouts: get('readouts'),
    slider: get('threshold-slider') as HTMLInputElement,
    thresholdLabel: get('threshold-label'),
    baseUrl: get('base-url') as HTMLInputElement,
    load: get('load-model') as HTMLButtonElement,
  };
}

class Explorer {
  private ui: Ui;
  private doc: ModelDocument | null = null;
  private controls: ControlSpec[] = [];
  private lastPrediction: PredictResponse | null = null;
  private timer: number | null = null;
  private inFlight = false;
  private queued = false;

  constructor(ui: Ui) {
    this.ui = ui;
    ui.load.addEventListener('click', () => void this.loadModel());
    ui.slider.addEventListener('input', () => {
      this.renderThreshold();
      this.scheduleUpdate();
    });
  }

  get threshold(): number {
    return sliderToThreshold(Number(this.ui.slider.value));
  }

  async loadModel(): Promise<void> {
    const base = this.ui.baseUrl.value.replace(/\/$/, '');
    this.banner('Loading model…', false);
    try {
      const doc = await fetchModel(base);
      checkSchemaVersion(doc);
      this.doc = doc;
      this.controls = buildControls(doc);
      this.renderControls();
      this.banner('', false);
      this.renderThreshold();
      this.scheduleUpdate();
    } catch (error) {
      this.doc = null;
      const message =
        error instanceof Error ? error.message : 'service unreachable';
      this.banner(`Cannot load model: ${message}`, true);
    }
  }

  private banner(text: string, blocking: boolean): void {
    this.ui.banner.textContent = text;
    this.ui.banner.classList.toggle('blocking', blocking);
    if (blocking) {
      const retry = document.createElement('button');
      retry.textContent = 'retry';
      retry.addEventListener('click', () => void this.loadModel());
      this.ui.banner.append(' ');
      this.ui.banner.appendChild(retry);
    }
  }

  private renderControls(): void {
    this.ui.controls.replaceChildren();
    for (const control of this.controls) {
      const row = document.createElement('label');
      row.className = 'control-row';
      const caption = document.createElement('span');
      caption.textContent = control.name;
      row.appendChild(caption);
      const input = document.createElement('input');
      input.name = control.name;
      if (control.widget === 'toggle') {
        input.type = 'checkbox';
      } else {
        input.type = 'number';
        input.step = 'any';
      }
      input.addEventListener('input', () => this.scheduleUpdate());
      row.appendChild(input);
      if (control.hint) {
        const hint = document.createElement('small');
        hint.textContent = control.hint;
        row.appendChild(hint);
      }
      if (control.warning) {
        const warn = document.createElement('small');
        warn.className = 'warning';
        warn.textContent = control.warning;
        row.appendChild(warn);
      }
      const error = document.createElement('small');
      error.className = 'field-error';
      error.dataset.errorFor = control.name;
      row.appendChild(error);
      this.ui.controls.appendChild(row);
    }
  }

  private rawValues(): Record<string, string | boolean> {
    const raw: Record<string, string | boolean> = {};
    this.ui.controls
      .querySelectorAll<HTMLInputElement>('input')
      .forEach((input) => {
        raw[input.name] = input.type === 'checkbox' ? input.checked : input.value;
      });
    return raw;
  }

  private renderThreshold(): void {
    const z = this.threshold;
    this.ui.thresholdLabel.textContent = `threshold z = ${(100 * z).toFixed(
      z < 0.1 ? 2 : 1,
    )}%`;
    // flip the chip immediately from the last served posterior mean;
    // the debounced /decision call re-confirms
    if (this.lastPrediction) {
      this.renderChip(chipState(this.lastPrediction.post_mean, z));
    }
  }

  private renderChip(state: 'treat' | 'no-treat'): void {
    this.ui.chip.textContent = state === 'treat' ? 'TREAT' : 'NO TREAT';
    this.ui.chip.className = `chip ${state}`;
  }

  private scheduleUpdate(): void {
    if (this.timer !== null) window.clearTimeout(this.timer);
    this.timer = window.setTimeout(() => {
      this.timer = null;
      void this.update();
    }, DEBOUNCE_MS);
  }

  private async update(): Promise<void> {
    if (!this.doc) return;
    if (this.inFlight) {
      this.queued = true;
      return;
    }
    const { features, missing } = collectFeatures(this.controls, this.rawValues());
    this.clearFieldErrors();
    if (missing.length > 0) {
      for (const name of missing) this.fieldError(name, 'required');
      return;
    }
    const base = this.ui.baseUrl.value.replace(/\/$/, '');
    this.inFlight = true;
    try {
      const prediction = await postPredict(base, features);
      const decision = await postDecision(base, features, this.threshold);
      this.lastPrediction = prediction;
      this.renderPrediction(prediction);
      this.renderChip(decision.decision);
    } catch (error) {
      if (error instanceof ApiError) {
        for (const [field, message] of Object.entries(error.fieldErrors)) {
          this.fieldError(field, message);
        }
      } else {
        this.banner('Service unreachable during update.', true);
      }
    } finally {
      this.inFlight = false;
      if (this.queued) {
        this.queued = false;
        this.scheduleUpdate();
      }
    }
  }

  private clearFieldErrors(): void {
    this.ui.controls
      .querySelectorAll<HTMLElement>('.field-error')
      .forEach((el) => (el.textContent = ''));
  }

  private fieldError(name: string, message: string): void {
    const slot = this.ui.controls.querySelector<HTMLElement>(
      `[data-error-for="${name}"]`,
    );
    if (slot) slot.textContent = message;
  }

  private renderPrediction(prediction: PredictResponse): void {
    const geometry = densityGeometry(prediction);
    const svg = this.ui.chart;
    const W = 640;
    const H = 240;
    const pad = 24;
    const px = (x: number) => pad + x * (W - 2 * pad);
    const py = (y: number) => H - pad - y * (H - 2 * pad);
    const parts: string[] = [];
    parts.push(
      `<line x1="${px(0)}" y1="${py(0)}" x2="${px(1)}" y2="${py(0)}" class="axis"/>`,
    );
    if (geometry.spike) {
      const x = px(geometry.spike.x);
      parts.push(`<line x1="${x}" y1="${py(0)}" x2="${x}" y2="${py(1)}" class="spike"/>`);
      parts.push(
        `<text x="${x + 4}" y="${py(0.95)}" class="marker-label">` +
          `point prediction (zero-width interval)</text>`,
      );
    } else {
      const band = geometry.band
        .map((pt) => `${px(pt.x)},${py(pt.y)}`)
        .join(' ');
      parts.push(`<polygon points="${band}" class="cri-band"/>`);
      const curve = geometry.curve
        .map((pt) => `${px(pt.x)},${py(pt.y)}`)
        .join(' ');
      parts.push(`<polyline points="${curve}" class="density"/>`);
      for (const marker of geometry.markers) {
        const x = px(marker.x);
        parts.push(
          `<line x1="${x}" y1="${py(0)}" x2="${x}" y2="${py(marker.y)}" class="marker"/>`,
        );
        parts.push(
          `<text x="${x + 4}" y="${py(marker.y) - 4}" class="marker-label">${marker.label}</text>`,
        );
      }
    }
    svg.innerHTML = parts.join('');
    this.ui.summary.textContent = summaryText(prediction);
    this.ui.readouts.replaceChildren();
    const rows: Array<[string, string]> = [
      ['plug-in', formatRisk(prediction.plug_in)],
      ['posterior mean', formatRisk(prediction.post_mean)],
      ['95% CrI low', formatRisk(prediction.cri[0])],
      ['95% CrI high', formatRisk(prediction.cri[1])],
      ['method', prediction.method],
    ];
    for (const [label, value] of rows) {
      const div = document.createElement('div');
      div.innerHTML = `<span>${label}</span><code>${value}</code>`;
      this.ui.readouts.appendChild(div);
    }
  }
}

export function start(): void {
  const ui = grab();
  ui.slider.min = '0';
  ui.slider.max = '1';
  ui.slider.step = '0.001';
  ui.slider.value = String(thresholdToSlider(0.05));
  new Explorer(ui);
}

if (typeof document !== 'undefined' && document.getElementById('controls')) {
  start();
}
