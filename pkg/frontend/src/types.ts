/** Wire types for the credence model service. */

export interface TermTransform {
  type: 'cap_above' | 'cap_below';
  value: number;
}

export interface TermDescriptor {
  name: string;
  kind: string;
  transform: TermTransform | null;
}

export interface ModelDocument {
  schema_version: string;
  link: string;
  terms: TermDescriptor[];
  beta: number[];
  sigma: number[];
  prior: { variant: string; [key: string]: unknown };
  quadrature_k: number;
  provenance: Record<string, unknown>;
}

/** One density sample: [probability, density value]. */
export type DensityPoint = [number, number];

export interface PredictResponse {
  plug_in: number;
  post_mean: number;
  cri: [number, number];
  method: string;
  density: DensityPoint[] | null;
}

export interface DecisionResponse {
  decision: 'treat' | 'no-treat';
  post_mean: number;
  net_benefit: number;
}

export type FieldErrors = Record<string, string>;
