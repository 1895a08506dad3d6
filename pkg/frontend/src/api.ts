/** Thin fetch wrappers over the model service. */

import type {
  DecisionResponse,
  FieldErrors,
  ModelDocument,
  PredictResponse,
} from './types';

export class ApiError extends Error {
  status: number;
  fieldErrors: FieldErrors;

  constructor(status: number, fieldErrors: FieldErrors, message?: string) {
    super(message ?? `service returned ${status}`);
    this.status = status;
    this.fieldErrors = fieldErrors;
  }
}

async function parseFailure(response: Response): Promise<never> {
  let fields: FieldErrors = {};
  try {
    const body = await response.json();
    if (body && typeof body === 'object' && 'errors' in body) {
      fields = body.errors as FieldErrors;
    }
  } catch {
    // non-JSON failure body; keep the empty field map
  }
  throw new ApiError(response.status, fields);
}

export async function fetchModel(baseUrl: string): Promise<ModelDocument> {
  const response = await fetch(`${baseUrl}/model`);
  if (!response.ok) await parseFailure(response);
  return (await response.json()) as ModelDocument;
}

export async function postPredict(
  baseUrl: string,
  features: Record<string, number>,
): Promise<PredictResponse> {
  const response = await fetch(`${baseUrl}/predict`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ features }),
  });
  if (!response.ok) await parseFailure(response);
  return (await response.json()) as PredictResponse;
}

export async function postDecision(
  baseUrl: string,
  features: Record<string, number>,
  threshold: number,
): Promise<DecisionResponse> {
  const response = await fetch(`${baseUrl}/decision`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify({ features, threshold }),
  });
  if (!response.ok) await parseFailure(response);
  return (await response.json()) as DecisionResponse;
}
