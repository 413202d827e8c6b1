/**
 * Thin client for the formatkit checker/reward service.
 *
 * Exposes exactly the pure surface an external training stack needs:
 * boundCheck (format verdicts as rewardable scores), boundReward (the
 * score-minus-weighted-log-ratio reward), and the native library version.
 * No state crosses the boundary; every call is independent.
 */

export interface BoundError {
  code: string;
  message: string;
  span: [number, number] | null;
}

export interface BoundVerdict {
  score: number;
  errors: BoundError[];
}

/** Raised when the service rejects a request; `code` is the native error code. */
export class FormatkitServiceError extends Error {
  readonly code: string;

  constructor(code: string, message: string) {
    super(`${code}: ${message}`);
    this.code = code;
    this.name = "FormatkitServiceError";
  }
}

const DEFAULT_BASE_URL = "http://127.0.0.1:8973";

let baseUrl =
  typeof process !== "undefined" && process.env.FORMATKIT_SERVICE_URL
    ? process.env.FORMATKIT_SERVICE_URL
    : DEFAULT_BASE_URL;

/** Point the client at a running service (default http://127.0.0.1:8973). */
export function configure(serviceBaseUrl: string): void {
  baseUrl = serviceBaseUrl.replace(/\/+$/, "");
}

async function post<T>(path: string, body: unknown): Promise<T> {
  const response = await fetch(`${baseUrl}${path}`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return unwrap<T>(response);
}

async function unwrap<T>(response: Response): Promise<T> {
  if (response.ok) {
    return (await response.json()) as T;
  }
  let code = `HTTP_${response.status}`;
  let message = response.statusText;
  try {
    const payload = (await response.json()) as {
      detail?: { code?: string; message?: string } | string;
    };
    if (typeof payload.detail === "object" && payload.detail !== null) {
      code = payload.detail.code ?? code;
      message = payload.detail.message ?? message;
    } else if (typeof payload.detail === "string") {
      message = payload.detail;
    }
  } catch {
    // non-JSON error body: keep the HTTP status text
  }
  throw new FormatkitServiceError(code, message);
}

interface WireError {
  code: string;
  message: string;
  span: [number, number] | null;
}

/**
 * Check one response against its task's format requirements.
 *
 * `instanceDoc` is the task instance in the dataset record schema (the
 * object may omit `task`; it is filled from `taskName`). The result mirrors
 * the native verdict field for field: score 1 with no errors, or -1 with a
 * nonempty error list.
 */
export async function boundCheck(
  taskName: string,
  instanceDoc: Record<string, unknown>,
  response: string,
): Promise<BoundVerdict> {
  const data = await post<{ score: number; errors: WireError[] }>("/check", {
    task: taskName,
    instance: instanceDoc,
    response,
  });
  return {
    score: data.score,
    errors: data.errors.map((e) => ({
      code: e.code,
      message: e.message,
      span: e.span === null ? null : [e.span[0], e.span[1]],
    })),
  };
}

/**
 * Checker-score reward with the weighted adapted/reference log-ratio
 * penalty: score - beta * (logpPhi - logpTheta), computed natively.
 */
export async function boundReward(
  score: number,
  logpPhi: number,
  logpTheta: number,
  beta: number,
): Promise<number> {
  const data = await post<{ reward: number }>("/reward", {
    score,
    logp_phi: logpPhi,
    logp_theta: logpTheta,
    beta,
  });
  return data.reward;
}

/** Version string of the native library the service wraps. */
export async function version(): Promise<string> {
  const response = await fetch(`${baseUrl}/version`);
  const data = await unwrap<{ version: string }>(response);
  return data.version;
}
