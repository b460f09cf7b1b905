/** Typed client for the session service. The UI never derives amounts or
 * schedules itself; everything displayed comes from these payloads. */

export interface ChoiceTrialPayload {
  interval: number;
  now_amount: number;
  later_amount: number;
  later_amount_display: number;
  index_global: number;
  index_within: number;
}

export interface MagnitudeTrialPayload {
  interval: number;
  repetition_index: number;
  is_training: boolean;
  index_global: number;
  line_px_max: number;
  response_window_s: number;
}

export type TrialEnvelope<T> =
  | { complete: true; status?: string }
  | { complete: false; trial_token: string; trial: T };

export interface SessionInfo {
  session_id: string;
  task: "choice" | "magnitude";
  subject_id: string;
  task_order: string;
  seed: number;
}

export interface ResponseAck {
  accepted: boolean;
  next_available: boolean;
  status: string;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    const body = await resp.text();
    throw new ApiError(resp.status, `${resp.status}: ${body}`);
  }
  return (await resp.json()) as T;
}

export class SessionApi {
  constructor(private baseUrl: string) {}

  async createSession(
    task: "choice" | "magnitude",
    subjectId?: string,
    seed?: number,
  ): Promise<SessionInfo> {
    const body: Record<string, unknown> = { task };
    if (subjectId !== undefined) body.subject_id = subjectId;
    if (seed !== undefined) body.seed = seed;
    const resp = await fetch(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    return asJson<SessionInfo>(resp);
  }

  /** Idempotent: re-fetching returns the same trial until it is answered,
   * which is what makes mid-session refresh and retry-after-network-error
   * safe. */
  async nextTrial<T>(sessionId: string, retries = 2): Promise<TrialEnvelope<T>> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= retries; attempt++) {
      try {
        const resp = await fetch(`${this.baseUrl}/sessions/${sessionId}/next-trial`);
        return await asJson<TrialEnvelope<T>>(resp);
      } catch (err) {
        lastError = err;
        if (err instanceof ApiError) throw err;
      }
    }
    throw lastError;
  }

  async postResponse(
    sessionId: string,
    payload: Record<string, unknown>,
  ): Promise<ResponseAck> {
    const resp = await fetch(`${this.baseUrl}/sessions/${sessionId}/response`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return asJson<ResponseAck>(resp);
  }

  async results<T>(sessionId: string): Promise<T> {
    const resp = await fetch(`${this.baseUrl}/sessions/${sessionId}/results`);
    return asJson<T>(resp);
  }

  async instructions(): Promise<Record<string, Record<string, Record<string, string>>>> {
    const resp = await fetch(`${this.baseUrl}/instructions`);
    return asJson(resp);
  }
}
