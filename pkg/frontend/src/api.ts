/** Typed client for the session service JSON protocol (docs/api_schema.json). */

export interface ThresholdPayload {
  value: number | "NaN";
  reversal_values: (number | "NaN")[];
  saturated: boolean;
}

export interface NextPending {
  complete: false;
  stimulus_index: number;
  level: number;
  onset_s: number;
  response_deadline_s: number;
  server_time_s: number;
}

export interface NextComplete {
  complete: true;
  threshold: ThresholdPayload;
}

export type NextResponse = NextPending | NextComplete;

export interface TraceRow {
  stimulus_index: number;
  onset_s: number;
  level: number;
  detected: boolean;
  reversal: boolean;
  latency_s: number | null;
}

export interface SessionConfigOverrides {
  isi_min_s?: number;
  isi_max_s?: number;
  response_window_s?: number;
  stimulus_duration_s?: number;
  reps_per_site?: number;
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function requestJson(url: string, init?: RequestInit): Promise<any> {
  const resp = await fetch(url, init);
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, body.error ?? `HTTP ${resp.status}`);
  }
  return body;
}

export class SessionApi {
  constructor(private base: string) {}

  async createSession(options: {
    participant_id?: string;
    site?: string;
    config?: SessionConfigOverrides;
  }): Promise<string> {
    const body = await requestJson(`${this.base}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(options),
    });
    return body.session_id as string;
  }

  next(sessionId: string): Promise<NextResponse> {
    return requestJson(`${this.base}/sessions/${sessionId}/next`);
  }

  /** Post one detection press. The server timestamps it on receipt. */
  postResponse(sessionId: string): Promise<{ classification: string }> {
    return requestJson(`${this.base}/sessions/${sessionId}/response`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: "{}",
    });
  }

  async trace(sessionId: string): Promise<TraceRow[]> {
    const body = await requestJson(`${this.base}/sessions/${sessionId}/trace`);
    return body.rows as TraceRow[];
  }

  result(sessionId: string): Promise<ThresholdPayload> {
    return requestJson(`${this.base}/sessions/${sessionId}/result`);
  }
}

export function thresholdValue(threshold: ThresholdPayload): number | null {
  return threshold.value === "NaN" ? null : threshold.value;
}
