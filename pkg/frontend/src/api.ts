// Typed client for the session service HTTP/JSON API.

export interface Ledger {
  total_budget: number;
  filter_queries_used: number;
  dimension_queries_used: number;
}

export interface HistoryEntry {
  score: number;
  timestamp: number;
}

export type Phase = 'awaiting-score' | 'finished';

export interface SessionState {
  session_id: string;
  phase: Phase;
  ledger: Ledger;
  history: HistoryEntry[];
  best_score: number | null;
  best_gains_db: number[] | null;
  facts: [number, number][];
  has_pending: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  field?: string;
}

export class ApiError extends Error {
  constructor(readonly status: number, readonly body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface CorruptionRequest {
  kind: 'random' | 'profile';
  seed?: number;
  knots?: number | null;
  path?: string;
}

export interface CreateSessionRequest {
  clip_id?: string;
  budget?: number;
  l_count?: number;
  seed?: number;
  corruption?: CorruptionRequest;
  overrides?: Record<string, number>;
}

export type ClipVariant = 'candidate' | 'corrupted' | 'best';

async function parseError(response: Response): Promise<ApiError> {
  let body: ApiErrorBody;
  try {
    body = (await response.json()) as ApiErrorBody;
  } catch {
    body = { code: 'unknown', message: `HTTP ${response.status}` };
  }
  return new ApiError(response.status, body);
}

export class SessionApi {
  constructor(readonly baseUrl: string) {}

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  createSession(request: CreateSessionRequest): Promise<SessionState> {
    return this.requestJson<SessionState>('/sessions', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(request),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return this.requestJson<SessionState>(`/sessions/${sessionId}`);
  }

  clipUrl(sessionId: string, variant: ClipVariant = 'candidate'): string {
    return `${this.baseUrl}/sessions/${sessionId}/clip?variant=${variant}`;
  }

  async fetchClip(sessionId: string, variant: ClipVariant = 'candidate'): Promise<ArrayBuffer> {
    const response = await fetch(this.clipUrl(sessionId, variant));
    if (!response.ok) throw await parseError(response);
    return response.arrayBuffer();
  }

  submitScore(sessionId: string, score: number): Promise<SessionState> {
    return this.requestJson<SessionState>(`/sessions/${sessionId}/score`, {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify({ score }),
    });
  }

  finish(sessionId: string): Promise<SessionState> {
    return this.requestJson<SessionState>(`/sessions/${sessionId}/finish`, { method: 'POST' });
  }
}
