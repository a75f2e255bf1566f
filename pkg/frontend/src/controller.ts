// Session state machine behind the page: serializes mutations, keeps the
// rendered view in sync with the service, and refuses to let the budget
// gauge go inconsistent.

import { ApiError, CreateSessionRequest, SessionApi, SessionState } from './api.js';

export type UiPhase = 'idle' | 'awaiting-score' | 'finished';

export interface UiSessionView {
  sessionId: string | null;
  phase: UiPhase;
  scores: number[];
  gauge: { filterUsed: number; dimensionUsed: number; total: number };
  bestScore: number | null;
  bestGainsDb: number[] | null;
  busy: boolean;
  error: string | null;
  clipVersion: number;
}

export function isValidScore(score: number): boolean {
  // half-point steps on the 0-10 scale, mirroring how people actually rate
  return Number.isFinite(score) && score >= 0 && score <= 10 && Math.round(score * 2) === score * 2;
}

function emptyView(): UiSessionView {
  return {
    sessionId: null,
    phase: 'idle',
    scores: [],
    gauge: { filterUsed: 0, dimensionUsed: 0, total: 0 },
    bestScore: null,
    bestGainsDb: null,
    busy: false,
    error: null,
    clipVersion: 0,
  };
}

export class SessionController {
  private current: UiSessionView = emptyView();
  private mutationInFlight = false;

  constructor(
    private readonly api: SessionApi,
    private readonly onChange: (view: UiSessionView) => void = () => {},
  ) {}

  get view(): UiSessionView {
    return this.current;
  }

  private emit(partial: Partial<UiSessionView>): UiSessionView {
    this.current = { ...this.current, ...partial };
    this.onChange(this.current);
    return this.current;
  }

  private applyState(state: SessionState): UiSessionView {
    const { ledger } = state;
    const used = ledger.filter_queries_used + ledger.dimension_queries_used;
    if (used > ledger.total_budget) {
      throw new Error(
        `budget gauge inconsistent: ${used} queries charged against ${ledger.total_budget}`,
      );
    }
    const previous = this.current;
    const newCandidate =
      state.phase === 'awaiting-score' &&
      (previous.sessionId !== state.session_id ||
        state.history.length !== previous.scores.length ||
        previous.phase !== 'awaiting-score');
    return this.emit({
      sessionId: state.session_id,
      phase: state.phase,
      scores: state.history.map((h) => h.score),
      gauge: {
        filterUsed: ledger.filter_queries_used,
        dimensionUsed: ledger.dimension_queries_used,
        total: ledger.total_budget,
      },
      bestScore: state.best_score,
      bestGainsDb: state.best_gains_db,
      error: null,
      clipVersion: newCandidate ? previous.clipVersion + 1 : previous.clipVersion,
    });
  }

  private async mutate(action: () => Promise<SessionState>): Promise<UiSessionView> {
    if (this.mutationInFlight) {
      throw new Error('a request is already in flight');
    }
    this.mutationInFlight = true;
    this.emit({ busy: true });
    try {
      const state = await action();
      return this.applyState(state);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409 && this.current.sessionId) {
        // lost a race or stale phase: the service state wins
        const state = await this.api.getState(this.current.sessionId);
        this.applyState(state);
        this.emit({ error: err.body.message });
        return this.current;
      }
      this.emit({ error: err instanceof Error ? err.message : String(err) });
      throw err;
    } finally {
      this.mutationInFlight = false;
      this.emit({ busy: false });
    }
  }

  async start(request: CreateSessionRequest): Promise<UiSessionView> {
    this.current = emptyView();
    return this.mutate(() => this.api.createSession(request));
  }

  async submitScore(score: number): Promise<UiSessionView> {
    if (!this.current.sessionId) throw new Error('no active session');
    if (this.current.phase !== 'awaiting-score') throw new Error('session is not awaiting a score');
    if (!isValidScore(score)) throw new Error('score must be 0-10 in half-point steps');
    return this.mutate(() => this.api.submitScore(this.current.sessionId!, score));
  }

  async finish(): Promise<UiSessionView> {
    if (!this.current.sessionId) throw new Error('no active session');
    return this.mutate(() => this.api.finish(this.current.sessionId!));
  }

  async resync(): Promise<UiSessionView> {
    if (!this.current.sessionId) throw new Error('no active session');
    const state = await this.api.getState(this.current.sessionId);
    return this.applyState(state);
  }
}
