import { ApiClient } from './api';
import { pollUntil } from './poll';
import { withinBudget } from './colors';
import type {
  AlternativePayload,
  HitlParamsBody,
  RoundAlternatives,
  SessionSummary,
} from './types';

export interface LoadedRound {
  index: number;
  label: string;
  fStar: number;
  epsilon: number;
  alternatives: AlternativePayload[];
}

export interface StoreEvents {
  onChange?: () => void;
  onError?: (message: string) => void;
}

/**
 * Session store: owns the fetched rounds and the solve lifecycle. It is a
 * pure consumer of the service; alternative payloads are kept as received.
 */
export class SessionStore {
  sessionId: string | null = null;
  session: SessionSummary | null = null;
  rounds: LoadedRound[] = [];
  busy = false;
  lastError: string | null = null;

  constructor(private readonly api: ApiClient, private readonly events: StoreEvents = {}) {}

  private notify(): void {
    this.events.onChange?.();
  }

  private fail(err: unknown): never {
    this.lastError = err instanceof Error ? err.message : String(err);
    this.events.onError?.(this.lastError);
    this.notify();
    throw err;
  }

  get currentRound(): LoadedRound | null {
    return this.rounds.length ? this.rounds[this.rounds.length - 1]! : null;
  }

  get previousRound(): LoadedRound | null {
    return this.rounds.length > 1 ? this.rounds[this.rounds.length - 2]! : null;
  }

  async createSession(body: Record<string, unknown>): Promise<string> {
    try {
      const created = await this.api.createSession(body);
      this.sessionId = created.id;
      this.session = await this.api.session(created.id);
      this.rounds = [];
      this.lastError = null;
      this.notify();
      return created.id;
    } catch (err) {
      this.fail(err);
    }
  }

  private async loadRound(index: number): Promise<LoadedRound> {
    const payload: RoundAlternatives = await this.api.roundAlternatives(this.sessionId!, index);
    return {
      index,
      label: payload.label,
      fStar: payload.f_star,
      epsilon: payload.epsilon,
      alternatives: payload.alternatives,
    };
  }

  private async refreshRounds(): Promise<void> {
    const session = await this.api.session(this.sessionId!);
    this.session = session;
    while (this.rounds.length < session.rounds.length) {
      this.rounds.push(await this.loadRound(this.rounds.length));
    }
  }

  async generateRound(count: number, seed: number,
                      poll?: { intervalMs?: number; sleep?: (ms: number) => Promise<void> }):
      Promise<LoadedRound> {
    if (!this.sessionId) throw new Error('no session');
    this.busy = true;
    this.notify();
    try {
      await this.api.generateRound(this.sessionId, count, seed);
      await pollUntil(this.api, this.sessionId, 'awaiting_ranking', poll);
      await this.refreshRounds();
      this.lastError = null;
      return this.currentRound!;
    } catch (err) {
      this.fail(err);
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  async submitRanking(rankedIds: number[], params: HitlParamsBody,
                      poll?: { intervalMs?: number; sleep?: (ms: number) => Promise<void> }):
      Promise<LoadedRound> {
    if (!this.sessionId || !this.currentRound) throw new Error('no round to rank');
    this.busy = true;
    this.notify();
    try {
      await this.api.submitRanking(this.sessionId, this.currentRound.index, {
        ranked_ids: rankedIds,
        source: 'operator',
        params,
      });
      await pollUntil(this.api, this.sessionId, 'awaiting_ranking', poll);
      await this.refreshRounds();
      this.lastError = null;
      return this.currentRound!;
    } catch (err) {
      this.fail(err);
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  /** Budget badge per alternative of a loaded round. */
  budgetBadges(round: LoadedRound): boolean[] {
    return round.alternatives.map((a) => withinBudget(a.cost, round.fStar, round.epsilon));
  }
}
