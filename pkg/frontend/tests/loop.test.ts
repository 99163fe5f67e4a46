// Operator loop round trip against a mock transport that replays the
// recorded service contract: create a session, generate ten alternatives,
// rank three, and watch the guided v2 round arrive within budget.
import { describe, expect, it } from 'vitest';
import { ApiClient } from '../src/api';
import { RankingDraft, DEFAULT_PARAMS } from '../src/ranking';
import { SessionStore } from '../src/state';
import { withinBudget } from '../src/colors';
import fixture from '../fixtures/session-loop.json';

type Json = Record<string, unknown>;

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

/** In-memory stand-in for the session service, replaying recorded payloads. */
function mockService() {
  const state = {
    status: 'idle' as string,
    rounds: [] as Json[],
    pendingRound: null as Json | null,
    pollsUntilDone: 0,
    rankingBodies: [] as Json[],
  };

  const sessionBody = () => ({
    id: 'mock-session',
    case: 'tri-tight',
    status: state.status,
    error: null,
    f_star: fixture.round0.f_star,
    config: { epsilon: fixture.round0.epsilon },
    least_cost_actions: [],
    rounds: state.rounds.map((r, i) => ({
      index: i,
      label: (r as Json).label,
      count: ((r as Json).alternatives as unknown[]).length,
      seed: 0,
      has_ranking: false,
      params: null,
    })),
  });

  const fetchImpl = async (url: string, init?: RequestInit): Promise<Response> => {
    const method = init?.method ?? 'GET';
    const body = init?.body ? (JSON.parse(init.body as string) as Json) : {};

    if (url.endsWith('/sessions') && method === 'POST') {
      state.status = 'idle';
      return jsonResponse({ id: 'mock-session', status: 'idle' }, 201);
    }
    if (url.endsWith('/sessions/mock-session') && method === 'GET') {
      if (state.status === 'solving') {
        state.pollsUntilDone -= 1;
        if (state.pollsUntilDone <= 0 && state.pendingRound) {
          state.rounds.push(state.pendingRound);
          state.pendingRound = null;
          state.status = 'awaiting_ranking';
        }
      }
      return jsonResponse(sessionBody());
    }
    if (url.endsWith('/sessions/mock-session/rounds') && method === 'POST') {
      if (state.status === 'solving') return jsonResponse({ detail: 'conflict' }, 409);
      expect(body.count).toBe(10);
      state.status = 'solving';
      state.pendingRound = fixture.round0 as unknown as Json;
      state.pollsUntilDone = 2;
      return jsonResponse({ round: state.rounds.length, status: 'solving' }, 202);
    }
    const rankingMatch = url.match(/\/rounds\/(\d+)\/ranking$/);
    if (rankingMatch && method === 'POST') {
      const k = Number(rankingMatch[1]);
      if (k !== state.rounds.length - 1) {
        return jsonResponse({ detail: { issues: ['stale round'] } }, 422);
      }
      if (!Array.isArray(body.ranked_ids) || body.ranked_ids.length === 0) {
        return jsonResponse({ detail: { issues: ['empty ranking'] } }, 422);
      }
      state.rankingBodies.push(body);
      state.status = 'solving';
      state.pendingRound = fixture.round1 as unknown as Json;
      state.pollsUntilDone = 2;
      return jsonResponse({ round: state.rounds.length, status: 'solving' }, 202);
    }
    const altMatch = url.match(/\/rounds\/(\d+)\/alternatives$/);
    if (altMatch && method === 'GET') {
      const round = state.rounds[Number(altMatch[1])];
      if (!round) return jsonResponse({ detail: 'no such round' }, 404);
      return jsonResponse({ ...(round as Json), round: Number(altMatch[1]) });
    }
    return jsonResponse({ detail: `unexpected ${method} ${url}` }, 500);
  };

  return { state, fetchImpl };
}

const fastPoll = { intervalMs: 0, sleep: async () => {} };

describe('operator loop round trip', () => {
  it('create -> generate 10 -> rank 3 -> guided v2 round arrives in budget', async () => {
    const { state, fetchImpl } = mockService();
    const api = new ApiClient('/api', fetchImpl);
    const store = new SessionStore(api);

    await store.createSession({ case: 'tri-tight', config: { epsilon: 0.3 } });
    expect(store.sessionId).toBe('mock-session');

    const round0 = await store.generateRound(10, 0, fastPoll);
    expect(round0.alternatives).toHaveLength(10);
    expect(round0.label).toBe('mga');

    // drag three alternatives into the rank slots, best first
    const draft = new RankingDraft();
    draft.add(2);
    draft.add(0);
    draft.add(1);
    const known = new Set(round0.alternatives.map((a) => a.index));
    expect(draft.validate(known)).toEqual([]);

    const round1 = await store.submitRanking(
      [...draft.ids], { ...DEFAULT_PARAMS, variant: 'v2', count: 6 }, fastPoll);

    expect(state.rankingBodies[0]?.ranked_ids).toEqual([2, 0, 1]);
    expect((state.rankingBodies[0]?.params as Json).variant).toBe('v2');
    expect(round1.label).toBe('hitl-v2');
    expect(round1.alternatives.length).toBeGreaterThan(0);

    // every alternative of the guided round carries the in-budget badge
    for (const badge of store.budgetBadges(round1)) expect(badge).toBe(true);
    for (const alt of round1.alternatives) {
      expect(withinBudget(alt.cost, round1.fStar, round1.epsilon)).toBe(true);
    }

    // side-by-side comparison: the previous round stays loaded with stable ids
    expect(store.previousRound?.label).toBe('mga');
    expect(store.previousRound?.alternatives.map((a) => a.index))
      .toEqual(round0.alternatives.map((a) => a.index));
  });

  it('zero ranked alternatives never reaches the service', async () => {
    const { state, fetchImpl } = mockService();
    const api = new ApiClient('/api', fetchImpl);
    const store = new SessionStore(api);
    await store.createSession({ case: 'tri-tight' });
    await store.generateRound(10, 0, fastPoll);

    const draft = new RankingDraft();
    const problems = draft.validate(new Set([0, 1, 2]));
    expect(problems.length).toBeGreaterThan(0);
    // the UI blocks on validation problems; nothing was submitted
    expect(state.rankingBodies).toHaveLength(0);
  });

  it('surfaces solve errors and allows retry', async () => {
    const api = new ApiClient('/api', async (url: string) => {
      if (url.endsWith('/sessions')) {
        return new Response(JSON.stringify({ id: 's', status: 'idle' }), { status: 201 });
      }
      if (url.endsWith('/sessions/s')) {
        return new Response(JSON.stringify({
          id: 's', case: 'x', status: 'error', error: 'boom', f_star: null,
          config: {}, least_cost_actions: null, rounds: [],
        }), { status: 200 });
      }
      return new Response(JSON.stringify({ round: 0, status: 'solving' }), { status: 202 });
    });
    const errors: string[] = [];
    const store = new SessionStore(api, { onError: (m) => errors.push(m) });
    await store.createSession({ case: 'x' });
    await expect(store.generateRound(5, 0, fastPoll)).rejects.toThrow('boom');
    expect(errors).toContain('boom');
    expect(store.busy).toBe(false);
  });
});
