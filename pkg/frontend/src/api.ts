import type {
  NetworkDetail,
  NetworkSummary,
  RankingRequest,
  RoundAlternatives,
  SessionSummary,
} from './types';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, readonly issues: string[]) {
    super(issues.join('; ') || `request failed (${status})`);
  }
}

/** Thin typed client over the session endpoints; never mutates payloads. */
export class ApiClient {
  constructor(
    private readonly base: string = '/api',
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!resp.ok) {
      let issues: string[] = [];
      try {
        const body = await resp.json();
        const detail = body?.detail;
        if (typeof detail === 'string') issues = [detail];
        else if (Array.isArray(detail?.issues)) issues = detail.issues.map(String);
        else if (detail) issues = [JSON.stringify(detail)];
      } catch {
        issues = [resp.statusText];
      }
      throw new ApiError(resp.status, issues);
    }
    return (await resp.json()) as T;
  }

  listNetworks(): Promise<NetworkSummary[]> {
    return this.request('/networks');
  }

  networkDetail(name: string): Promise<NetworkDetail> {
    return this.request(`/networks/${name}`);
  }

  createSession(body: Record<string, unknown>): Promise<{ id: string; status: string }> {
    return this.request('/sessions', { method: 'POST', body: JSON.stringify(body) });
  }

  session(id: string): Promise<SessionSummary> {
    return this.request(`/sessions/${id}`);
  }

  generateRound(id: string, count: number, seed: number): Promise<{ round: number }> {
    return this.request(`/sessions/${id}/rounds`, {
      method: 'POST',
      body: JSON.stringify({ count, seed }),
    });
  }

  roundAlternatives(id: string, round: number): Promise<RoundAlternatives> {
    return this.request(`/sessions/${id}/rounds/${round}/alternatives`);
  }

  submitRanking(id: string, round: number, body: RankingRequest): Promise<{ round: number }> {
    return this.request(`/sessions/${id}/rounds/${round}/ranking`, {
      method: 'POST',
      body: JSON.stringify(body),
    });
  }

  simulatedRanking(id: string, round: number, fn: string, topK: number):
      Promise<{ ranked_ids: number[]; source: string }> {
    return this.request(`/sessions/${id}/rounds/${round}/simulated-ranking?fn=${fn}&top_k=${topK}`);
  }
}
