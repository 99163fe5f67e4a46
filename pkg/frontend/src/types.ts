// Wire types for the session service.

export type SessionStatus = 'idle' | 'solving' | 'awaiting_ranking' | 'error';

export interface NetworkSummary {
  name: string;
  buses: number;
  branches: number;
  generators: number;
  splittable_substations: number;
}

export interface NetworkDoc {
  name: string;
  base_mva: number;
  buses: { id: number; base_kv: number; is_slack: boolean; load_mw: number }[];
  branches: {
    id: number;
    from_bus: number;
    to_bus: number;
    susceptance: number;
    limit_mw: number;
    switchable: boolean;
  }[];
  generators: { id: number; bus: number; p_min: number; p_max: number; cost_per_mwh: number }[];
  substations: { bus: number; splittable: boolean }[];
}

export interface NetworkDetail {
  network: NetworkDoc;
  layout: { positions: Record<string, [number, number]> } | null;
}

export interface RoundSummary {
  index: number;
  label: string;
  count: number;
  seed: number;
  has_ranking: boolean;
  params: HitlParamsBody | null;
}

export interface SessionSummary {
  id: string;
  case: string;
  status: SessionStatus;
  error: string | null;
  f_star: number | null;
  config: Record<string, unknown>;
  least_cost_actions: [string, number][] | null;
  rounds: RoundSummary[];
}

export interface AlternativePayload {
  index: number;
  topology: { line_open: number[]; busbar_split: number[] };
  actions: [string, number][];
  cost: number;
  slack: number;
  cost_delta_pct: number;
  objective_value: number;
  unique: boolean;
  hamming_to_least_cost: number;
  loadings: Record<string, number>;
  eval: Record<string, number>;
  round: string;
}

export interface RoundAlternatives {
  round: number;
  label: string;
  f_star: number;
  epsilon: number;
  alternatives: AlternativePayload[];
}

export interface HitlParamsBody {
  variant: 'baseline' | 'v1' | 'v2';
  tau: number;
  a: number;
  b: number;
  count: number;
}

export interface RankingRequest {
  ranked_ids: number[];
  source: string;
  params: HitlParamsBody;
}
