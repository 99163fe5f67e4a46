import type { AlternativePayload } from './types';

export type SortKey =
  | 'index'
  | 'cost_delta_pct'
  | 'actions'
  | 'u1'
  | 'u2'
  | 'u3'
  | 'u4'
  | 'u5'
  | 'u6'
  | 'hamming';

export interface CardSort {
  key: SortKey;
  ascending: boolean;
}

export function sortValue(alt: AlternativePayload, key: SortKey): number {
  switch (key) {
    case 'index':
      return alt.index;
    case 'cost_delta_pct':
      return alt.cost_delta_pct;
    case 'actions':
      return alt.actions.length;
    case 'hamming':
      return alt.hamming_to_least_cost;
    default:
      return alt.eval[key] ?? Number.NaN;
  }
}

export function sortAlternatives(
  alternatives: readonly AlternativePayload[],
  sort: CardSort,
): AlternativePayload[] {
  const sign = sort.ascending ? 1 : -1;
  return [...alternatives].sort((a, b) => {
    const va = sortValue(a, sort.key);
    const vb = sortValue(b, sort.key);
    if (va === vb) return a.index - b.index;
    return va < vb ? -sign : sign;
  });
}

export function actionLabel(action: [string, number]): string {
  return action[0] === 'line' ? `open line ${action[1]}` : `split substation ${action[1]}`;
}

export function formatDelta(pct: number): string {
  const sign = pct >= 0 ? '+' : '';
  return `${sign}${pct.toFixed(2)}%`;
}
