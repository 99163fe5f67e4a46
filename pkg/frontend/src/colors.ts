// Line coloring by loading fraction. The amber band starts at the 90%
// reporting threshold; red means above the rating.

export const AMBER_THRESHOLD = 0.9;
export const RED_THRESHOLD = 1.0;

export type LoadingBand = 'ok' | 'warning' | 'overload';

export function loadingBand(fraction: number): LoadingBand {
  if (fraction > RED_THRESHOLD) return 'overload';
  if (fraction >= AMBER_THRESHOLD) return 'warning';
  return 'ok';
}

export const BAND_COLORS: Record<LoadingBand, string> = {
  ok: '#2e9948',
  warning: '#d99a1b',
  overload: '#cc3328',
};

export function loadingColor(fraction: number): string {
  return BAND_COLORS[loadingBand(fraction)];
}

/** True when the alternative's cost sits inside the near-optimal budget. */
export function withinBudget(cost: number, fStar: number, epsilon: number): boolean {
  return cost <= fStar * (1 + epsilon) + 1e-6;
}
