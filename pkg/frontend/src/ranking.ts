import type { HitlParamsBody, RankingRequest } from './types';

/**
 * Rank-slot state: an ordered subset of alternative indices, best first.
 * Pure data + operations so the drag interactions stay a thin layer.
 */
export class RankingDraft {
  private order: number[] = [];

  get ids(): readonly number[] {
    return this.order;
  }

  get size(): number {
    return this.order.length;
  }

  has(id: number): boolean {
    return this.order.includes(id);
  }

  /** Append at the end, or move an already ranked id to the end. */
  add(id: number): void {
    this.remove(id);
    this.order.push(id);
  }

  remove(id: number): void {
    this.order = this.order.filter((x) => x !== id);
  }

  /** Drop the dragged id into the given slot position. */
  moveTo(id: number, position: number): void {
    this.remove(id);
    const at = Math.max(0, Math.min(position, this.order.length));
    this.order.splice(at, 0, id);
  }

  clear(): void {
    this.order = [];
  }

  /** 1-based display position per id; unique and contiguous by construction. */
  positions(): Map<number, number> {
    return new Map(this.order.map((id, i) => [id, i + 1]));
  }

  /** Problems that must block submission; empty list means submittable. */
  validate(knownIds: ReadonlySet<number>): string[] {
    const problems: string[] = [];
    if (this.order.length === 0) problems.push('rank at least one alternative');
    const unknown = this.order.filter((id) => !knownIds.has(id));
    if (unknown.length) problems.push(`unknown alternatives: ${unknown.join(', ')}`);
    if (new Set(this.order).size !== this.order.length) problems.push('duplicate rank entries');
    return problems;
  }

  requestBody(params: HitlParamsBody, source = 'operator'): RankingRequest {
    return { ranked_ids: [...this.order], source, params };
  }
}

/** The dead-band parameter only applies to the thresholded encodings. */
export function showTauField(variant: HitlParamsBody['variant']): boolean {
  return variant !== 'v2';
}

export const DEFAULT_PARAMS: HitlParamsBody = {
  variant: 'v2',
  tau: 0.15,
  a: 1.0,
  b: 1.0,
  count: 10,
};
