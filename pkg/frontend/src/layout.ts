import type { NetworkDoc } from './types';

export type Positions = Record<string, [number, number]>;

/**
 * Diagram coordinates: use the shipped static layout when the service has
 * one for the case, otherwise fall back to a deterministic force layout so
 * uploaded networks still render.
 */
export function resolveLayout(net: NetworkDoc, shipped: Positions | null | undefined): Positions {
  if (shipped && net.buses.every((b) => String(b.id) in shipped)) {
    return shipped;
  }
  return forceLayout(net);
}

/** Deterministic spring embedding, normalized to the unit square. */
export function forceLayout(net: NetworkDoc, iterations = 250): Positions {
  const ids = net.buses.map((b) => b.id);
  const index = new Map(ids.map((id, i) => [id, i]));
  const n = ids.length;
  if (n === 0) return {};
  if (n === 1) return { [String(ids[0])]: [0.5, 0.5] };

  // deterministic pseudo-random start (no RNG dependency)
  const pos = ids.map((id, i) => [
    0.5 + 0.45 * Math.cos((2 * Math.PI * i) / n) + 0.01 * ((id * 53) % 7),
    0.5 + 0.45 * Math.sin((2 * Math.PI * i) / n) + 0.01 * ((id * 31) % 5),
  ]) as [number, number][];

  const edges = net.branches
    .map((br) => [index.get(br.from_bus), index.get(br.to_bus)] as const)
    .filter((e): e is readonly [number, number] => e[0] !== undefined && e[1] !== undefined);

  const k = 1 / Math.sqrt(n);
  let temperature = 0.1;
  for (let iter = 0; iter < iterations; iter += 1) {
    const disp = pos.map(() => [0, 0] as [number, number]);
    for (let i = 0; i < n; i += 1) {
      for (let j = i + 1; j < n; j += 1) {
        const dx = pos[i]![0] - pos[j]![0];
        const dy = pos[i]![1] - pos[j]![1];
        const dist = Math.hypot(dx, dy) + 1e-9;
        const force = (k * k) / (dist * dist);
        disp[i]![0] += force * (dx / dist);
        disp[i]![1] += force * (dy / dist);
        disp[j]![0] -= force * (dx / dist);
        disp[j]![1] -= force * (dy / dist);
      }
    }
    for (const [u, v] of edges) {
      const dx = pos[u]![0] - pos[v]![0];
      const dy = pos[u]![1] - pos[v]![1];
      const dist = Math.hypot(dx, dy) + 1e-9;
      const force = (dist / k) * 0.02;
      disp[u]![0] -= force * (dx / dist);
      disp[u]![1] -= force * (dy / dist);
      disp[v]![0] += force * (dx / dist);
      disp[v]![1] += force * (dy / dist);
    }
    for (let i = 0; i < n; i += 1) {
      const len = Math.hypot(disp[i]![0], disp[i]![1]) + 1e-9;
      const step = Math.min(len, temperature);
      pos[i]![0] += (disp[i]![0] / len) * step;
      pos[i]![1] += (disp[i]![1] / len) * step;
    }
    temperature *= 0.985;
  }

  let minX = Infinity;
  let minY = Infinity;
  let maxX = -Infinity;
  let maxY = -Infinity;
  for (const [x, y] of pos) {
    minX = Math.min(minX, x);
    minY = Math.min(minY, y);
    maxX = Math.max(maxX, x);
    maxY = Math.max(maxY, y);
  }
  const spanX = maxX - minX || 1;
  const spanY = maxY - minY || 1;
  const out: Positions = {};
  ids.forEach((id, i) => {
    out[String(id)] = [(pos[i]![0] - minX) / spanX, (pos[i]![1] - minY) / spanY];
  });
  return out;
}
