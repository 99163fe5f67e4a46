import { loadingColor } from './colors';
import type { Positions } from './layout';
import type { AlternativePayload, NetworkDoc } from './types';

const SIZE = 640;
const MARGIN = 28;

function scale(p: [number, number]): [number, number] {
  return [MARGIN + p[0] * (SIZE - 2 * MARGIN), MARGIN + p[1] * (SIZE - 2 * MARGIN)];
}

/**
 * Single-line diagram for one alternative: lines colored by loading band,
 * opened lines dashed grey, split substations drawn as a double bar.
 */
export function renderDiagram(
  net: NetworkDoc,
  positions: Positions,
  alt: AlternativePayload | null,
): string {
  const openIds = new Set(
    (alt?.actions ?? []).filter(([kind]) => kind === 'line').map(([, id]) => id),
  );
  const splitBuses = new Set(
    (alt?.actions ?? []).filter(([kind]) => kind === 'split').map(([, id]) => id),
  );

  const parts: string[] = [];
  parts.push(
    `<svg viewBox="0 0 ${SIZE} ${SIZE}" xmlns="http://www.w3.org/2000/svg" class="diagram">`,
  );
  for (const br of net.branches) {
    const a = positions[String(br.from_bus)];
    const b = positions[String(br.to_bus)];
    if (!a || !b) continue;
    const [x1, y1] = scale(a);
    const [x2, y2] = scale(b);
    const opened = openIds.has(br.id);
    const loading = alt?.loadings[String(br.id)] ?? 0;
    const color = opened ? '#9a9a9a' : loadingColor(loading);
    const dash = opened ? ' stroke-dasharray="6 5"' : '';
    const width = opened ? 1.5 : 1.5 + 2.5 * Math.min(loading, 1.2);
    parts.push(
      `<line x1="${x1.toFixed(1)}" y1="${y1.toFixed(1)}" x2="${x2.toFixed(1)}" ` +
        `y2="${y2.toFixed(1)}" stroke="${color}" stroke-width="${width.toFixed(2)}"${dash}>` +
        `<title>line ${br.id} (${br.from_bus}-${br.to_bus}) ` +
        `${opened ? 'opened' : `${(loading * 100).toFixed(1)}% of ${br.limit_mw.toFixed(0)} MW`}` +
        `</title></line>`,
    );
  }
  const genBuses = new Set(net.generators.map((g) => g.bus));
  for (const bus of net.buses) {
    const p = positions[String(bus.id)];
    if (!p) continue;
    const [x, y] = scale(p);
    if (splitBuses.has(bus.id)) {
      parts.push(
        `<g class="split-substation"><rect x="${(x - 7).toFixed(1)}" y="${(y - 5).toFixed(1)}"` +
          ` width="14" height="3.4" fill="#333"/><rect x="${(x - 7).toFixed(1)}"` +
          ` y="${(y + 1.6).toFixed(1)}" width="14" height="3.4" fill="#333"/>` +
          `<title>substation ${bus.id} (split)</title></g>`,
      );
    } else {
      const fill = bus.is_slack ? '#1d55a8' : genBuses.has(bus.id) ? '#444' : '#777';
      const r = bus.load_mw > 0 ? 4.4 : 3.2;
      parts.push(
        `<circle cx="${x.toFixed(1)}" cy="${y.toFixed(1)}" r="${r}" fill="${fill}">` +
          `<title>bus ${bus.id}${bus.load_mw ? ` load ${bus.load_mw} MW` : ''}</title></circle>`,
      );
    }
  }
  parts.push('</svg>');
  return parts.join('');
}
