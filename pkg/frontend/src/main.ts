import { ApiClient } from './api';
import { actionLabel, formatDelta, sortAlternatives, type CardSort, type SortKey } from './cards';
import { loadingBand, withinBudget } from './colors';
import { renderDiagram } from './diagram';
import { resolveLayout, type Positions } from './layout';
import { DEFAULT_PARAMS, RankingDraft, showTauField } from './ranking';
import { SessionStore, type LoadedRound } from './state';
import type { AlternativePayload, HitlParamsBody, NetworkDoc } from './types';

const api = new ApiClient('/api');
const draft = new RankingDraft();
let store: SessionStore;
let network: NetworkDoc | null = null;
let positions: Positions = {};
let sort: CardSort = { key: 'index', ascending: true };
let selectedAlt: AlternativePayload | null = null;

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

function setBanner(message: string | null, retry?: () => void): void {
  const banner = $('banner');
  banner.innerHTML = '';
  if (!message) {
    banner.hidden = true;
    return;
  }
  banner.hidden = false;
  banner.textContent = message;
  if (retry) {
    const button = document.createElement('button');
    button.textContent = 'retry';
    button.onclick = retry;
    banner.append(' ', button);
  }
}

function metricBadges(alt: AlternativePayload): string {
  return Object.entries(alt.eval)
    .map(([fn, value]) => `<span class="badge" title="${fn}">${fn}:${
      Number.isInteger(value) ? value : value.toFixed(3)}</span>`)
    .join('');
}

function renderRoundTable(container: HTMLElement, round: LoadedRound, interactive: boolean): void {
  container.innerHTML = '';
  if (!round.alternatives.length) {
    container.innerHTML = '<p class="empty">No alternatives in this round yet - generate one.</p>';
    return;
  }
  const table = document.createElement('table');
  table.className = 'cards';
  const header = document.createElement('tr');
  const columns: [string, SortKey | null][] = [
    ['#', 'index'], ['rank', null], ['cost Δ', 'cost_delta_pct'], ['actions', 'actions'],
    ['u1', 'u1'], ['u2', 'u2'], ['u3', 'u3'], ['u4', 'u4'], ['u5', 'u5'], ['u6', 'u6'],
    ['dist', 'hamming'], ['unique', null], ['budget', null],
  ];
  for (const [label, key] of columns) {
    const th = document.createElement('th');
    th.textContent = label;
    if (key) {
      th.classList.add('sortable');
      th.onclick = () => {
        sort = { key, ascending: sort.key === key ? !sort.ascending : true };
        render();
      };
      if (sort.key === key) th.classList.add(sort.ascending ? 'asc' : 'desc');
    }
    header.appendChild(th);
  }
  table.appendChild(header);

  const ranks = draft.positions();
  for (const alt of sortAlternatives(round.alternatives, sort)) {
    const tr = document.createElement('tr');
    tr.dataset.altIndex = String(alt.index);
    if (interactive) {
      tr.draggable = true;
      tr.ondragstart = (ev) => ev.dataTransfer?.setData('text/plain', String(alt.index));
      tr.onclick = () => {
        selectedAlt = alt;
        render();
      };
      if (selectedAlt?.index === alt.index) tr.classList.add('selected');
    }
    const inBudget = withinBudget(alt.cost, round.fStar, round.epsilon);
    tr.innerHTML = [
      `<td>${alt.index}</td>`,
      `<td class="rank">${ranks.get(alt.index) ?? ''}</td>`,
      `<td>${formatDelta(alt.cost_delta_pct)}</td>`,
      `<td title="${alt.actions.map(actionLabel).join(', ')}">${alt.actions.length}</td>`,
      ...(['u1', 'u2', 'u3', 'u4', 'u5', 'u6'] as const).map((fn) => {
        const value = alt.eval[fn];
        return `<td>${value === undefined ? '' : Number.isInteger(value) ? value : value.toFixed(3)}</td>`;
      }),
      `<td>${alt.hamming_to_least_cost}</td>`,
      `<td>${alt.unique ? '●' : '○'}</td>`,
      `<td class="${inBudget ? 'in-budget' : 'out-of-budget'}">${inBudget ? '✓' : '✗'}</td>`,
    ].join('');
    table.appendChild(tr);
  }
  container.appendChild(table);
}

function renderRankSlots(): void {
  const slots = $('rank-slots');
  slots.innerHTML = '';
  draft.ids.forEach((id, i) => {
    const li = document.createElement('li');
    li.textContent = `#${id}`;
    li.draggable = true;
    li.ondragstart = (ev) => ev.dataTransfer?.setData('text/plain', String(id));
    li.ondragover = (ev) => ev.preventDefault();
    li.ondrop = (ev) => {
      ev.preventDefault();
      const dragged = Number(ev.dataTransfer?.getData('text/plain'));
      if (!Number.isNaN(dragged)) {
        draft.moveTo(dragged, i);
        render();
      }
    };
    const remove = document.createElement('button');
    remove.textContent = '×';
    remove.onclick = () => {
      draft.remove(id);
      render();
    };
    li.appendChild(remove);
    slots.appendChild(li);
  });
  const drop = $('rank-drop');
  drop.ondragover = (ev) => ev.preventDefault();
  drop.ondrop = (ev) => {
    ev.preventDefault();
    const dragged = Number(ev.dataTransfer?.getData('text/plain'));
    if (!Number.isNaN(dragged)) {
      draft.add(dragged);
      render();
    }
  };
}

function currentParams(): HitlParamsBody {
  const variant = ($('variant') as HTMLSelectElement).value as HitlParamsBody['variant'];
  return {
    variant,
    tau: Number(($('tau') as HTMLInputElement).value) || DEFAULT_PARAMS.tau,
    a: Number(($('param-a') as HTMLInputElement).value) || DEFAULT_PARAMS.a,
    b: Number(($('param-b') as HTMLInputElement).value) || DEFAULT_PARAMS.b,
    count: Number(($('round-count') as HTMLInputElement).value) || DEFAULT_PARAMS.count,
  };
}

function render(): void {
  const busy = store.busy;
  ($('generate') as HTMLButtonElement).disabled = busy || !store.sessionId;
  ($('submit-ranking') as HTMLButtonElement).disabled = busy || !store.currentRound;
  $('status').textContent = store.session
    ? `${store.session.status}${store.session.f_star ? ` · optimum ${store.session.f_star.toFixed(1)}` : ''}`
    : 'no session';
  $('tau-field').hidden = !showTauField(currentParams().variant);

  const current = store.currentRound;
  const previous = store.previousRound;
  $('current-label').textContent = current ? `round ${current.index} · ${current.label}` : 'no round';
  $('previous-label').textContent = previous ? `round ${previous.index} · ${previous.label}` : '';
  renderRoundTable($('current-round'), current ?? { index: 0, label: '', fStar: 1, epsilon: 0, alternatives: [] }, true);
  if (previous) {
    renderRoundTable($('previous-round'), previous, false);
    $('previous-pane').hidden = false;
  } else {
    $('previous-pane').hidden = true;
  }
  renderRankSlots();
  if (network) {
    $('diagram-pane').innerHTML = renderDiagram(network, positions, selectedAlt);
    $('diagram-caption').textContent = selectedAlt
      ? `alternative #${selectedAlt.index}: ${selectedAlt.actions.map(actionLabel).join(', ') || 'base topology'}`
      : 'select an alternative to inspect its loading';
  }
  const validation = $('ranking-validation');
  const known = new Set(current?.alternatives.map((a) => a.index) ?? []);
  const problems = draft.validate(known);
  validation.textContent = draft.size ? problems.join('; ') : '';
}

async function init(): Promise<void> {
  store = new SessionStore(api, {
    onChange: render,
    onError: (message) => setBanner(message),
  });

  const caseSelect = $('case-select') as HTMLSelectElement;
  try {
    const networks = await api.listNetworks();
    for (const net of networks) {
      const option = document.createElement('option');
      option.value = net.name;
      option.textContent = `${net.name} (${net.buses} buses / ${net.branches} lines)`;
      caseSelect.appendChild(option);
    }
  } catch (err) {
    setBanner(`cannot reach the service: ${err}`, () => void init());
    return;
  }

  $('create-session').onclick = async () => {
    setBanner(null);
    const name = caseSelect.value;
    const factor = Number(($('factor') as HTMLInputElement).value) || 1.0;
    const epsilon = Number(($('epsilon') as HTMLInputElement).value) || 0.05;
    try {
      const detail = await api.networkDetail(name);
      network = detail.network;
      positions = resolveLayout(network, detail.layout?.positions);
      await store.createSession({
        case: name,
        config: { epsilon, congestion_factor: factor },
      });
      draft.clear();
      selectedAlt = null;
      render();
    } catch (err) {
      setBanner(String(err), () => $('create-session').click());
    }
  };

  $('generate').onclick = async () => {
    setBanner(null);
    const count = Number(($('alt-count') as HTMLInputElement).value) || 10;
    const seed = Number(($('seed') as HTMLInputElement).value) || 0;
    try {
      await store.generateRound(count, seed);
      draft.clear();
      render();
    } catch {
      /* surfaced via onError banner */
    }
  };

  $('submit-ranking').onclick = async () => {
    const current = store.currentRound;
    if (!current) return;
    const known = new Set(current.alternatives.map((a) => a.index));
    const problems = draft.validate(known);
    if (problems.length) {
      $('ranking-validation').textContent = problems.join('; ');
      return; // inline validation, no request
    }
    setBanner(null);
    try {
      await store.submitRanking([...draft.ids], currentParams());
      draft.clear();
      render();
    } catch {
      /* surfaced via onError banner */
    }
  };

  ($('variant') as HTMLSelectElement).onchange = render;
  render();
}

document.addEventListener('DOMContentLoaded', () => void init());
