/**
 * Prediction-change heatmap grid: one row per strategy, one column per
 * check kind, each cell grid |selection| rows x Q columns.
 *
 * The only computation applied to payload values is color mapping; the
 * hover readout echoes the fetched value verbatim (shortest round-trip
 * number formatting), so what you read is what the service sent.
 */

import type { ChangePayload } from "./api.js";
import { divergingColor } from "./color.js";
import type { ChangeKind, RangeMode } from "./state.js";

export interface PanelData {
  strategy: string;
  kind: ChangeKind;
  payload: ChangePayload;
}

const CELL_PX = 12;

function panelVmax(panel: PanelData): number {
  let vmax = 0;
  for (const row of panel.payload.values) {
    for (const v of row) {
      const a = Math.abs(v);
      if (a > vmax) vmax = a;
    }
  }
  return vmax;
}

function renderPanel(
  doc: Document,
  panel: PanelData,
  vmax: number,
  readout: HTMLElement,
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "panel";
  wrap.dataset.strategy = panel.strategy;
  wrap.dataset.kind = panel.kind;

  const caption = doc.createElement("div");
  caption.className = "panel-caption";
  caption.textContent = `${panel.strategy} ${panel.kind}`;
  wrap.appendChild(caption);

  const { row_indices, q_axis, values } = panel.payload;
  if (row_indices.length === 0) {
    const empty = doc.createElement("div");
    empty.className = "panel-empty";
    empty.textContent = "empty selection";
    wrap.appendChild(empty);
    return wrap;
  }

  const cells = doc.createElement("div");
  cells.className = "cells";
  cells.style.display = "grid";
  cells.style.gridTemplateColumns = `repeat(${q_axis.length}, ${CELL_PX}px)`;
  for (let r = 0; r < row_indices.length; r++) {
    for (let c = 0; c < q_axis.length; c++) {
      const v = values[r][c];
      const cell = doc.createElement("div");
      cell.className = "cell";
      cell.style.width = `${CELL_PX}px`;
      cell.style.height = `${CELL_PX}px`;
      cell.style.background = divergingColor(v, vmax);
      cell.dataset.testIndex = String(row_indices[r]);
      cell.dataset.q = String(q_axis[c]);
      cell.dataset.value = String(v);
      cell.title = `i=${row_indices[r]} q=${q_axis[c]} value=${v}`;
      cells.appendChild(cell);
    }
  }
  cells.addEventListener("mouseover", (e) => {
    const target = e.target as HTMLElement;
    if (target.dataset && target.dataset.value !== undefined) {
      readout.textContent = `i=${target.dataset.testIndex} q=${target.dataset.q} value=${target.dataset.value}`;
    }
  });
  wrap.appendChild(cells);
  return wrap;
}

/**
 * Render the grid.  panels should contain every fetched (strategy, kind)
 * combination; the global_symmetric scale is computed over all of them so
 * hiding a panel never rescales the rest.
 */
export function renderHeatmapGrid(
  doc: Document,
  container: HTMLElement,
  panels: PanelData[],
  visibleStrategies: ReadonlySet<string>,
  visibleKinds: ReadonlySet<string>,
  rangeMode: RangeMode,
  readout: HTMLElement,
): void {
  while (container.firstChild) container.removeChild(container.firstChild);

  let globalVmax = 0;
  for (const p of panels) globalVmax = Math.max(globalVmax, panelVmax(p));

  const strategies: string[] = [];
  for (const p of panels) {
    if (!strategies.includes(p.strategy)) strategies.push(p.strategy);
  }
  for (const strategy of strategies) {
    if (!visibleStrategies.has(strategy)) continue;
    const row = doc.createElement("div");
    row.className = "heatmap-row";
    row.style.display = "flex";
    row.style.gap = "16px";
    for (const p of panels) {
      if (p.strategy !== strategy || !visibleKinds.has(p.kind)) continue;
      const vmax = rangeMode === "global_symmetric" ? globalVmax : panelVmax(p);
      row.appendChild(renderPanel(doc, p, vmax, readout));
    }
    container.appendChild(row);
  }
}
