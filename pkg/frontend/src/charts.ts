/**
 * MSE curves and query-label histograms as SVG, rendered straight from
 * service payloads.  Legend toggles re-render from the cached payload;
 * nothing is refetched or recomputed.
 */

import type { HistogramPayload, MsePayload } from "./api.js";
import { strategyColor } from "./color.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const W = 460;
const H = 230;
const ML = 46;
const MR = 12;
const MT = 12;
const MB = 30;

function svgRoot(doc: Document, role: string): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("width", String(W));
  svg.setAttribute("height", String(H));
  svg.setAttribute("viewBox", `0 0 ${W} ${H}`);
  svg.setAttribute("data-role", role);
  svg.style.background = "#fff";
  return svg;
}

function axisText(doc: Document, x: number, y: number, text: string, anchor = "middle") {
  const el = doc.createElementNS(SVG_NS, "text");
  el.setAttribute("x", String(x));
  el.setAttribute("y", String(y));
  el.setAttribute("text-anchor", anchor);
  el.setAttribute("font-size", "10");
  el.textContent = text;
  return el;
}

/**
 * Line chart of MSE over q; the y scale covers every strategy so toggling
 * one off never rescales the others.
 */
export function renderMse(
  doc: Document,
  container: HTMLElement,
  payload: MsePayload,
  visible: ReadonlySet<string>,
): void {
  while (container.firstChild) container.removeChild(container.firstChild);
  const svg = svgRoot(doc, "mse");

  const qMax = Math.max(1, payload.q_axis[payload.q_axis.length - 1] ?? 1);
  let yMax = 0;
  for (const row of payload.mse) for (const v of row) yMax = Math.max(yMax, v);
  if (yMax <= 0) yMax = 1;

  const px = (q: number) => ML + (q / qMax) * (W - ML - MR);
  const py = (v: number) => H - MB - (v / yMax) * (H - MT - MB);

  svg.appendChild(axisText(doc, (ML + W - MR) / 2, H - 8, "batches labeled (q)"));
  svg.appendChild(axisText(doc, ML, MT + 4, yMax.toPrecision(3), "end"));
  svg.appendChild(axisText(doc, ML, H - MB, "0", "end"));

  const frame = doc.createElementNS(SVG_NS, "rect");
  frame.setAttribute("x", String(ML));
  frame.setAttribute("y", String(MT));
  frame.setAttribute("width", String(W - ML - MR));
  frame.setAttribute("height", String(H - MT - MB));
  frame.setAttribute("fill", "none");
  frame.setAttribute("stroke", "#ccc");
  svg.appendChild(frame);

  payload.strategies.forEach((name, s) => {
    if (!visible.has(name)) return;
    const pts = payload.q_axis.map((q, j) => `${px(q).toFixed(2)},${py(payload.mse[s][j]).toFixed(2)}`);
    if (pts.length > 1) {
      const line = doc.createElementNS(SVG_NS, "polyline");
      line.setAttribute("points", pts.join(" "));
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", strategyColor(name));
      line.setAttribute("stroke-width", "1.6");
      line.setAttribute("data-strategy", name);
      svg.appendChild(line);
    }
    // circles keep single-point payloads (Q = 0) visible
    payload.q_axis.forEach((q, j) => {
      const dot = doc.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", px(q).toFixed(2));
      dot.setAttribute("cy", py(payload.mse[s][j]).toFixed(2));
      dot.setAttribute("r", "2.4");
      dot.setAttribute("fill", strategyColor(name));
      dot.setAttribute("data-strategy", name);
      const title = doc.createElementNS(SVG_NS, "title");
      title.textContent = `${name} q=${q} mse=${payload.mse[s][j]}`;
      dot.appendChild(title);
      svg.appendChild(dot);
    });
  });
  container.appendChild(svg);
}

function stepPath(
  edges: number[],
  counts: number[],
  px: (x: number) => number,
  py: (y: number) => number,
): string {
  const parts = [`M ${px(edges[0]).toFixed(2)} ${py(0).toFixed(2)}`];
  for (let i = 0; i < counts.length; i++) {
    parts.push(`L ${px(edges[i]).toFixed(2)} ${py(counts[i]).toFixed(2)}`);
    parts.push(`L ${px(edges[i + 1]).toFixed(2)} ${py(counts[i]).toFixed(2)}`);
  }
  parts.push(`L ${px(edges[counts.length]).toFixed(2)} ${py(0).toFixed(2)}`);
  return parts.join(" ");
}

/** Step-outline histogram of queried labels vs the reference distribution. */
export function renderHistogram(
  doc: Document,
  container: HTMLElement,
  payload: HistogramPayload,
  visible: ReadonlySet<string>,
): void {
  while (container.firstChild) container.removeChild(container.firstChild);
  const svg = svgRoot(doc, "histogram");

  const edges = payload.bin_edges;
  const lo = edges[0];
  const hi = edges[edges.length - 1];
  let cMax = Math.max(1, ...payload.all_data);
  for (const counts of Object.values(payload.strategies)) {
    cMax = Math.max(cMax, ...counts);
  }

  const px = (x: number) => ML + ((x - lo) / (hi - lo || 1)) * (W - ML - MR);
  const py = (c: number) => H - MB - (c / cMax) * (H - MT - MB);

  const ref = doc.createElementNS(SVG_NS, "path");
  ref.setAttribute("d", stepPath(edges, payload.all_data, px, py));
  ref.setAttribute("fill", "#E0E0E0");
  ref.setAttribute("stroke", "none");
  ref.setAttribute("data-series", "all_data");
  svg.appendChild(ref);

  for (const [name, counts] of Object.entries(payload.strategies)) {
    if (!visible.has(name)) continue;
    const path = doc.createElementNS(SVG_NS, "path");
    path.setAttribute("d", stepPath(edges, counts, px, py));
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", strategyColor(name));
    path.setAttribute("stroke-width", "1.4");
    path.setAttribute("data-series", name);
    svg.appendChild(path);
  }

  svg.appendChild(axisText(doc, (ML + W - MR) / 2, H - 8, "label value"));
  svg.appendChild(axisText(doc, ML, MT + 4, String(cMax), "end"));
  container.appendChild(svg);
}
