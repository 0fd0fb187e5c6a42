/**
 * PCA scatter: every test point as an SVG circle colored by its true label,
 * selected points overplotted in red.  Click = anchor selection, drag =
 * rectangle selection; both are reported in data coordinates and resolved
 * by the server, never locally.
 */

import type { EmbeddingPayload } from "./api.js";
import { labelColor, SELECTION_COLOR } from "./color.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const CLICK_SLOP_PX = 3;

export interface ScatterHandlers {
  onAnchor(x: number, y: number): void;
  onRect(rect: [number, number, number, number]): void;
}

interface Range {
  lo: number;
  hi: number;
}

function padded(values: number[]): Range {
  if (values.length === 0) return { lo: -1, hi: 1 };
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  const pad = hi > lo ? (hi - lo) * 0.05 : 0.5;
  return { lo: lo - pad, hi: hi + pad };
}

export class ScatterView {
  readonly svg: SVGSVGElement;
  private readonly width = 520;
  private readonly height = 400;
  private readonly margin = 34;

  private coords: [number, number][] = [];
  private labels: number[] = [];
  private selected: number[] = [];
  private xRange: Range = { lo: -1, hi: 1 };
  private yRange: Range = { lo: -1, hi: 1 };
  private variance: number[] = [];

  private dragStart: { px: number; py: number } | null = null;
  private rubberBand: SVGRectElement | null = null;

  constructor(
    private readonly doc: Document,
    private readonly handlers: ScatterHandlers,
  ) {
    this.svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
    this.svg.setAttribute("width", String(this.width));
    this.svg.setAttribute("height", String(this.height));
    this.svg.setAttribute("viewBox", `0 0 ${this.width} ${this.height}`);
    this.svg.setAttribute("data-role", "scatter");
    this.svg.style.background = "#fff";
    this.svg.style.cursor = "crosshair";

    this.svg.addEventListener("mousedown", (e) => this.onMouseDown(e as MouseEvent));
    this.svg.addEventListener("mousemove", (e) => this.onMouseMove(e as MouseEvent));
    this.svg.addEventListener("mouseup", (e) => this.onMouseUp(e as MouseEvent));
  }

  setData(payload: EmbeddingPayload): void {
    this.coords = payload.coords;
    this.labels = payload.labels;
    this.variance = payload.explained_variance;
    this.selected = [];
    this.xRange = padded(payload.coords.map((c) => c[0]));
    this.yRange = padded(payload.coords.map((c) => c[1]));
    this.render();
  }

  setSelection(indices: number[]): void {
    this.selected = indices;
    this.render();
  }

  /** Data -> pixel; y axis points up in data space. */
  toPixel(x: number, y: number): [number, number] {
    const w = this.width - 2 * this.margin;
    const h = this.height - 2 * this.margin;
    const px = this.margin + ((x - this.xRange.lo) / (this.xRange.hi - this.xRange.lo)) * w;
    const py =
      this.height - this.margin - ((y - this.yRange.lo) / (this.yRange.hi - this.yRange.lo)) * h;
    return [px, py];
  }

  toData(px: number, py: number): [number, number] {
    const w = this.width - 2 * this.margin;
    const h = this.height - 2 * this.margin;
    const x = this.xRange.lo + ((px - this.margin) / w) * (this.xRange.hi - this.xRange.lo);
    const y = this.yRange.lo + ((this.height - this.margin - py) / h) * (this.yRange.hi - this.yRange.lo);
    return [x, y];
  }

  private localPixel(e: MouseEvent): [number, number] {
    const box = this.svg.getBoundingClientRect();
    return [e.clientX - box.left, e.clientY - box.top];
  }

  private onMouseDown(e: MouseEvent): void {
    const [px, py] = this.localPixel(e);
    this.dragStart = { px, py };
  }

  private onMouseMove(e: MouseEvent): void {
    if (!this.dragStart) return;
    const [px, py] = this.localPixel(e);
    if (
      Math.abs(px - this.dragStart.px) < CLICK_SLOP_PX &&
      Math.abs(py - this.dragStart.py) < CLICK_SLOP_PX
    ) {
      return;
    }
    if (!this.rubberBand) {
      this.rubberBand = this.doc.createElementNS(SVG_NS, "rect") as SVGRectElement;
      this.rubberBand.setAttribute("fill", "none");
      this.rubberBand.setAttribute("stroke", "#333");
      this.rubberBand.setAttribute("stroke-dasharray", "4 3");
      this.svg.appendChild(this.rubberBand);
    }
    const x = Math.min(px, this.dragStart.px);
    const y = Math.min(py, this.dragStart.py);
    this.rubberBand.setAttribute("x", String(x));
    this.rubberBand.setAttribute("y", String(y));
    this.rubberBand.setAttribute("width", String(Math.abs(px - this.dragStart.px)));
    this.rubberBand.setAttribute("height", String(Math.abs(py - this.dragStart.py)));
  }

  private onMouseUp(e: MouseEvent): void {
    if (!this.dragStart) return;
    const start = this.dragStart;
    this.dragStart = null;
    if (this.rubberBand) {
      this.rubberBand.remove();
      this.rubberBand = null;
    }
    const [px, py] = this.localPixel(e);
    if (Math.abs(px - start.px) < CLICK_SLOP_PX && Math.abs(py - start.py) < CLICK_SLOP_PX) {
      const [x, y] = this.toData(px, py);
      this.handlers.onAnchor(x, y);
      return;
    }
    const [x0, y0] = this.toData(Math.min(px, start.px), Math.max(py, start.py));
    const [x1, y1] = this.toData(Math.max(px, start.px), Math.min(py, start.py));
    this.handlers.onRect([x0, x1, y0, y1]);
  }

  render(): void {
    while (this.svg.firstChild) this.svg.removeChild(this.svg.firstChild);

    const axis = this.doc.createElementNS(SVG_NS, "text");
    axis.setAttribute("x", String(this.width / 2));
    axis.setAttribute("y", String(this.height - 8));
    axis.setAttribute("text-anchor", "middle");
    axis.setAttribute("font-size", "11");
    const v0 = this.variance[0];
    axis.textContent = v0 !== undefined ? `PC1 (${(v0 * 100).toFixed(1)}%)` : "PC1";
    this.svg.appendChild(axis);

    const axisY = this.doc.createElementNS(SVG_NS, "text");
    axisY.setAttribute("x", "12");
    axisY.setAttribute("y", String(this.height / 2));
    axisY.setAttribute("font-size", "11");
    axisY.setAttribute("transform", `rotate(-90 12 ${this.height / 2})`);
    axisY.setAttribute("text-anchor", "middle");
    const v1 = this.variance[1];
    axisY.textContent = v1 !== undefined ? `PC2 (${(v1 * 100).toFixed(1)}%)` : "PC2";
    this.svg.appendChild(axisY);

    let lo = Infinity;
    let hi = -Infinity;
    for (const v of this.labels) {
      if (v < lo) lo = v;
      if (v > hi) hi = v;
    }
    for (let i = 0; i < this.coords.length; i++) {
      const [px, py] = this.toPixel(this.coords[i][0], this.coords[i][1]);
      const c = this.doc.createElementNS(SVG_NS, "circle");
      c.setAttribute("cx", px.toFixed(2));
      c.setAttribute("cy", py.toFixed(2));
      c.setAttribute("r", "3");
      c.setAttribute("fill", labelColor(this.labels[i], lo, hi));
      c.setAttribute("data-index", String(i));
      this.svg.appendChild(c);
    }
    for (const i of this.selected) {
      if (i < 0 || i >= this.coords.length) continue;
      const [px, py] = this.toPixel(this.coords[i][0], this.coords[i][1]);
      const c = this.doc.createElementNS(SVG_NS, "circle");
      c.setAttribute("cx", px.toFixed(2));
      c.setAttribute("cy", py.toFixed(2));
      c.setAttribute("r", "4.5");
      c.setAttribute("fill", SELECTION_COLOR);
      c.setAttribute("data-selected-index", String(i));
      const title = this.doc.createElementNS(SVG_NS, "title");
      title.textContent = `selected i=${i}`;
      c.appendChild(title);
      this.svg.appendChild(c);
    }
  }
}
