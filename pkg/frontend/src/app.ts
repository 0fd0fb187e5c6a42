/**
 * Panel wiring: builds the DOM, owns the ViewState, talks to the service.
 *
 * Data flow is one-directional: user action -> state change -> URL fragment
 * sync -> fetch (selection resolution always server-side) -> render from
 * payload.  Responses arriving after a newer request are discarded.
 */

import {
  ApiClient,
  type FetchLike,
  LatestGate,
  type MsePayload,
  type RunSummary,
} from "./api.js";
import { renderHistogram, renderMse } from "./charts.js";
import { type PanelData, renderHeatmapGrid } from "./heatmap.js";
import { ScatterView } from "./scatter.js";
import {
  ALL_KINDS,
  type ChangeKind,
  DEFAULT_CAP,
  decodeState,
  encodeState,
  isAnchor,
  type RangeMode,
  type ViewState,
} from "./state.js";

export interface WindowLike {
  location: { hash: string };
  history: { replaceState(data: unknown, unused: string, url?: string): void };
}

export interface AppOptions {
  fetchImpl?: FetchLike;
  win?: WindowLike;
  apiBase?: string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  role?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (role !== undefined) node.setAttribute("data-role", role);
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  readonly ready: Promise<void>;
  state: ViewState;
  runs: RunSummary[] = [];
  selectionIndices: number[] = [];

  private readonly client: ApiClient;
  private readonly win: WindowLike;
  private readonly doc: Document;

  private readonly banner: HTMLElement;
  private readonly runSelect: HTMLSelectElement;
  private readonly kInput: HTMLInputElement;
  private readonly rangeSelect: HTMLSelectElement;
  private readonly strategyToggles: HTMLElement;
  private readonly kindToggles: HTMLElement;
  private readonly scatter: ScatterView;
  private readonly readout: HTMLElement;
  private readonly heatmaps: HTMLElement;
  private readonly mseBox: HTMLElement;
  private readonly histBox: HTMLElement;
  private readonly prefixSlider: HTMLInputElement;
  private readonly prefixLabel: HTMLElement;

  private runGate = new LatestGate();
  private selGate = new LatestGate();
  private histGate = new LatestGate();

  private msePayload: MsePayload | null = null;
  private panels: PanelData[] = [];
  private totalQueries = 0;

  constructor(root: HTMLElement, opts: AppOptions = {}) {
    this.doc = root.ownerDocument;
    this.win = opts.win ?? (window as unknown as WindowLike);
    this.client = new ApiClient(opts.apiBase ?? "", opts.fetchImpl);
    this.state = decodeState(this.win.location.hash);

    this.banner = el(this.doc, "div", "error");
    this.banner.style.display = "none";
    this.banner.style.background = "#FDDCDC";
    this.banner.style.padding = "6px 10px";
    root.appendChild(this.banner);

    const controls = el(this.doc, "div", "controls");
    controls.appendChild(el(this.doc, "span", undefined, "run "));
    this.runSelect = el(this.doc, "select", "run-select");
    controls.appendChild(this.runSelect);
    controls.appendChild(el(this.doc, "span", undefined, " k "));
    this.kInput = el(this.doc, "input", "k-input");
    this.kInput.setAttribute("type", "number");
    this.kInput.setAttribute("min", "1");
    this.kInput.value = "20";
    controls.appendChild(this.kInput);
    controls.appendChild(el(this.doc, "span", undefined, " scale "));
    this.rangeSelect = el(this.doc, "select", "range-mode");
    for (const mode of ["global_symmetric", "per_panel"]) {
      const opt = el(this.doc, "option", undefined, mode);
      opt.setAttribute("value", mode);
      this.rangeSelect.appendChild(opt);
    }
    controls.appendChild(this.rangeSelect);
    this.strategyToggles = el(this.doc, "span", "strategy-toggles");
    controls.appendChild(this.strategyToggles);
    this.kindToggles = el(this.doc, "span", "kind-toggles");
    controls.appendChild(this.kindToggles);
    root.appendChild(controls);

    this.scatter = new ScatterView(this.doc, {
      onAnchor: (x, y) => this.selectAnchor(x, y),
      onRect: (rect) => this.selectRect(rect),
    });
    root.appendChild(this.scatter.svg);

    this.readout = el(this.doc, "div", "readout", "hover a cell for its value");
    root.appendChild(this.readout);
    this.heatmaps = el(this.doc, "div", "heatmaps");
    root.appendChild(this.heatmaps);
    this.mseBox = el(this.doc, "div", "mse");
    root.appendChild(this.mseBox);

    const histControls = el(this.doc, "div", "hist-controls");
    this.prefixLabel = el(this.doc, "span", "prefix-label", "all queries");
    this.prefixSlider = el(this.doc, "input", "prefix-slider");
    this.prefixSlider.setAttribute("type", "range");
    this.prefixSlider.setAttribute("min", "0");
    this.prefixSlider.setAttribute("step", "1");
    histControls.appendChild(this.prefixSlider);
    histControls.appendChild(this.prefixLabel);
    root.appendChild(histControls);
    this.histBox = el(this.doc, "div", "histogram");
    root.appendChild(this.histBox);

    this.runSelect.addEventListener("change", () => {
      this.state.runId = this.runSelect.value;
      this.state.selection = null;
      this.syncHash();
      void this.loadRun();
    });
    this.rangeSelect.addEventListener("change", () => {
      this.state.rangeMode = this.rangeSelect.value as RangeMode;
      this.syncHash();
      this.renderPanels();
    });
    this.prefixSlider.addEventListener("change", () => void this.loadHistogram());
    this.prefixSlider.addEventListener("input", () => void this.loadHistogram());

    this.ready = this.init();
  }

  private async init(): Promise<void> {
    try {
      this.runs = await this.client.listRuns();
    } catch (err) {
      this.showError(String(err));
      return;
    }
    if (this.runs.length === 0) {
      this.showError("no runs loaded");
      return;
    }
    for (const run of this.runs) {
      const opt = el(this.doc, "option", undefined, run.run_id);
      opt.setAttribute("value", run.run_id);
      this.runSelect.appendChild(opt);
    }
    const known = this.runs.some((r) => r.run_id === this.state.runId);
    if (!known) this.state.runId = this.runs[0].run_id;
    this.runSelect.value = this.state.runId as string;
    if (isAnchor(this.state.selection)) this.kInput.value = String(this.state.selection.k);
    this.rangeSelect.value = this.state.rangeMode;
    this.syncHash();
    await this.loadRun();
  }

  private currentRun(): RunSummary {
    const run = this.runs.find((r) => r.run_id === this.state.runId);
    if (!run) throw new Error(`run ${this.state.runId} disappeared`);
    return run;
  }

  visibleStrategies(): Set<string> {
    const all = this.currentRun().strategies;
    if (this.state.strategies === null) return new Set(all);
    return new Set(all.filter((s) => this.state.strategies!.includes(s)));
  }

  visibleKinds(): Set<ChangeKind> {
    return new Set(this.state.kinds);
  }

  private buildToggles(): void {
    while (this.strategyToggles.firstChild) {
      this.strategyToggles.removeChild(this.strategyToggles.firstChild);
    }
    const visible = this.visibleStrategies();
    for (const name of this.currentRun().strategies) {
      const label = el(this.doc, "label", undefined);
      const box = el(this.doc, "input");
      box.setAttribute("type", "checkbox");
      box.setAttribute("data-strategy", name);
      (box as HTMLInputElement).checked = visible.has(name);
      box.addEventListener("change", () => this.onToggleChange());
      label.appendChild(box);
      label.appendChild(this.doc.createTextNode(name));
      this.strategyToggles.appendChild(label);
    }
    while (this.kindToggles.firstChild) {
      this.kindToggles.removeChild(this.kindToggles.firstChild);
    }
    for (const kind of ALL_KINDS) {
      const label = el(this.doc, "label", undefined);
      const box = el(this.doc, "input");
      box.setAttribute("type", "checkbox");
      box.setAttribute("data-kind", kind);
      (box as HTMLInputElement).checked = this.state.kinds.includes(kind);
      box.addEventListener("change", () => this.onToggleChange());
      label.appendChild(box);
      label.appendChild(this.doc.createTextNode(kind));
      this.kindToggles.appendChild(label);
    }
  }

  private onToggleChange(): void {
    const run = this.currentRun();
    const picked: string[] = [];
    this.strategyToggles.querySelectorAll("input[data-strategy]").forEach((node) => {
      const box = node as HTMLInputElement;
      if (box.checked) picked.push(box.getAttribute("data-strategy") as string);
    });
    this.state.strategies = picked.length === run.strategies.length ? null : picked;
    const kinds: ChangeKind[] = [];
    this.kindToggles.querySelectorAll("input[data-kind]").forEach((node) => {
      const box = node as HTMLInputElement;
      if (box.checked) kinds.push(box.getAttribute("data-kind") as ChangeKind);
    });
    this.state.kinds = kinds;
    this.syncHash();
    this.renderPanels();
    this.renderMseBox();
  }

  private syncHash(): void {
    const encoded = encodeState(this.state);
    this.win.history.replaceState(null, "", `#${encoded}`);
  }

  private showError(message: string): void {
    this.banner.textContent = message;
    this.banner.style.display = "block";
  }

  private clearError(): void {
    this.banner.style.display = "none";
    this.banner.textContent = "";
  }

  private async loadRun(): Promise<void> {
    const token = this.runGate.next();
    const runId = this.state.runId as string;
    this.buildToggles();
    try {
      const [emb, mse, hist] = await Promise.all([
        this.client.embedding(runId),
        this.client.mse(runId),
        this.client.histogram(runId),
      ]);
      if (!this.runGate.isCurrent(token)) return;
      this.clearError();
      this.scatter.setData(emb);
      this.msePayload = mse;
      this.renderMseBox();
      this.totalQueries = hist.prefix;
      const batches = this.currentRun().num_batches;
      this.prefixSlider.setAttribute("max", String(batches));
      this.prefixSlider.value = String(batches);
      this.prefixLabel.textContent = "all queries";
      renderHistogram(this.doc, this.histBox, hist, this.visibleStrategies());
    } catch (err) {
      if (this.runGate.isCurrent(token)) this.showError(String(err));
      return;
    }
    if (this.state.selection !== null) {
      await this.resolveSelection();
    } else {
      this.panels = [];
      this.selectionIndices = [];
      this.renderPanels();
    }
  }

  selectAnchor(x: number, y: number): void {
    const k = Math.max(1, Math.floor(Number(this.kInput.value) || 20));
    this.state.selection = { anchor: [x, y], k };
    this.syncHash();
    void this.resolveSelection();
  }

  selectRect(rect: [number, number, number, number]): void {
    const cap = Math.max(1, Math.floor(Number(this.kInput.value) || DEFAULT_CAP));
    this.state.selection = { rect, cap };
    this.syncHash();
    void this.resolveSelection();
  }

  private async resolveSelection(): Promise<void> {
    const spec = this.state.selection;
    if (spec === null) return;
    const token = this.selGate.next();
    const runId = this.state.runId as string;
    const run = this.currentRun();
    try {
      const sel = await this.client.selection(runId, spec);
      if (!this.selGate.isCurrent(token)) return;
      this.selectionIndices = sel.indices;
      this.scatter.setSelection(sel.indices);
      const jobs: Promise<PanelData>[] = [];
      for (const strategy of run.strategies) {
        for (const kind of ALL_KINDS) {
          jobs.push(
            this.client
              .change(runId, strategy, kind, sel.indices)
              .then((payload) => ({ strategy, kind, payload })),
          );
        }
      }
      const panels = await Promise.all(jobs);
      if (!this.selGate.isCurrent(token)) return;
      this.clearError();
      this.panels = panels;
      this.renderPanels();
    } catch (err) {
      if (this.selGate.isCurrent(token)) this.showError(String(err));
    }
  }

  private renderPanels(): void {
    if (this.runs.length === 0) return;
    renderHeatmapGrid(
      this.doc,
      this.heatmaps,
      this.panels,
      this.visibleStrategies(),
      this.visibleKinds(),
      this.state.rangeMode,
      this.readout,
    );
  }

  private renderMseBox(): void {
    if (this.msePayload === null) return;
    renderMse(this.doc, this.mseBox, this.msePayload, this.visibleStrategies());
  }

  private async loadHistogram(): Promise<void> {
    const token = this.histGate.next();
    const runId = this.state.runId as string;
    const batches = this.currentRun().num_batches;
    const slider = Number(this.prefixSlider.value);
    const perBatch = batches > 0 ? this.totalQueries / batches : 0;
    const prefix = Math.round(slider * perBatch);
    this.prefixLabel.textContent =
      slider >= batches ? "all queries" : `first ${prefix} queries`;
    try {
      const hist = await this.client.histogram(runId, prefix);
      if (!this.histGate.isCurrent(token)) return;
      this.clearError();
      renderHistogram(this.doc, this.histBox, hist, this.visibleStrategies());
    } catch (err) {
      if (this.histGate.isCurrent(token)) this.showError(String(err));
    }
  }
}

export function mountApp(root: HTMLElement, opts: AppOptions = {}): App {
  return new App(root, opts);
}
