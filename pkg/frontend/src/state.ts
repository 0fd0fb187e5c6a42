/**
 * View state and its URL-fragment codec.
 *
 * Everything the panel shows is reproducible from a ViewState: the run, the
 * selection request (anchor or rectangle, never resolved indices; the server
 * owns selection resolution), the visible strategy/kind subsets, and the
 * colormap range mode.  Encoding round-trips exactly because JS number
 * to-string is shortest-round-trip.
 */

export const ALL_KINDS = ["vs_original", "vs_previous", "vs_truth"] as const;
export type ChangeKind = (typeof ALL_KINDS)[number];

export type RangeMode = "global_symmetric" | "per_panel";

export interface AnchorSelection {
  anchor: [number, number];
  k: number;
}

export interface RectSelection {
  rect: [number, number, number, number];
  cap: number;
}

export type SelectionSpec = AnchorSelection | RectSelection | null;

export interface ViewState {
  runId: string | null;
  selection: SelectionSpec;
  /** Visible strategies; null means all of the run's strategies. */
  strategies: string[] | null;
  kinds: ChangeKind[];
  rangeMode: RangeMode;
}

export const DEFAULT_K = 20;
export const DEFAULT_CAP = 20;

export function defaultState(): ViewState {
  return {
    runId: null,
    selection: null,
    strategies: null,
    kinds: [...ALL_KINDS],
    rangeMode: "global_symmetric",
  };
}

export function isAnchor(sel: SelectionSpec): sel is AnchorSelection {
  return sel !== null && "anchor" in sel;
}

export function isRect(sel: SelectionSpec): sel is RectSelection {
  return sel !== null && "rect" in sel;
}

/** Serialize to a fragment string (no leading '#'). */
export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.runId !== null) params.set("run", state.runId);
  if (isAnchor(state.selection)) {
    const { anchor, k } = state.selection;
    params.set("sel", `a:${anchor[0]},${anchor[1]},${k}`);
  } else if (isRect(state.selection)) {
    const { rect, cap } = state.selection;
    params.set("sel", `r:${rect.join(",")},${cap}`);
  }
  if (state.strategies !== null) params.set("strat", state.strategies.join(","));
  if (state.kinds.length !== ALL_KINDS.length) params.set("kinds", state.kinds.join(","));
  if (state.rangeMode !== "global_symmetric") params.set("range", state.rangeMode);
  return params.toString();
}

function parseNumbers(raw: string, arity: number): number[] | null {
  const parts = raw.split(",");
  if (parts.length !== arity) return null;
  const nums = parts.map(Number);
  return nums.every((n) => Number.isFinite(n)) ? nums : null;
}

/** Parse a fragment (with or without '#'); malformed pieces fall back to defaults. */
export function decodeState(fragment: string): ViewState {
  const state = defaultState();
  const raw = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (raw === "") return state;
  const params = new URLSearchParams(raw);

  const run = params.get("run");
  if (run) state.runId = run;

  const sel = params.get("sel");
  if (sel && sel.startsWith("a:")) {
    const nums = parseNumbers(sel.slice(2), 3);
    if (nums && Number.isInteger(nums[2]) && nums[2] >= 1) {
      state.selection = { anchor: [nums[0], nums[1]], k: nums[2] };
    }
  } else if (sel && sel.startsWith("r:")) {
    const nums = parseNumbers(sel.slice(2), 5);
    if (nums && Number.isInteger(nums[4]) && nums[4] >= 1) {
      state.selection = { rect: [nums[0], nums[1], nums[2], nums[3]], cap: nums[4] };
    }
  }

  const strat = params.get("strat");
  if (strat !== null) {
    const names = strat.split(",").filter((s) => s !== "");
    state.strategies = names;
  }

  const kinds = params.get("kinds");
  if (kinds !== null) {
    const picked = kinds
      .split(",")
      .filter((k): k is ChangeKind => (ALL_KINDS as readonly string[]).includes(k));
    if (picked.length > 0) state.kinds = picked;
  }

  if (params.get("range") === "per_panel") state.rangeMode = "per_panel";
  return state;
}
