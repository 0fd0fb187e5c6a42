/**
 * Color ramps mirrored from the server's SVG renderer so the panel and the
 * static plots read identically.
 */

export type Rgb = [number, number, number];

export const RAMP_NEG: Rgb = [0x21, 0x66, 0xac];
export const RAMP_MID: Rgb = [0xff, 0xff, 0xff];
export const RAMP_POS: Rgb = [0xb2, 0x18, 0x2b];

const LABEL_LO: Rgb = [0x44, 0x01, 0x54];
const LABEL_MID: Rgb = [0x21, 0x91, 0x8c];
const LABEL_HI: Rgb = [0xfd, 0xe7, 0x25];

export const STRATEGY_COLORS: Record<string, string> = {
  al: "#1B9E77",
  uc: "#D95F02",
  rn: "#7570B3",
};
export const FALLBACK_COLOR = "#666666";
export const SELECTION_COLOR = "#E41A1C";

function hex(rgb: Rgb): string {
  return (
    "#" +
    rgb
      .map((c) => Math.max(0, Math.min(255, c)).toString(16).padStart(2, "0"))
      .join("")
      .toUpperCase()
  );
}

function lerp(c0: Rgb, c1: Rgb, t: number): Rgb {
  return [
    Math.round(c0[0] + (c1[0] - c0[0]) * t),
    Math.round(c0[1] + (c1[1] - c0[1]) * t),
    Math.round(c0[2] + (c1[2] - c0[2]) * t),
  ];
}

/** Blue-white-red ramp, white at zero, saturating at +-vmax. */
export function divergingColor(value: number, vmax: number): string {
  if (!(vmax > 0)) return hex(RAMP_MID);
  const t = Math.max(-1, Math.min(1, value / vmax));
  return t >= 0 ? hex(lerp(RAMP_MID, RAMP_POS, t)) : hex(lerp(RAMP_MID, RAMP_NEG, -t));
}

/** Continuous label ramp over [lo, hi]; degenerate ranges map to the middle. */
export function labelColor(value: number, lo: number, hi: number): string {
  if (!(hi > lo)) return hex(LABEL_MID);
  const t = Math.max(0, Math.min(1, (value - lo) / (hi - lo)));
  return t < 0.5 ? hex(lerp(LABEL_LO, LABEL_MID, t * 2)) : hex(lerp(LABEL_MID, LABEL_HI, t * 2 - 1));
}

export function strategyColor(name: string): string {
  return STRATEGY_COLORS[name] ?? FALLBACK_COLOR;
}
