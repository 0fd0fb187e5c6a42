"""Deterministic SVG renderings: change heatmaps, MSE curves, the embedding
scatter, and query-label histograms.

No plotting library is used; every byte of output is a pure function of the
inputs (fixed float formatting, fixed element order), so rendered files can
be compared byte-for-byte in tests.
"""

from __future__ import annotations

import numpy as np

from .changes import ChangeMatrix
from .engine import RunArtifact

RAMP_NEG = (0x21, 0x66, 0xAC)
RAMP_MID = (0xFF, 0xFF, 0xFF)
RAMP_POS = (0xB2, 0x18, 0x2B)
LABEL_RAMP = ((0x44, 0x01, 0x54), (0x21, 0x91, 0x8C), (0xFD, 0xE7, 0x25))
STRATEGY_COLORS = {"al": "#1B9E77", "uc": "#D95F02", "rn": "#7570B3"}
FALLBACK_COLOR = "#666666"
SELECTION_COLOR = "#E41A1C"
FONT = 'font-family="sans-serif" font-size="11"'


def _f(x: float) -> str:
    return format(float(x), ".2f")


def _hex(rgb) -> str:
    return "#%02X%02X%02X" % rgb


def _lerp(c0, c1, t: float):
    return tuple(int(round(a + (b - a) * t)) for a, b in zip(c0, c1))


def diverging_color(value: float, vmax: float) -> str:
    """Blue-white-red ramp, white at zero, saturating at +-vmax."""
    if vmax <= 0:
        return _hex(RAMP_MID)
    t = max(-1.0, min(1.0, value / vmax))
    if t >= 0:
        return _hex(_lerp(RAMP_MID, RAMP_POS, t))
    return _hex(_lerp(RAMP_MID, RAMP_NEG, -t))


def label_color(value: float, lo: float, hi: float) -> str:
    if hi <= lo:
        return _hex(LABEL_RAMP[1])
    t = (value - lo) / (hi - lo)
    t = max(0.0, min(1.0, t))
    if t < 0.5:
        return _hex(_lerp(LABEL_RAMP[0], LABEL_RAMP[1], t * 2))
    return _hex(_lerp(LABEL_RAMP[1], LABEL_RAMP[2], t * 2 - 1))


def _svg_open(width: int, height: int) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#FFFFFF"/>',
    ]


def heatmap_svg(matrix: ChangeMatrix, vmax: float | None = None, cell: int = 16) -> str:
    """One change matrix as a cell grid; rows are selected test points in
    selection order, columns are batches 1..Q.

    Pass a shared vmax to put several heatmaps on a common color scale.
    Each cell carries a <title> readout with its exact value.
    """
    k = matrix.k
    Q = matrix.q_axis.shape[0]
    if vmax is None:
        vmax = float(np.max(np.abs(matrix.values))) if matrix.values.size else 0.0
    ml, mt, mb = 58, 26, 30
    width = ml + max(Q, 1) * cell + 12
    height = mt + max(k, 1) * cell + mb
    out = _svg_open(width, height)
    out.append(
        f'<text x="{ml}" y="16" {FONT}>{matrix.strategy} {matrix.kind}'
        f' (range {_f(vmax)})</text>'
    )
    if k == 0:
        out.append(f'<text x="{ml}" y="{mt + 14}" {FONT}>empty selection</text>')
    for r in range(k):
        out.append(
            f'<text x="4" y="{mt + r * cell + cell - 4}" {FONT}>'
            f"i={int(matrix.row_indices[r])}</text>"
        )
        for c in range(Q):
            v = float(matrix.values[r, c])
            out.append(
                f'<rect x="{ml + c * cell}" y="{mt + r * cell}" width="{cell}" '
                f'height="{cell}" fill="{diverging_color(v, vmax)}" '
                f'stroke="#DDDDDD" stroke-width="0.5">'
                f"<title>i={int(matrix.row_indices[r])} q={int(matrix.q_axis[c])} "
                f"value={format(v, '.6g')}</title></rect>"
            )
    for c in range(Q):
        if Q <= 20 or c % max(1, Q // 10) == 0 or c == Q - 1:
            out.append(
                f'<text x="{ml + c * cell + 2}" y="{height - 10}" {FONT}>'
                f"{int(matrix.q_axis[c])}</text>"
            )
    out.append("</svg>\n")
    return "".join(out)


def mse_svg(strategies, mse: np.ndarray, width: int = 480, height: int = 320) -> str:
    """MSE against number of batches, one line per strategy."""
    mse = np.asarray(mse, dtype=np.float64)
    S, cols = mse.shape
    Q = cols - 1
    ml, mr, mt, mb = 64, 16, 24, 36
    lo = float(mse.min())
    hi = float(mse.max())
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    def px(q):
        return ml + (width - ml - mr) * (q / Q if Q else 0.5)

    def py(v):
        return mt + (height - mt - mb) * (1 - (v - lo) / (hi - lo))

    out = _svg_open(width, height)
    out.append(
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{height - mb}" stroke="#000000"/>'
    )
    out.append(
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" '
        'stroke="#000000"/>'
    )
    out.append(f'<text x="6" y="{_f(py(hi - pad))}" {FONT}>{format(hi - pad, ".4g")}</text>')
    out.append(f'<text x="6" y="{_f(py(lo + pad))}" {FONT}>{format(lo + pad, ".4g")}</text>')
    out.append(f'<text x="{ml}" y="{height - 8}" {FONT}>0</text>')
    out.append(f'<text x="{width - mr - 18}" y="{height - 8}" {FONT}>{Q}</text>')
    out.append(f'<text x="{ml + 60}" y="{height - 8}" {FONT}>batches</text>')
    for si, name in enumerate(strategies):
        color = STRATEGY_COLORS.get(name, FALLBACK_COLOR)
        pts = " ".join(f"{_f(px(q))},{_f(py(mse[si, q]))}" for q in range(cols))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        for q in range(cols):
            out.append(
                f'<circle cx="{_f(px(q))}" cy="{_f(py(mse[si, q]))}" r="2.5" fill="{color}">'
                f"<title>{name} q={q} mse={format(float(mse[si, q]), '.6g')}</title></circle>"
            )
        out.append(
            f'<text x="{width - mr - 40}" y="{mt + 14 * si + 10}" fill="{color}" {FONT}>'
            f"{name}</text>"
        )
    out.append("</svg>\n")
    return "".join(out)


def scatter_svg(
    coords: np.ndarray,
    values: np.ndarray,
    selection=None,
    width: int = 480,
    height: int = 420,
) -> str:
    """Embedding scatter colored by label, selected points overdrawn in red."""
    coords = np.asarray(coords, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    ml, mr, mt, mb = 40, 16, 16, 28
    x_lo, x_hi = float(coords[:, 0].min()), float(coords[:, 0].max())
    y_lo, y_hi = float(coords[:, 1].min()), float(coords[:, 1].max())
    if x_hi <= x_lo:
        x_hi = x_lo + 1.0
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    v_lo, v_hi = float(values.min()), float(values.max())

    def px(x):
        return ml + (width - ml - mr) * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return mt + (height - mt - mb) * (1 - (y - y_lo) / (y_hi - y_lo))

    out = _svg_open(width, height)
    for i in range(coords.shape[0]):
        out.append(
            f'<circle cx="{_f(px(coords[i, 0]))}" cy="{_f(py(coords[i, 1]))}" r="2" '
            f'fill="{label_color(float(values[i]), v_lo, v_hi)}">'
            f"<title>i={i} label={format(float(values[i]), '.6g')}</title></circle>"
        )
    if selection is not None:
        for idx in np.asarray(selection, dtype=np.int64):
            out.append(
                f'<circle cx="{_f(px(coords[idx, 0]))}" cy="{_f(py(coords[idx, 1]))}" '
                f'r="3.5" fill="{SELECTION_COLOR}" stroke="#000000" stroke-width="0.5">'
                f"<title>selected i={int(idx)}</title></circle>"
            )
    out.append(f'<text x="{ml}" y="{height - 8}" {FONT}>pc1</text>')
    out.append(f'<text x="6" y="{mt + 12}" {FONT}>pc2</text>')
    out.append("</svg>\n")
    return "".join(out)


def histogram_data(
    artifact: RunArtifact,
    prefix: int | None = None,
    bins: int = 40,
    comparison_labels=None,
):
    """Shared-bin histograms of each strategy's first `prefix` queried labels.

    Returns (bin_edges, {strategy: counts}, comparison counts).  The
    comparison distribution defaults to the artifact's test labels, the
    only full label sample an artifact carries; pass the complete dataset's
    labels to compare against those instead.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    total = artifact.queried_labels.shape[1] * artifact.queried_labels.shape[2]
    if prefix is None:
        prefix = total
    if prefix < 0 or prefix > total:
        raise ValueError(f"prefix must be in [0, {total}]")
    comparison = np.asarray(
        artifact.test_labels if comparison_labels is None else comparison_labels,
        dtype=np.float64,
    )
    per_strategy = {
        name: artifact.queried_labels[si].ravel()[:prefix]
        for si, name in enumerate(artifact.strategies)
    }
    pooled = np.concatenate([comparison] + list(per_strategy.values()))
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts = {
        name: np.histogram(vals, bins=edges)[0] for name, vals in per_strategy.items()
    }
    comp_counts = np.histogram(comparison, bins=edges)[0]
    return edges, counts, comp_counts


def histogram_svg(
    bin_edges: np.ndarray,
    series: list[tuple[str, np.ndarray, str]],
    width: int = 480,
    height: int = 300,
) -> str:
    """Overlaid step-outline histograms; series items are (name, counts, color)."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    ml, mr, mt, mb = 52, 16, 24, 32
    ymax = max((int(np.max(c)) for _, c, _ in series if len(c)), default=0)
    ymax = max(ymax, 1)
    x_lo, x_hi = float(edges[0]), float(edges[-1])

    def px(x):
        return ml + (width - ml - mr) * (x - x_lo) / (x_hi - x_lo)

    def py(c):
        return mt + (height - mt - mb) * (1 - c / ymax)

    out = _svg_open(width, height)
    out.append(
        f'<line x1="{ml}" y1="{height - mb}" x2="{width - mr}" y2="{height - mb}" '
        'stroke="#000000"/>'
    )
    out.append(f'<text x="6" y="{mt + 4}" {FONT}>{ymax}</text>')
    out.append(f'<text x="{ml}" y="{height - 8}" {FONT}>{format(x_lo, ".4g")}</text>')
    out.append(
        f'<text x="{width - mr - 40}" y="{height - 8}" {FONT}>{format(x_hi, ".4g")}</text>'
    )
    for li, (name, counts, color) in enumerate(series):
        pts = [f"{_f(px(edges[0]))},{_f(py(0))}"]
        for b in range(len(counts)):
            c = float(counts[b])
            pts.append(f"{_f(px(edges[b]))},{_f(py(c))}")
            pts.append(f"{_f(px(edges[b + 1]))},{_f(py(c))}")
        pts.append(f"{_f(px(edges[-1]))},{_f(py(0))}")
        out.append(
            f'<polyline points="{" ".join(pts)}" fill="none" stroke="{color}" '
            'stroke-width="1.5"/>'
        )
        out.append(
            f'<text x="{width - mr - 60}" y="{mt + 14 * li + 10}" fill="{color}" {FONT}>'
            f"{name}</text>"
        )
    out.append("</svg>\n")
    return "".join(out)
