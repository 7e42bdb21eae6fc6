"""Distribution diagnostics for implicit augmentation: before/after moment
reports, histograms with explicit under/overflow buckets, a 2-component
power-iteration PCA, and CSV/SVG export that needs no plotting stack.

CSV schemas:
  histogram.csv            bin_lo,bin_hi,count_before,count_after
  pca.csv                  id,group,pc1,pc2
  moments.csv              group,mean,std,count
  explained_variance.csv   component,variance
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .core import EmbeddingMatrix


def _values(matrix) -> np.ndarray:
    if isinstance(matrix, EmbeddingMatrix):
        return matrix.values.astype(np.float64)
    return np.asarray(matrix, dtype=np.float64)


def _ids(matrix, n: int) -> list[str]:
    if isinstance(matrix, EmbeddingMatrix):
        return list(matrix.ids)
    return [str(i) for i in range(n)]


@dataclass(frozen=True)
class MomentReport:
    """Population mean/std before and after perturbation; scalars in pooled
    mode, per-dimension vectors otherwise."""

    before_mean: np.ndarray | float
    before_std: np.ndarray | float
    after_mean: np.ndarray | float
    after_std: np.ndarray | float
    count: int
    pooled: bool


def moments(before, after, pooled: bool = True) -> MomentReport:
    b, a = _values(before), _values(after)
    if b.shape != a.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {a.shape}")
    if pooled:
        return MomentReport(float(b.mean()), float(b.std()),
                            float(a.mean()), float(a.std()),
                            count=b.size, pooled=True)
    return MomentReport(b.mean(axis=0), b.std(axis=0),
                        a.mean(axis=0), a.std(axis=0),
                        count=b.shape[0], pooled=False)


@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray  # length bins + 1
    counts: np.ndarray  # length bins
    underflow: int
    overflow: int


def histogram(values, bins: int, value_range) -> Histogram:
    """Equal-width bins over the closed range [lo, hi].

    Bins are half-open [edge_i, edge_{i+1}) except the last, which is closed,
    so a value on an interior edge falls in the upper bin and hi itself is
    counted. Out-of-range values land in the underflow/overflow buckets;
    counts + underflow + overflow always equals len(values).
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("histogram needs at least one value")
    lo, hi = float(value_range[0]), float(value_range[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"invalid range ({lo}, {hi})")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")

    underflow = int((v < lo).sum())
    overflow = int((v > hi).sum())
    inside = v[(v >= lo) & (v <= hi)]
    width = (hi - lo) / bins
    idx = np.floor((inside - lo) / width).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)  # hi (and rounding at hi) -> last bin
    counts = np.bincount(idx, minlength=bins)
    edges = lo + width * np.arange(bins + 1)
    return Histogram(edges=edges, counts=counts, underflow=underflow,
                     overflow=overflow)


def _top_eigenpair(cov: np.ndarray, tol: float = 1e-9, max_iter: int = 10000,
                   orthogonal_to: np.ndarray | None = None):
    d = cov.shape[0]

    def project(u: np.ndarray) -> np.ndarray:
        if orthogonal_to is not None:
            return u - (u @ orthogonal_to) * orthogonal_to
        return u

    v = project(np.ones(d) / np.sqrt(d))
    if np.linalg.norm(cov @ v) <= tol:
        # all-ones start may sit in the null space; restart from the
        # dimension with the largest variance
        v = np.zeros(d)
        v[int(np.argmax(np.diag(cov)))] = 1.0
        v = project(v)
    start_norm = np.linalg.norm(v)
    if start_norm == 0.0:
        return 0.0, np.zeros(d)
    v /= start_norm
    lam_prev = 0.0
    for _ in range(max_iter):
        w = project(cov @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, np.zeros(d)
        v_next = w / norm
        lam = float(v_next @ cov @ v_next)
        if np.linalg.norm(v_next - v) < tol or abs(lam - lam_prev) < tol * max(lam, 1e-30):
            v = v_next
            break
        v, lam_prev = v_next, lam
    lam = float(v @ cov @ v)
    j = int(np.argmax(np.abs(v)))
    if v[j] < 0:
        v = -v
    return max(lam, 0.0), v


def pca2(matrix):
    """Top-2 principal coordinates plus the pair of explained variances.

    Columns are centered; components come from iterated power method with
    deflation on the population covariance (deterministic all-ones start,
    tolerance 1e-9, at most 10^4 iterations). Sign convention: the largest-
    magnitude loading of each component is positive. Rank-0 input yields
    zero coordinates and zero explained variance.
    """
    x = _values(matrix)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ValueError("pca2 needs at least 2 rows")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / x.shape[0]

    lam1, v1 = _top_eigenpair(cov)
    if lam1 == 0.0:
        return np.zeros((x.shape[0], 2)), np.zeros(2)
    deflated = cov - lam1 * np.outer(v1, v1)
    lam2, v2 = _top_eigenpair(deflated, orthogonal_to=v1)
    coords = centered @ np.stack([v1, v2], axis=1)
    return coords, np.array([lam1, lam2])


def render_histogram_svg(hist_before: Histogram, hist_after: Histogram,
                         width: int = 640, height: int = 400) -> str:
    """Self-contained SVG with the two histograms overlaid."""
    bins = len(hist_before.counts)
    peak = max(1, int(hist_before.counts.max()), int(hist_after.counts.max()))
    margin = 40
    plot_w, plot_h = width - 2 * margin, height - 2 * margin
    bar_w = plot_w / bins

    def bars(counts, color, opacity):
        parts = []
        for i, c in enumerate(counts):
            h = plot_h * int(c) / peak
            if h <= 0:
                continue
            x = margin + i * bar_w
            y = margin + plot_h - h
            parts.append(
                f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{color}" fill-opacity="{opacity}"/>')
        return "".join(parts)

    lo = hist_before.edges[0]
    hi = hist_before.edges[-1]
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'{bars(hist_before.counts, "#4878cf", 0.65)}'
        f'{bars(hist_after.counts, "#e8a838", 0.65)}'
        f'<line x1="{margin}" y1="{margin + plot_h}" x2="{margin + plot_w}" '
        f'y2="{margin + plot_h}" stroke="black"/>'
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
        f'y2="{margin + plot_h}" stroke="black"/>'
        f'<text x="{margin}" y="{height - 8}" font-size="12">{lo:.4g}</text>'
        f'<text x="{margin + plot_w - 30}" y="{height - 8}" font-size="12">{hi:.4g}</text>'
        f'<text x="{margin}" y="{margin - 10}" font-size="12">'
        f'before (blue) vs after (orange), peak={peak}</text>'
        "</svg>"
    )


def render_scatter_svg(coords_before: np.ndarray, coords_after: np.ndarray,
                       width: int = 640, height: int = 480) -> str:
    """Self-contained SVG scatter of the two PCA point groups."""
    both = np.vstack([coords_before, coords_after])
    lo = both.min(axis=0)
    hi = both.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    margin = 40
    plot_w, plot_h = width - 2 * margin, height - 2 * margin

    def dots(coords, color):
        parts = []
        for px, py in coords:
            x = margin + (px - lo[0]) / span[0] * plot_w
            y = margin + plot_h - (py - lo[1]) / span[1] * plot_h
            parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2.5" '
                         f'fill="{color}" fill-opacity="0.6"/>')
        return "".join(parts)

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">'
        f'<rect width="{width}" height="{height}" fill="white"/>'
        f'{dots(coords_before, "#4878cf")}'
        f'{dots(coords_after, "#e8a838")}'
        f'<text x="{margin}" y="{margin - 10}" font-size="12">'
        f'pc1/pc2, before (blue) vs after (orange)</text>'
        "</svg>"
    )


def export_plots(before, after, out_dir, bins: int = 100) -> list[str]:
    """Write the four diagnostic CSVs and two SVG renderings for a
    before/after pair; returns the created file paths."""
    b, a = _values(before), _values(after)
    if b.shape != a.shape:
        raise ValueError(f"shape mismatch: {b.shape} vs {a.shape}")
    os.makedirs(out_dir, exist_ok=True)

    pooled = np.concatenate([b.ravel(), a.ravel()])
    lo, hi = float(pooled.min()), float(pooled.max())
    if hi <= lo:
        hi = lo + 1.0
    hist_b = histogram(b, bins, (lo, hi))
    hist_a = histogram(a, bins, (lo, hi))

    ids = _ids(before, b.shape[0])
    stacked = np.vstack([b, a])
    coords, explained = pca2(stacked)
    coords_b, coords_a = coords[:b.shape[0]], coords[b.shape[0]:]

    report = moments(b, a, pooled=True)

    paths = []

    def emit(name: str, text: str):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        paths.append(path)

    lines = ["bin_lo,bin_hi,count_before,count_after"]
    for i in range(bins):
        lines.append(f"{hist_b.edges[i]:.9g},{hist_b.edges[i + 1]:.9g},"
                     f"{hist_b.counts[i]},{hist_a.counts[i]}")
    emit("histogram.csv", "\n".join(lines) + "\n")

    lines = ["id,group,pc1,pc2"]
    for group, cs in (("before", coords_b), ("after", coords_a)):
        for row_id, (p1, p2) in zip(ids, cs):
            lines.append(f"{row_id},{group},{p1:.9g},{p2:.9g}")
    emit("pca.csv", "\n".join(lines) + "\n")

    emit("moments.csv",
         "group,mean,std,count\n"
         f"before,{report.before_mean:.9g},{report.before_std:.9g},{report.count}\n"
         f"after,{report.after_mean:.9g},{report.after_std:.9g},{report.count}\n")

    emit("explained_variance.csv",
         "component,variance\n"
         f"1,{explained[0]:.9g}\n2,{explained[1]:.9g}\n")

    emit("histogram.svg", render_histogram_svg(hist_b, hist_a))
    emit("pca.svg", render_scatter_svg(coords_b, coords_a))
    return paths
