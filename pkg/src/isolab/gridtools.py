"""Shared numeric plumbing: quadrature tables, extrapolation, CSV output.

Nothing in here knows about measures or densities; these are the small
deterministic building blocks the rest of the package leans on.
"""

import csv
import datetime
import os

import numpy as np
from scipy.integrate import cumulative_simpson

from .errors import NumericError

# Quadrature self-consistency demanded from cumulative tables.
MASS_TOL = 1e-10


def segmented_grid(lo, hi, breakpoints, total_nodes):
    """Piecewise-uniform grid on [lo, hi] split at interior breakpoints.

    Each segment receives an even number of intervals (odd node count)
    so that composite Simpson pairs never straddle a breakpoint.  Used
    for cumulative tables of densities whose potential has kinks.
    Returns (nodes, segment_start_indices).
    """
    pts = [lo] + sorted(p for p in breakpoints if lo < p < hi) + [hi]
    nodes = []
    starts = [0]
    span = hi - lo
    for a, b in zip(pts[:-1], pts[1:]):
        n_int = max(4, int(round(total_nodes * (b - a) / span)))
        n_int += n_int % 2  # even interval count per segment
        seg = np.linspace(a, b, n_int + 1)
        if nodes:
            nodes.append(seg[1:])
            starts.append(starts[-1] + n_int)
        else:
            nodes.append(seg)
            starts.append(n_int)
    return np.concatenate(nodes), starts[:-1]


def cumulative_table(nodes, values, segment_starts=None):
    """Cumulative integral of sampled values along nodes, Simpson order.

    Integration restarts at each segment boundary so kinks at segment
    edges do not degrade the composite order.  Returns an array of the
    same length as nodes, starting at 0.
    """
    if segment_starts is None or len(segment_starts) <= 1:
        out = np.empty_like(values)
        out[0] = 0.0
        out[1:] = cumulative_simpson(values, x=nodes)
        return out
    out = np.empty_like(values)
    bounds = list(segment_starts) + [len(nodes) - 1]
    base = 0.0
    for s, e in zip(bounds[:-1], bounds[1:]):
        out[s] = base
        out[s + 1 : e + 1] = base + cumulative_simpson(
            values[s : e + 1], x=nodes[s : e + 1]
        )
        base = out[e]
    return out


def extrapolate_to_zero(steps, values, max_order=None):
    """Neville extrapolation of values(step) to step -> 0.

    steps must be positive and strictly decreasing.  Returns
    (limit, oscillation) where oscillation is the relative spread of
    the last Neville column, a convergence diagnostic.
    """
    x = np.asarray(steps, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise NumericError("extrapolation needs >= 2 (step, value) pairs")
    if np.any(np.diff(x) >= 0) or np.any(x <= 0):
        raise NumericError("steps must be positive, strictly decreasing")
    n = x.size
    order = n - 1 if max_order is None else min(max_order, n - 1)
    tab = y.copy()
    last_col = y.copy()
    for k in range(1, order + 1):
        new = np.empty(n - k)
        for i in range(n - k):
            # Neville update for the value at step 0
            new[i] = (x[i] * tab[i + 1] - x[i + k] * tab[i]) / (x[i] - x[i + k])
        tab = new
        last_col = new
    limit = float(last_col[-1])
    scale = max(abs(limit), 1e-30)
    osc = float(np.ptp(last_col)) / scale if last_col.size > 1 else 0.0
    return limit, osc


def worker_count():
    """Worker cap for parallel sweeps, from ISO_LAB_THREADS (default 1)."""
    raw = os.environ.get("ISO_LAB_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def write_csv(path, columns, rows, meta=None, timestamp=True):
    """Write rows to path with the fixed `# schema: v1` comment header.

    columns: ordered list of column names.
    rows: iterable of tuples matching columns.
    meta: optional dict rendered as `# key: value` comment lines in
    sorted key order.  The timestamp line is suppressible so reruns can
    be byte-identical.
    """
    with open(path, "w", newline="") as fh:
        fh.write("# schema: v1\n")
        if timestamp:
            stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
            fh.write(f"# timestamp: {stamp}\n")
        if meta:
            for key in sorted(meta):
                fh.write(f"# {key}: {meta[key]}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return v
