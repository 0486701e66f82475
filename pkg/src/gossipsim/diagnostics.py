"""Round-level analysis quantities: the two network averages, the gradient
gap between them with its upper bound, the per-round contraction and noise
terms of the convergence recursion, and the non-vanishing gap component.

Column names of the trace schema are part of the on-disk contract and are
kept verbatim in :data:`TRACE_COLUMNS`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .objective import local_gradient

__all__ = [
    "TraceRow",
    "TRACE_COLUMNS",
    "full_average",
    "partial_average",
    "gradient_gap",
    "gradient_gap_bound",
    "convergence_terms",
    "convergence_envelope",
    "gap_term",
    "gap_monotonicity_check",
    "distance_to_optimum",
    "write_trace_csv",
    "read_trace_csv",
]


@dataclass
class TraceRow:
    """One simulation round's metrics.  Field order matches the CSV."""

    t: int = 0
    n1: int = 0
    n2: int = 0
    dist_wbar_sq: float = 0.0
    dist_wtilde_sq: float = 0.0
    div_lhs: float = 0.0
    div_rhs_main: float = 0.0
    div_rhs_appendix: float = 0.0
    alpha_t: float = 0.0
    beta_t: float = 0.0
    thm1_bound: float = 0.0
    gap_term: float = 0.0
    gamma: float = 0.0
    mean_loss: float = 0.0
    mean_acc: float = math.nan


TRACE_COLUMNS = tuple(f.name for f in fields(TraceRow))


def _as_models(models) -> np.ndarray:
    arr = np.asarray(models, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise ValueError("models must form a nonempty (n, d) array")
    return arr


def _mask(n: int, accessible) -> np.ndarray:
    if isinstance(accessible, (set, frozenset)):
        mask = np.zeros(n, dtype=bool)
        mask[[int(i) for i in accessible]] = True
        return mask
    arr = np.asarray(accessible)
    if arr.dtype == bool:
        if arr.shape != (n,):
            raise ValueError("boolean accessibility mask has wrong length")
        return arr
    mask = np.zeros(n, dtype=bool)
    mask[arr.astype(int)] = True
    return mask


def full_average(models) -> np.ndarray:
    """Plain mean of all local models."""
    return _as_models(models).mean(axis=0)


def partial_average(models, accessible, mode: str = "literal") -> np.ndarray:
    """Average that keeps accessible and dropped nodes apart.

    ``literal`` adds the two group means (an empty group contributes
    zero), which is not a convex combination when both groups are
    nonempty.  ``weighted`` combines the group means with weights n1/n and
    n2/n, which equals the full average identically.
    """
    arr = _as_models(models)
    mask = _mask(arr.shape[0], accessible)
    n1, n2 = int(mask.sum()), int((~mask).sum())
    if n1 == 0 and n2 == 0:
        raise ValueError("at least one group must be nonempty")
    mean_in = arr[mask].mean(axis=0) if n1 else np.zeros(arr.shape[1])
    mean_out = arr[~mask].mean(axis=0) if n2 else np.zeros(arr.shape[1])
    if mode == "literal":
        return mean_in + mean_out
    if mode == "weighted":
        n = n1 + n2
        return (n1 / n) * mean_in + (n2 / n) * mean_out
    raise ValueError(f"unknown partial-average mode {mode!r}")


def gradient_gap(models, accessible, suite, mode: str = "literal") -> float:
    """Norm of the difference between the descent directions seen by the
    two averages.

    The full-average side is the mean of node gradients at the overall
    mean model.  The split side evaluates each accessible node's gradient
    at the accessible-group mean (weight 1/n) and each dropped node's
    gradient at its own model (weight 1/n).  Zero when nobody is dropped
    or when all models coincide.  Both modes coincide here because the
    split side already carries the group-size weights.
    """
    del mode  # kept for interface symmetry with partial_average
    arr = _as_models(models)
    mask = _mask(arr.shape[0], accessible)
    wbar = arr.mean(axis=0)
    n = arr.shape[0]
    g_full = np.mean([local_gradient(p, wbar) for p in suite.problems], axis=0)
    g_split = np.zeros_like(g_full)
    if mask.any():
        mean_in = arr[mask].mean(axis=0)
        for i in np.flatnonzero(mask):
            g_split += local_gradient(suite.problems[i], mean_in)
    for i in np.flatnonzero(~mask):
        g_split += local_gradient(suite.problems[i], arr[i])
    g_split /= n
    return float(np.linalg.norm(g_split - g_full))


def gradient_gap_bound(
    models, accessible, wbar, smoothness: float, eta: float, constant: str = "appendix"
) -> float:
    """Upper bound paired with :func:`gradient_gap`.

    The bracket is n1 * ||mean_accessible - wbar|| plus the summed
    distances of dropped models from wbar, evaluated on the pre-round
    models.  ``constant`` picks the prefactor: ``main`` uses
    L * eta^2 / n, ``appendix`` uses (1 + L * eta^2) / n.
    """
    arr = _as_models(models)
    mask = _mask(arr.shape[0], accessible)
    n = arr.shape[0]
    wbar = arr.mean(axis=0) if wbar is None else np.asarray(wbar, dtype=float)
    bracket = 0.0
    if mask.any():
        bracket += mask.sum() * float(np.linalg.norm(arr[mask].mean(axis=0) - wbar))
    for i in np.flatnonzero(~mask):
        bracket += float(np.linalg.norm(arr[i] - wbar))
    if constant == "main":
        factor = smoothness * eta * eta / n
    elif constant == "appendix":
        factor = (1.0 + smoothness * eta * eta) / n
    else:
        raise ValueError(f"unknown bound constant {constant!r}")
    return factor * bracket


def convergence_terms(
    n1: int,
    n2: int,
    mean_inaccessible_norm_sq: float,
    gamma: float,
    eta: float,
    smoothness: float,
    strong_convexity: float,
    grad_bound_sq: float,
    rate: float,
    n: int,
) -> tuple[float, float]:
    """Per-round contraction factor and additive noise of the distance
    recursion dist_{t+1} <= alpha * dist_t + beta.

    alpha = 2 (1 - mu * eta).  beta collects four contributions scaled by
    1/n: the dropped-group mean size, the heterogeneity gap, accessible
    gradient noise, and the staleness term whose eta-free part (see
    :func:`gap_term`) survives a decaying learning rate.
    """
    alpha = 2.0 * (1.0 - strong_convexity * eta)
    beta = (
        eta * smoothness * n1 * mean_inaccessible_norm_sq
        + 4.0 * eta * gamma
        + 2.0 * n1 * eta**2 * grad_bound_sq
        + 2.0
        * n2
        * grad_bound_sq
        * (2.0 * eta**3 * (1.0 + 1.0 / rate) + 2.0 * strong_convexity * (1.0 - eta) / rate)
    ) / n
    return alpha, beta


def gap_term(
    n2: int, eta: float, strong_convexity: float, grad_bound_sq: float, rate: float, n: int
) -> float:
    """The component of beta not scaled below by the learning rate:
    4 * mu * (1 - eta) * n2 * G^2 / (n * rate).  Linear in the dropped
    count, inverse in the rejoin rate."""
    return 2.0 * n2 * grad_bound_sq * 2.0 * strong_convexity * (1.0 - eta) / rate / n


def convergence_envelope(trace, initial_dist_sq: float):
    """Evaluate the distance recursion along a trace.

    ``trace`` is a sequence of TraceRow-like objects (anything with
    ``alpha_t`` and ``beta_t``) or of (alpha, beta) pairs.  Returns the
    bound value after each round.  With alpha >= 1 the envelope grows;
    it is reported as computed, not clamped.
    """
    values = []
    bound = float(initial_dist_sq)
    for row in trace:
        if hasattr(row, "alpha_t"):
            alpha, beta = row.alpha_t, row.beta_t
        else:
            alpha, beta = row
        bound = alpha * bound + beta
        values.append(bound)
    if not values:
        raise ValueError("trace must be nonempty")
    return values


def gap_monotonicity_check(
    eta: float, strong_convexity: float, grad_bound_sq: float, n: int, rates
) -> bool:
    """True iff the eta-free beta component strictly grows with the
    dropped count over 0..n and strictly shrinks as the rejoin rate grows
    over the supplied grid."""
    rates = sorted(float(r) for r in rates)
    if len(rates) < 2 or grad_bound_sq <= 0 or not 0 < eta < 1:
        return False
    for rate in rates:
        vals = [gap_term(n2, eta, strong_convexity, grad_bound_sq, rate, n) for n2 in range(n + 1)]
        if not all(b > a for a, b in zip(vals, vals[1:])):
            return False
    for n2 in range(1, n + 1):
        vals = [gap_term(n2, eta, strong_convexity, grad_bound_sq, rate, n) for rate in rates]
        if not all(b < a for a, b in zip(vals, vals[1:])):
            return False
    return True


def distance_to_optimum(w, w_star) -> float:
    """Squared Euclidean distance to the optimum."""
    w = np.asarray(w, dtype=float)
    w_star = np.asarray(w_star, dtype=float)
    if w.shape != w_star.shape:
        raise ValueError("dimension mismatch")
    diff = w - w_star
    return float(diff @ diff)


def _format_value(name: str, value) -> str:
    if name in ("t", "n1", "n2"):
        return str(int(value))
    return format(float(value), ".12g")


def write_trace_csv(path, rows) -> None:
    """Write trace rows with the exact column order of TRACE_COLUMNS,
    12 significant digits and UNIX newlines."""
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in rows:
            fh.write(
                ",".join(_format_value(c, getattr(row, c)) for c in TRACE_COLUMNS) + "\n"
            )


def read_trace_csv(path):
    """Read back a trace written by :func:`write_trace_csv`."""
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for line in fh:
            parts = line.strip().split(",")
            kwargs = {}
            for name, raw in zip(TRACE_COLUMNS, parts):
                kwargs[name] = int(raw) if name in ("t", "n1", "n2") else float(raw)
            rows.append(TraceRow(**kwargs))
    return rows
