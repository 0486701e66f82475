"""Per-node strongly convex objectives and their exact characteristics.

Two families are supported, both L2-regularized so strong convexity holds
with constant ``reg`` exactly:

* ridge:   F_i(w) = ||X_i w - y_i||^2 / (2 m_i) + reg/2 ||w||^2
* softmax: F_i(w) = mean cross-entropy of a linear classifier + reg/2 ||w||^2

For softmax the parameter vector is the (n_classes, d) weight matrix
flattened row-major.  The suite builder also computes smoothness and
strong-convexity constants, the exact global optimum, per-node optima,
the data-heterogeneity gap, and an empirical bound on squared stochastic
gradient norms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

__all__ = [
    "NodeProblem",
    "ProblemSuite",
    "local_loss",
    "local_gradient",
    "local_accuracy",
    "per_sample_grad_sq_norms",
    "constants",
    "local_optimum",
    "global_optimum",
    "global_loss",
    "global_gradient",
    "heterogeneity_gap",
    "grad_bound_estimate",
    "build_suite",
    "suite_to_json",
    "suite_from_json",
    "suite_digest",
]


@dataclass(frozen=True)
class NodeProblem:
    """One node's shard plus the objective it defines.

    ``targets`` holds real values for ridge and integer class indices for
    softmax.  ``n_classes`` is only meaningful for softmax.
    """

    features: np.ndarray
    targets: np.ndarray
    reg: float
    kind: str = "ridge"
    n_classes: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("ridge", "softmax"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("features must be a nonempty (m, d) matrix")
        if self.targets.shape[0] != self.features.shape[0]:
            raise ValueError("targets length must match sample count")
        if self.reg <= 0:
            raise ValueError("reg must be positive for strong convexity")
        if self.kind == "softmax" and self.n_classes < 2:
            raise ValueError("softmax needs n_classes >= 2")

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        d = self.features.shape[1]
        return d * self.n_classes if self.kind == "softmax" else d


def _check_dim(p: NodeProblem, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (p.dim,):
        raise ValueError(f"parameter has dimension {w.shape}, expected ({p.dim},)")
    return w


def _batch_rows(p: NodeProblem, batch):
    if batch is None:
        return np.arange(p.m)
    idx = np.asarray(batch, dtype=int)
    if idx.size == 0:
        raise ValueError("batch must be nonempty")
    return idx


def _softmax_probs(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def local_loss(p: NodeProblem, w) -> float:
    """Value of node loss at ``w`` (full shard)."""
    w = _check_dim(p, w)
    if p.kind == "ridge":
        resid = p.features @ w - p.targets
        return float(resid @ resid / (2.0 * p.m) + 0.5 * p.reg * (w @ w))
    mat = w.reshape(p.n_classes, -1)
    logits = p.features @ mat.T
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1)) + logits.max(axis=1)
    picked = logits[np.arange(p.m), p.targets.astype(int)]
    return float(np.mean(log_z - picked) + 0.5 * p.reg * (w @ w))


def local_gradient(p: NodeProblem, w, batch=None) -> np.ndarray:
    """Mini-batch gradient of the node loss; full-batch when ``batch`` is
    None.  An empty batch is rejected."""
    w = _check_dim(p, w)
    rows = _batch_rows(p, batch)
    x = p.features[rows]
    if p.kind == "ridge":
        resid = x @ w - p.targets[rows]
        return x.T @ resid / rows.size + p.reg * w
    mat = w.reshape(p.n_classes, -1)
    probs = _softmax_probs(x @ mat.T)
    probs[np.arange(rows.size), p.targets[rows].astype(int)] -= 1.0
    grad = probs.T @ x / rows.size + p.reg * mat
    return grad.ravel()


def local_accuracy(p: NodeProblem, w) -> float:
    """Fraction of the node's own samples classified correctly (softmax)."""
    if p.kind != "softmax":
        raise ValueError("accuracy is defined for softmax problems only")
    w = _check_dim(p, w)
    pred = (p.features @ w.reshape(p.n_classes, -1).T).argmax(axis=1)
    return float(np.mean(pred == p.targets.astype(int)))


def global_accuracy(problems, w) -> float:
    """Accuracy of one model on the union of all shards (softmax)."""
    problems = list(problems)
    hits = sum(local_accuracy(p, w) * p.m for p in problems)
    return float(hits / sum(p.m for p in problems))


def per_sample_grad_sq_norms(p: NodeProblem, w) -> np.ndarray:
    """Squared gradient norm of every single-sample batch at ``w``."""
    w = _check_dim(p, w)
    x = p.features
    if p.kind == "ridge":
        resid = x @ w - p.targets
        # grad_j = resid_j * x_j + reg * w
        xx = np.einsum("ij,ij->i", x, x)
        xw = x @ w
        return resid**2 * xx + 2.0 * p.reg * resid * xw + p.reg**2 * (w @ w)
    mat = w.reshape(p.n_classes, -1)
    a = _softmax_probs(x @ mat.T)
    a[np.arange(p.m), p.targets.astype(int)] -= 1.0
    # grad_j = outer(a_j, x_j) + reg * mat
    aa = np.einsum("ij,ij->i", a, a)
    xx = np.einsum("ij,ij->i", x, x)
    cross = np.einsum("jk,kd,jd->j", a, mat, x)
    return aa * xx + 2.0 * p.reg * cross + p.reg**2 * (w @ w)


def _curvature(p: NodeProblem) -> float:
    """Largest eigenvalue of X^T X / m for the node's shard."""
    gram = p.features.T @ p.features / p.m
    return float(np.linalg.eigvalsh(gram)[-1])


def constants(problems) -> tuple[float, float]:
    """Smoothness and strong-convexity constants valid for every node.

    Ridge: L = max_i lambda_max(X_i^T X_i / m_i) + reg.  Softmax: the
    cross-entropy Hessian in logit space is bounded by 1/2, so
    L = max_i lambda_max(X_i^T X_i / m_i) / 2 + reg.  Both families give
    mu = reg as an exact lower curvature bound.
    """
    problems = list(problems)
    reg = problems[0].reg
    top = max(_curvature(p) for p in problems)
    if problems[0].kind == "ridge":
        return top + reg, reg
    return top / 2.0 + reg, reg


def global_loss(problems, w) -> float:
    """Unweighted mean of the node losses (the network objective)."""
    problems = list(problems)
    return float(np.mean([local_loss(p, w) for p in problems]))


def global_gradient(problems, w) -> np.ndarray:
    problems = list(problems)
    return np.mean([local_gradient(p, w) for p in problems], axis=0)


def _ridge_solve(quads) -> np.ndarray:
    """Closed-form minimizer of a mean of ridge losses via the normal
    equations.  ``quads`` is a list of (X, y, m, reg)."""
    d = quads[0][0].shape[1]
    h = np.zeros((d, d))
    b = np.zeros(d)
    for x, y, m, reg in quads:
        h += x.T @ x / m
        b += x.T @ y / m
    k = len(quads)
    h = h / k + quads[0][3] * np.eye(d)
    return np.linalg.solve(h, b / k)


def _descend(problems, w0: np.ndarray, grad_tol: float, max_iter: int) -> np.ndarray:
    """Polish with fixed-step full-batch gradient descent until the global
    gradient norm falls below ``grad_tol``."""
    smooth, _ = constants(problems)
    w = w0.copy()
    for _ in range(max_iter):
        g = global_gradient(problems, w)
        if np.linalg.norm(g) < grad_tol:
            return w
        w = w - g / smooth
    g = global_gradient(problems, w)
    if np.linalg.norm(g) >= grad_tol:
        raise RuntimeError(
            f"optimum solver did not reach |grad| < {grad_tol:g} "
            f"within {max_iter} iterations (residual {np.linalg.norm(g):g})"
        )
    return w


def global_optimum(problems, grad_tol: float = 1e-10, max_iter: int = 200_000):
    """Minimizer and value of the mean objective.

    Ridge uses the exact normal-equation solve.  Softmax minimizes with
    L-BFGS and polishes with fixed-step descent until the gradient norm is
    below ``grad_tol``; failure to converge within the cap is an error.
    """
    problems = list(problems)
    kind = problems[0].kind
    if kind == "ridge":
        w = _ridge_solve([(p.features, p.targets, p.m, p.reg) for p in problems])
        return w, global_loss(problems, w)
    dim = problems[0].dim
    res = minimize(
        lambda w: (global_loss(problems, w), global_gradient(problems, w)),
        np.zeros(dim),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 5000, "gtol": 1e-12, "ftol": 0.0},
    )
    w = _descend(problems, res.x, grad_tol, max_iter)
    return w, global_loss(problems, w)


def local_optimum(p: NodeProblem, grad_tol: float = 1e-10, max_iter: int = 200_000):
    """Minimizer and value of one node's own loss."""
    if p.kind == "ridge":
        w = _ridge_solve([(p.features, p.targets, p.m, p.reg)])
        return w, local_loss(p, w)
    res = minimize(
        lambda w: (local_loss(p, w), local_gradient(p, w)),
        np.zeros(p.dim),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 5000, "gtol": 1e-12, "ftol": 0.0},
    )
    w = _descend([p], res.x, grad_tol, max_iter)
    return w, local_loss(p, w)


def heterogeneity_gap(problems, w_star, local_values, weights: str = "data") -> float:
    """Nonnegative data-heterogeneity measure: the gap between the global
    optimal value and the weighted sum of per-node optimal values.

    ``weights="data"`` weighs node i by its data share m_i / sum_j m_j;
    ``weights="uniform"`` uses 1/n.  Identical shards give 0; more skewed
    shards give larger values.  Tiny negative float residue (>= -1e-10)
    is clamped to 0.
    """
    problems = list(problems)
    if weights == "data":
        total = sum(p.m for p in problems)
        shares = [p.m / total for p in problems]
    elif weights == "uniform":
        shares = [1.0 / len(problems)] * len(problems)
    else:
        raise ValueError(f"unknown weighting {weights!r}")
    gap = global_loss(problems, w_star) - sum(s * v for s, v in zip(shares, local_values))
    if -1e-10 <= gap < 0.0:
        return 0.0
    return float(gap)


def grad_bound_estimate(problems, trajectory) -> float:
    """Empirical bound on squared per-sample gradient norms: the max over
    nodes, single-sample batches and trajectory points, times a 1.1
    safety factor.  Running it on a grown trajectory never decreases."""
    problems = list(problems)
    trajectory = list(trajectory)
    if not trajectory:
        raise ValueError("trajectory must be nonempty")
    worst = 0.0
    for w in trajectory:
        for p in problems:
            worst = max(worst, float(per_sample_grad_sq_norms(p, w).max()))
    return 1.1 * worst


@dataclass
class ProblemSuite:
    """Immutable bundle of node problems plus the exact quantities the
    analysis needs: curvature constants, global and local optima, the
    heterogeneity gap, and a gradient-norm bound estimate."""

    problems: list
    dimension: int
    L: float
    mu: float
    w_star: np.ndarray
    f_star: float
    local_optima: list
    gamma: float
    grad_bound_sq: float
    gamma_weights: str = "data"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.problems)

    @property
    def kind(self) -> str:
        return self.problems[0].kind


def build_suite(
    features: np.ndarray,
    targets: np.ndarray,
    node_indices,
    kind: str = "ridge",
    reg: float = 0.1,
    n_classes: int = 0,
    target_curvature: float | None = None,
    gamma_weights: str = "data",
) -> ProblemSuite:
    """Assemble a ProblemSuite from a dataset and per-node index sets.

    When ``target_curvature`` is given, all features are rescaled by one
    common factor so the largest per-node curvature lambda_max(X^T X / m)
    equals it; this pins the smoothness constant without changing the
    geometry of the partition.
    """
    features = np.asarray(features, dtype=float)
    targets = np.asarray(targets)
    node_indices = [np.asarray(ix, dtype=int) for ix in node_indices]
    if any(ix.size == 0 for ix in node_indices):
        raise ValueError("every node needs at least one sample")

    if kind == "ridge":
        node_targets = targets.astype(float)
    else:
        node_targets = targets.astype(int)
        if n_classes < 2:
            n_classes = int(node_targets.max()) + 1

    def make_problems(feats):
        return [
            NodeProblem(feats[ix], node_targets[ix], reg=reg, kind=kind, n_classes=n_classes)
            for ix in node_indices
        ]

    problems = make_problems(features)
    if target_curvature is not None:
        top = max(_curvature(p) for p in problems)
        if top > 0:
            features = features * np.sqrt(target_curvature / top)
            problems = make_problems(features)

    smooth, strong = constants(problems)
    w_star, f_star = global_optimum(problems)
    local_opts = [local_optimum(p) for p in problems]
    gap = heterogeneity_gap(problems, w_star, [v for _, v in local_opts], gamma_weights)
    probes = [np.zeros(problems[0].dim), w_star] + [w for w, _ in local_opts]
    bound = grad_bound_estimate(problems, probes)
    return ProblemSuite(
        problems=problems,
        dimension=problems[0].dim,
        L=smooth,
        mu=strong,
        w_star=w_star,
        f_star=f_star,
        local_optima=local_opts,
        gamma=gap,
        grad_bound_sq=bound,
        gamma_weights=gamma_weights,
    )


def _fmt_array(a: np.ndarray) -> list:
    return [format(v, ".17g") for v in np.asarray(a, dtype=float).ravel()]


def suite_to_json(suite: ProblemSuite) -> str:
    """Serialize a suite to JSON with 17 significant digits, matrices
    row-major, for reproducible fixtures."""
    payload = {
        "kind": suite.kind,
        "dimension": suite.dimension,
        "reg": format(suite.problems[0].reg, ".17g"),
        "n_classes": suite.problems[0].n_classes,
        "L": format(suite.L, ".17g"),
        "mu": format(suite.mu, ".17g"),
        "f_star": format(suite.f_star, ".17g"),
        "gamma": format(suite.gamma, ".17g"),
        "gamma_weights": suite.gamma_weights,
        "grad_bound_sq": format(suite.grad_bound_sq, ".17g"),
        "w_star": _fmt_array(suite.w_star),
        "local_optima": [
            {"w": _fmt_array(w), "value": format(v, ".17g")} for w, v in suite.local_optima
        ],
        "problems": [
            {
                "shape": list(p.features.shape),
                "features": _fmt_array(p.features),
                "targets": _fmt_array(p.targets)
                if p.kind == "ridge"
                else [int(t) for t in p.targets],
            }
            for p in suite.problems
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def suite_from_json(text: str) -> ProblemSuite:
    payload = json.loads(text)
    kind = payload["kind"]
    reg = float(payload["reg"])
    n_classes = int(payload["n_classes"])
    problems = []
    for spec in payload["problems"]:
        m, d = spec["shape"]
        feats = np.asarray([float(v) for v in spec["features"]]).reshape(m, d)
        if kind == "ridge":
            targs = np.asarray([float(v) for v in spec["targets"]])
        else:
            targs = np.asarray(spec["targets"], dtype=int)
        problems.append(NodeProblem(feats, targs, reg=reg, kind=kind, n_classes=n_classes))
    local_opts = [
        (np.asarray([float(v) for v in item["w"]]), float(item["value"]))
        for item in payload["local_optima"]
    ]
    return ProblemSuite(
        problems=problems,
        dimension=int(payload["dimension"]),
        L=float(payload["L"]),
        mu=float(payload["mu"]),
        w_star=np.asarray([float(v) for v in payload["w_star"]]),
        f_star=float(payload["f_star"]),
        local_optima=local_opts,
        gamma=float(payload["gamma"]),
        grad_bound_sq=float(payload["grad_bound_sq"]),
        gamma_weights=payload["gamma_weights"],
    )


def suite_digest(suite: ProblemSuite) -> str:
    """Content hash of the serialized suite (for run manifests)."""
    return hashlib.sha256(suite_to_json(suite).encode()).hexdigest()
