"""Decorrelation of the level-1 LH/HL subbands of a CFA mosaic transform.

Both detail subbands of a mosaicked image carry a near-identical lowpass
chroma component, so they are strongly correlated.  The integer sum /
difference pair removes it reversibly for lossless coding; a fitted 2x2
matrix does the same for the lossy path, trading reconstruction error
against sparsity of the mixed outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FIXED_POINT_SCALE = 65536  # M travels as 16.16 fixed point


class SingularMatrixError(ValueError):
    pass


@dataclass
class DecorrelatedBands:
    """Level-1 bands after decorrelation, plus the transform that made them.

    transform is "sumdiff" for the reversible integer pair or "matrix" with
    `matrix` set for the lossy path.
    """

    ll: np.ndarray
    band_sum: np.ndarray
    band_diff: np.ndarray
    hh: np.ndarray
    transform: str = "sumdiff"
    matrix: np.ndarray | None = None


@dataclass
class MatrixFitConfig:
    """Settings for the decorrelation-matrix search.

    objective_form "derivation" penalizes reconstruction error through the
    inverse matrix (||M^-1||_F^2); "literal" uses ||M||_F^2 instead.  Both
    add sparsity_weight * sum of L1 norms of the mixed coefficients.
    """

    sparsity_weight: float = 0.1
    max_iters: int = 10_000
    step_size: float = 1e-3
    tolerance: float = 1e-6
    objective_form: str = "derivation"
    radius: float = 10.0  # trust-region bound on ||M||_F

    def __post_init__(self):
        if self.sparsity_weight < 0:
            raise ValueError("sparsity_weight must be >= 0")
        if self.objective_form not in ("derivation", "literal"):
            raise ValueError(f"unknown objective_form {self.objective_form!r}")


@dataclass
class MatrixFitResult:
    matrix: np.ndarray
    objective_trace: list = field(default_factory=list)
    converged: bool = False
    iterations: int = 0


@dataclass
class DecorrelationStats:
    pearson_before: float
    pearson_after: float
    entropy_before: float
    entropy_after: float


DEFAULT_MATRIX = np.array([[0.5, 0.5], [0.5, -0.5]])


def sumdiff_forward(lh, hl):
    """Reversible integer pair transform: diff = lh - hl, sum = floor((lh+hl)/2)."""
    a = np.asarray(lh)
    b = np.asarray(hl)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    if not (np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer)):
        raise TypeError("sumdiff operates on integer grids")
    diff = a.astype(np.int64) - b.astype(np.int64)
    ssum = (a.astype(np.int64) + b.astype(np.int64)) // 2
    return ssum, diff


def sumdiff_inverse(band_sum, band_diff):
    s = np.asarray(band_sum, dtype=np.int64)
    d = np.asarray(band_diff, dtype=np.int64)
    if s.shape != d.shape:
        raise ValueError(f"shape mismatch {s.shape} vs {d.shape}")
    hl = s - d // 2
    lh = d + hl
    return lh, hl


def invert_2x2(m):
    m = np.asarray(m, dtype=np.float64)
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0 or not np.isfinite(det):
        raise SingularMatrixError(f"matrix {m.tolist()} is singular")
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det


def condition_number(m):
    return float(np.linalg.cond(np.asarray(m, dtype=np.float64)))


def matrix_forward(lh, hl, m):
    """(sum, diff) = M . (lh, hl) per pixel."""
    m = np.asarray(m, dtype=np.float64)
    invert_2x2(m)  # singularity check up front
    a = np.asarray(lh, dtype=np.float64)
    b = np.asarray(hl, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return m[0, 0] * a + m[0, 1] * b, m[1, 0] * a + m[1, 1] * b


def matrix_inverse(band_sum, band_diff, m):
    mi = invert_2x2(m)
    s = np.asarray(band_sum, dtype=np.float64)
    d = np.asarray(band_diff, dtype=np.float64)
    return mi[0, 0] * s + mi[0, 1] * d, mi[1, 0] * s + mi[1, 1] * d


def quantize_matrix(m):
    """Round M to 16.16 fixed point so encoder and decoder share exact values."""
    q = np.round(np.asarray(m, dtype=np.float64) * FIXED_POINT_SCALE)
    q = np.clip(q, -(2**31), 2**31 - 1).astype(np.int64)
    return q.astype(np.float64) / FIXED_POINT_SCALE


def _objective(m, w, lam, form):
    # The sparsity term is a per-sample mean so that lam keeps its meaning
    # regardless of how many coefficient pairs were collected.
    if form == "derivation":
        mi = invert_2x2(m)
        base = float(np.sum(mi * mi))
    else:
        base = float(np.sum(m * m))
    if lam > 0:
        v = m @ w
        base += lam * float(np.abs(v).sum()) / w.shape[1]
    return base


def _gradient(m, w, lam, form):
    if form == "derivation":
        mi = invert_2x2(m)
        g = -2.0 * (mi @ mi.T @ mi).T
    else:
        g = 2.0 * m
    if lam > 0:
        v = m @ w
        g = g + (lam / w.shape[1]) * np.sign(v) @ w.T
    return g


def fit_matrix(lh_samples, hl_samples, config: MatrixFitConfig | None = None) -> MatrixFitResult:
    """Search for the 2x2 decorrelation matrix by projected gradient descent.

    Minimizes the configured objective with an L1 sparsity penalty on the
    mixed coefficients (subgradient for the nonsmooth term, backtracking
    line search, projection onto ||M||_F <= radius).  The objective trace
    is non-increasing by construction; if max_iters is exhausted before
    the relative change drops below tolerance, the best iterate is
    returned with converged=False.
    """
    cfg = config or MatrixFitConfig()
    a = np.asarray(lh_samples, dtype=np.float64).ravel()
    b = np.asarray(hl_samples, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError("sample channels differ in length")
    if a.size < 1000:
        raise ValueError(f"need at least 1000 sample pairs, got {a.size}")
    w = np.vstack([a, b])
    lam = cfg.sparsity_weight

    def project(m):
        norm = float(np.sqrt(np.sum(m * m)))
        if norm > cfg.radius:
            return m * (cfg.radius / norm)
        return m

    m = project(DEFAULT_MATRIX.copy())
    obj = _objective(m, w, lam, cfg.objective_form)
    trace = [obj]
    step = cfg.step_size
    converged = False
    it = 0
    for it in range(1, cfg.max_iters + 1):
        g = _gradient(m, w, lam, cfg.objective_form)
        gnorm = float(np.sqrt(np.sum(g * g)))
        if gnorm == 0:
            converged = True
            break
        # Backtracking: accept the first step that lowers the objective.
        t = step
        accepted = False
        for _ in range(40):
            cand = project(m - t * g)
            try:
                cand_obj = _objective(cand, w, lam, cfg.objective_form)
            except SingularMatrixError:
                t *= 0.5
                continue
            if cand_obj < obj:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            converged = True
            break
        rel = (obj - cand_obj) / max(abs(obj), 1e-30)
        m, obj = cand, cand_obj
        trace.append(obj)
        step = min(t * 2.0, 1e6)  # reuse a slightly larger step next round
        if rel < cfg.tolerance:
            converged = True
            break
    return MatrixFitResult(matrix=m, objective_trace=trace, converged=converged,
                           iterations=it)


def order0_entropy(values):
    """Shannon entropy (bits/sample) of the integerized value histogram."""
    v = np.asarray(values).ravel()
    if v.size == 0:
        raise ValueError("entropy of an empty grid is undefined")
    if not np.issubdtype(v.dtype, np.integer):
        v = np.sign(v) * np.floor(np.abs(v) + 0.5)  # round half away from zero
        v = v.astype(np.int64)
    _, counts = np.unique(v, return_counts=True)
    p = counts / v.size
    return float(-(p * np.log2(p)).sum())


def pearson(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size < 2:
        raise ValueError("need at least 2 pairs")
    sa = a.std()
    sb = b.std()
    if sa == 0 or sb == 0:
        raise ValueError("correlation undefined for a zero-variance channel")
    return float(((a - a.mean()) * (b - b.mean())).mean() / (sa * sb))


def measure_decorrelation(lh, hl, matrix=None) -> DecorrelationStats:
    """Correlation and entropy before/after decorrelating a subband pair.

    With matrix=None the reversible sum/difference pair is used, otherwise
    the given 2x2 matrix.  "Before" refers to the LH channel, "after" to
    the difference channel.
    """
    a = np.asarray(lh)
    b = np.asarray(hl)
    r_before = pearson(a, b)
    if matrix is None:
        if not np.issubdtype(a.dtype, np.integer):
            a = np.sign(a) * np.floor(np.abs(a) + 0.5)
            b = np.sign(b) * np.floor(np.abs(b) + 0.5)
        s, d = sumdiff_forward(np.asarray(a, dtype=np.int64),
                               np.asarray(b, dtype=np.int64))
    else:
        s, d = matrix_forward(a, b, matrix)
    try:
        r_after = pearson(s, d)
    except ValueError:
        r_after = float("nan")  # degenerate: a mixed channel is constant
    return DecorrelationStats(
        pearson_before=r_before,
        pearson_after=r_after,
        entropy_before=order0_entropy(a),
        entropy_after=order0_entropy(d),
    )
