"""Contrastive distillation losses for hash codes, with analytic gradients.

Batch layout: M anchors with relaxed student codes ``S`` (M, b), the frozen
teacher's codes for the anchors ``T`` (M, b) and for their augmentations
``T'`` (M, b).  Teacher-side columns are indexed ``0..M-1`` for anchors and
``M..2M-1`` for augmentations, so the positive of anchor ``i`` is column
``i + M`` and every other column is a negative.

Similarity is cosine.  All losses are per-batch sums over anchors and are
computed in float64.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitmask import BitMaskSet
from .errors import DimensionError, InvalidInputError

__all__ = [
    "BatchView",
    "LossConfig",
    "ALPHA_GRID",
    "dynamic_alpha",
    "loss_basic",
    "grad_basic",
    "loss_robust",
    "grad_robust",
    "loss_brcd",
    "grad_brcd",
    "brcd_loss_and_grad",
    "sp_loss",
    "sp_pair_expand",
    "kl_loss",
]

ALPHA_GRID = (0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class LossConfig:
    alpha: float = 0.8
    tau: float = 0.3
    delta: float = 0.4

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidInputError(f"tau must be > 0, got {self.tau}")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidInputError(f"delta must lie in [0, 1], got {self.delta}")


@dataclass(frozen=True, eq=False)
class BatchView:
    student: np.ndarray  # (M, b) relaxed codes
    teacher: np.ndarray  # (M, b) ±1
    teacher_aug: np.ndarray  # (M, b) ±1
    anchor_labels: np.ndarray | None = None  # (M,) cluster indices
    aug_labels: np.ndarray | None = None  # (M,)

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.student, dtype=np.float64))
        t = np.atleast_2d(np.asarray(self.teacher, dtype=np.float64))
        ta = np.atleast_2d(np.asarray(self.teacher_aug, dtype=np.float64))
        if not (s.shape == t.shape == ta.shape):
            raise DimensionError(f"shape mismatch: student {s.shape}, teacher {t.shape}, aug {ta.shape}")
        if not np.all(np.isfinite(s)):
            raise InvalidInputError("student codes contain non-finite values")
        if not (np.all(np.abs(t) == 1) and np.all(np.abs(ta) == 1)):
            raise InvalidInputError("teacher codes must be exactly ±1")
        object.__setattr__(self, "student", s)
        object.__setattr__(self, "teacher", t)
        object.__setattr__(self, "teacher_aug", ta)
        for name in ("anchor_labels", "aug_labels"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=np.int64).reshape(-1)
                if v.size != s.shape[0]:
                    raise DimensionError(f"{name} needs one entry per anchor")
                object.__setattr__(self, name, v)

    @property
    def M(self) -> int:
        return self.student.shape[0]

    @property
    def b(self) -> int:
        return self.student.shape[1]

    @property
    def teacher_all(self) -> np.ndarray:
        return np.concatenate([self.teacher, self.teacher_aug])

    @property
    def labels_all(self) -> np.ndarray:
        if self.anchor_labels is None or self.aug_labels is None:
            raise InvalidInputError("this loss needs pseudo labels for anchors and augmentations")
        return np.concatenate([self.anchor_labels, self.aug_labels])

    def with_student(self, student) -> "BatchView":
        return BatchView(student, self.teacher, self.teacher_aug, self.anchor_labels, self.aug_labels)


def dynamic_alpha(y_anchor, y_aug, alpha: float):
    """``alpha`` where the augmentation kept its anchor's cluster, 1 where it drifted."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInputError(f"alpha must lie in [0, 1], got {alpha}")
    res = np.where(np.asarray(y_anchor) == np.asarray(y_aug), float(alpha), 1.0)
    return float(res) if res.ndim == 0 else res


def _require_pairs(batch: BatchView, allow_single: bool):
    if batch.M < 2 and not allow_single:
        raise InvalidInputError("a batch needs M >= 2 anchors to have negatives")


def _cosine_matrix(U: np.ndarray, V: np.ndarray):
    """Row-wise cosines of U against V plus the pieces needed for the gradient.

    Zero rows get similarity 0 and contribute no gradient.
    """
    nu = np.linalg.norm(U, axis=1)
    nv = np.linalg.norm(V, axis=1)
    inv_u = np.divide(1.0, nu, out=np.zeros_like(nu), where=nu > 0)
    inv_v = np.divide(1.0, nv, out=np.zeros_like(nv), where=nv > 0)
    V_hat = V * inv_v[:, None]
    C = (U @ V_hat.T) * inv_u[:, None]
    return C, V_hat, inv_u


def _cosine_backward(G, C, U, V_hat, inv_u):
    """dL/dU given dL/dC = G for C = cos(U rows, V rows)."""
    return (G @ V_hat) * inv_u[:, None] - ((G * C).sum(1) * inv_u**2)[:, None] * U


def _logsumexp_rows(Z, keep):
    Zm = np.where(keep, Z, -np.inf)
    mx = Zm.max(axis=1, keepdims=True)
    E = np.where(keep, np.exp(Zm - mx), 0.0)
    tot = E.sum(axis=1, keepdims=True)
    return (mx + np.log(tot))[:, 0], E / tot


# --- contrastive loss with fixed alpha over the full batch -------------------


def _basic_parts(batch: BatchView, cfg: LossConfig):
    M = batch.M
    C, T_hat, inv_s = _cosine_matrix(batch.student, batch.teacher_all)
    rows = np.arange(M)
    num = cfg.alpha * C[rows, rows] + (1.0 - cfg.alpha) * C[rows, rows + M]
    lse, W = _logsumexp_rows(C / cfg.tau, np.ones_like(C, dtype=bool))
    return C, T_hat, inv_s, num, lse, W


def loss_basic(batch: BatchView, cfg: LossConfig, allow_single: bool = False, per_row: bool = False):
    """Contrastive loss with a fixed alpha mixing the teacher code and its augmentation.

    ``allow_single`` admits M = 1, where the relevance set is just {i, i'}.
    """
    _require_pairs(batch, allow_single)
    _, _, _, num, lse, _ = _basic_parts(batch, cfg)
    rows = lse - num / cfg.tau
    return rows if per_row else float(rows.sum())


def grad_basic(batch: BatchView, cfg: LossConfig, allow_single: bool = False) -> np.ndarray:
    """Closed-form gradient of :func:`loss_basic` w.r.t. the student codes.

    With softmax weights ``w_r`` over the relevance set the gradient in
    similarity space is ``sum_n w_n t_n - alpha*rho2 t_i - (1-alpha)*rho3 t_i'``
    all over tau, where ``alpha*rho2 = alpha - w_i`` and
    ``(1-alpha)*rho3 = (1-alpha) - w_i'``.  The cosine normalisation then
    projects that vector orthogonally to ``s_i`` and scales by
    ``1 / (|s_i| |t|)``.
    """
    _require_pairs(batch, allow_single)
    M = batch.M
    C, T_hat, inv_s, _, _, W = _basic_parts(batch, cfg)
    rows = np.arange(M)
    rho1 = W.copy()  # negatives keep their softmax weight
    rho1[rows, rows] = 0.0
    rho1[rows, rows + M] = 0.0
    a_rho2 = cfg.alpha - W[rows, rows]
    b_rho3 = (1.0 - cfg.alpha) - W[rows, rows + M]
    T = T_hat[:M]
    Ta = T_hat[M:]
    g_sim = (rho1 @ T_hat - a_rho2[:, None] * T - b_rho3[:, None] * Ta) / cfg.tau
    S = batch.student
    s_hat = S * inv_s[:, None]
    radial = (g_sim * s_hat).sum(1, keepdims=True)
    return (g_sim - radial * s_hat) * inv_s[:, None]


# --- generic engine: robust and bit-masked variants ---------------------------


def _term_layout(batch: BatchView, cfg: LossConfig, *, masked: bool, filtering: bool, first_term_tau: bool):
    """Numerator coefficients and denominator membership for each (anchor, column) pair.

    Returns (A_plain, A_mask, D_plain, D_mask, scale_plain) where numerator
    = sum(A * sim), denominator = sum over D of exp(sim * scale).
    """
    M = batch.M
    rows = np.arange(M)
    R = 2 * M
    if filtering:
        labels = batch.labels_all
        alpha_i = dynamic_alpha(batch.anchor_labels, batch.aug_labels, cfg.alpha)
        alpha_i = np.broadcast_to(np.asarray(alpha_i, dtype=np.float64), (M,))
        kept_neg = labels[None, :] != batch.anchor_labels[:, None]
    else:
        alpha_i = np.full(M, cfg.alpha)
        kept_neg = np.ones((M, R), dtype=bool)
    own = np.zeros((M, R), dtype=bool)
    own[rows, rows] = True
    pos = np.zeros((M, R), dtype=bool)
    pos[rows, rows + M] = True
    neg = kept_neg & ~own & ~pos

    A_plain = np.zeros((M, R))
    A_mask = np.zeros((M, R))
    A_plain[rows, rows] = alpha_i
    scale_plain = np.full((M, R), 1.0 / cfg.tau)
    if masked:
        A_mask[rows, rows + M] = 1.0 - alpha_i
        D_plain = own
        D_mask = pos | neg
        if not first_term_tau:
            scale_plain[rows, rows] = 1.0
    else:
        A_plain[rows, rows + M] = 1.0 - alpha_i
        D_plain = own | pos | neg
        D_mask = np.zeros((M, R), dtype=bool)
    return A_plain, A_mask, D_plain, D_mask, scale_plain


def _engine(batch, cfg, masks, *, masked, filtering, first_term_tau, need_grad):
    M = batch.M
    A_p, A_m, D_p, D_m, scale_p = _term_layout(
        batch, cfg, masked=masked, filtering=filtering, first_term_tau=first_term_tau
    )
    S = batch.student
    Tall = batch.teacher_all
    C, T_hat, inv_s = _cosine_matrix(S, Tall)

    if masked:
        labels = batch.labels_all
        ms = masks.for_labels(batch.anchor_labels).astype(np.float64)
        mt = masks.for_labels(labels).astype(np.float64)
        U = S * ms
        Q, V_hat, inv_u = _cosine_matrix(U, Tall * mt)
    else:
        Q = np.zeros_like(C)

    tau = cfg.tau
    # plain and masked logits share one softmax per row
    Z = np.concatenate([C * scale_p, Q / tau], axis=1)
    keep = np.concatenate([D_p, D_m], axis=1)
    lse, W = _logsumexp_rows(Z, keep)
    num = (A_p * C).sum(1) + (A_m * Q).sum(1)
    rows_loss = lse - num / tau
    if not need_grad:
        return rows_loss, None

    R = 2 * M
    W_p, W_m = W[:, :R], W[:, R:]
    G_p = W_p * scale_p - A_p / tau
    grad = _cosine_backward(G_p, C, S, T_hat, inv_s)
    if masked:
        G_m = (W_m - A_m) / tau
        grad = grad + ms * _cosine_backward(G_m, Q, U, V_hat, inv_u)
    return rows_loss, grad


def _check_masks(batch: BatchView, masks: BitMaskSet):
    if masks.b != batch.b:
        raise InvalidInputError(f"mask length {masks.b} != code length {batch.b}")
    labels = batch.labels_all
    if labels.min() < 0 or labels.max() >= masks.k:
        raise InvalidInputError("pseudo labels reference clusters the mask set does not have")


def loss_robust(batch: BatchView, cfg: LossConfig, per_row: bool = False):
    """Contrastive loss with dynamic alpha and same-cluster negatives removed."""
    _require_pairs(batch, False)
    rows, _ = _engine(batch, cfg, None, masked=False, filtering=True, first_term_tau=True, need_grad=False)
    return rows if per_row else float(rows.sum())


def grad_robust(batch: BatchView, cfg: LossConfig) -> np.ndarray:
    _require_pairs(batch, False)
    return _engine(batch, cfg, None, masked=False, filtering=True, first_term_tau=True, need_grad=True)[1]


def brcd_loss_and_grad(
    batch: BatchView,
    cfg: LossConfig,
    masks: BitMaskSet,
    *,
    filtering: bool = True,
    first_term_tau: bool = True,
    per_row: bool = False,
):
    """Loss and student gradient of the bit-masked robust objective in one pass.

    ``filtering=False`` keeps a fixed alpha and every negative (the ablation
    without cluster-based filtering).  ``first_term_tau=False`` evaluates the
    anchor's own teacher term in the denominator without the temperature.
    """
    _require_pairs(batch, False)
    _check_masks(batch, masks)
    rows, grad = _engine(
        batch, cfg, masks, masked=True, filtering=filtering, first_term_tau=first_term_tau, need_grad=True
    )
    return (rows if per_row else float(rows.sum())), grad


def loss_brcd(batch: BatchView, cfg: LossConfig, masks: BitMaskSet, *, filtering: bool = True,
              first_term_tau: bool = True, per_row: bool = False):
    _require_pairs(batch, False)
    _check_masks(batch, masks)
    rows, _ = _engine(
        batch, cfg, masks, masked=True, filtering=filtering, first_term_tau=first_term_tau, need_grad=False
    )
    return rows if per_row else float(rows.sum())


def grad_brcd(batch: BatchView, cfg: LossConfig, masks: BitMaskSet, *, filtering: bool = True,
              first_term_tau: bool = True) -> np.ndarray:
    return brcd_loss_and_grad(batch, cfg, masks, filtering=filtering, first_term_tau=first_term_tau)[1]


# --- baselines ----------------------------------------------------------------


def sp_loss(H_s, H_t) -> float:
    """Similarity-preserving loss: squared Frobenius gap of the two Gram matrices over b^2."""
    Hs = np.asarray(H_s, dtype=np.float64)
    Ht = np.asarray(H_t, dtype=np.float64)
    if Hs.shape != Ht.shape or Hs.ndim != 2:
        raise DimensionError(f"shape mismatch: {Hs.shape} vs {Ht.shape}")
    b = Hs.shape[1]
    gap = Hs @ Hs.T - Ht @ Ht.T
    return float((gap**2).sum() / b**2)


def sp_pair_expand(hs_i, hs_j, ht_i, ht_j) -> int:
    """Pairwise similarity-preserving term written out bit by bit.

    With ``p_k = hs_ik*hs_jk`` and ``q_k = ht_ik*ht_jk``:
    ``2b - 2*sum_k p_k q_k + 2*sum_{k<r} (p_k - q_k)(p_r - q_r)``,
    which equals ``(hs_i.hs_j - ht_i.ht_j)**2`` for ±1 codes.
    """
    vecs = [np.asarray(v).reshape(-1) for v in (hs_i, hs_j, ht_i, ht_j)]
    b = vecs[0].size
    if any(v.size != b for v in vecs):
        raise DimensionError("all four codes must share one length")
    for v in vecs:
        if not np.all((v == 1) | (v == -1)):
            raise InvalidInputError("sp_pair_expand needs exact ±1 codes")
    p = vecs[0].astype(np.int64) * vecs[1]
    q = vecs[2].astype(np.int64) * vecs[3]
    d = p - q
    cross = np.triu(np.outer(d, d), k=1).sum()
    return int(2 * b - 2 * int((p * q).sum()) + 2 * int(cross))


KL_SMOOTHING = 0.02


def kl_loss(student_relaxed, teacher_codes, T: float = 1.0, eps: float = KL_SMOOTHING) -> float:
    """Mean per-bit Bernoulli KL(teacher || student).

    Student bit probability is ``(1 + tanh(v/T)) / 2``; the teacher's is
    ``(1 + h (1 - eps)) / 2`` with label smoothing ``eps``.
    """
    if not T > 0:
        raise InvalidInputError(f"temperature must be > 0, got {T}")
    v = np.asarray(student_relaxed, dtype=np.float64)
    h = np.asarray(teacher_codes, dtype=np.float64)
    if v.shape != h.shape:
        raise DimensionError(f"shape mismatch: {v.shape} vs {h.shape}")
    q = (1.0 + h * (1.0 - eps)) / 2.0
    z = 2.0 * v / T
    # (1 + tanh(v/T)) / 2 == sigmoid(2v/T); use log-sigmoid for stability
    log_p = -np.logaddexp(0.0, -z)
    log_1p = -np.logaddexp(0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(q > 0, q * (np.log(q) - log_p), 0.0)
        t0 = np.where(q < 1, (1 - q) * (np.log1p(-q) - log_1p), 0.0)
    return float(np.mean(t1 + t0))
