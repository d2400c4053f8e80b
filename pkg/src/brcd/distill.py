"""Desk-scale distillation: frozen teacher, small tanh-relaxed student, Adam on the contrastive losses."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from . import kd_loss
from .bitmask import BitMaskSet, masks_from_clusters
from .cluster import ClusterModel, assign_many, choose_k, kmeans_fit
from .codes import CodeMatrix, sign_quantize_rows
from .errors import InvalidInputError, NumericError
from .kd_loss import BatchView, LossConfig
from .metrics import isd, opr

log = logging.getLogger(__name__)

__all__ = [
    "TeacherModel",
    "StudentModel",
    "AugmentationSpec",
    "TrainConfig",
    "RunState",
    "Adam",
    "prepare_run",
    "make_batch",
    "train",
    "check_grad",
    "max_relative_error",
    "LOSS_KINDS",
]

LOSS_KINDS = ("brcd", "brcd-nofilter", "robust", "basic")


def _sign_pm1(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0, 1, -1).astype(np.int8)


# --- teacher ------------------------------------------------------------------


class TeacherModel:
    """Frozen teacher mapping features to ±1 codes.

    ``hyperplane``: sign of random projections of the centred features.
    ``centroid``: each class centroid direction votes for a random class code;
    the projection is ``codebook.T @ unit_centroids``.
    ``file``: precomputed codes for reference features; any input takes the
    code of its nearest reference row.
    """

    KINDS = ("file", "hyperplane", "centroid")

    def __init__(self, kind: str, b: int, *, projection=None, offset=None, ref_features=None, ref_codes=None):
        if kind not in self.KINDS:
            raise InvalidInputError(f"unknown teacher kind {kind!r}")
        self.kind = kind
        self.b = int(b)
        self._projection = None if projection is None else _frozen(projection)
        self._offset = None if offset is None else _frozen(offset)
        self._ref = None if ref_features is None else _frozen(ref_features)
        self._ref_codes = ref_codes

    @property
    def projection(self):
        return self._projection

    @property
    def offset(self):
        return self._offset

    @classmethod
    def hyperplane(cls, features, b: int, seed: int = 0) -> "TeacherModel":
        x = np.asarray(features, dtype=np.float64)
        rng = np.random.default_rng(seed)
        proj = rng.standard_normal((b, x.shape[1]))
        return cls("hyperplane", b, projection=proj, offset=x.mean(0))

    @classmethod
    def centroid(cls, features, labels, b: int, seed: int = 0) -> "TeacherModel":
        x = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        classes = np.unique(labels)
        mu = x.mean(0)
        cent = np.stack([x[labels == c].mean(0) for c in classes]) - mu
        norms = np.linalg.norm(cent, axis=1, keepdims=True)
        unit = cent / np.where(norms > 0, norms, 1.0)
        rng = np.random.default_rng(seed)
        book = rng.choice(np.array([-1.0, 1.0]), size=(classes.size, b))
        return cls("centroid", b, projection=book.T @ unit, offset=mu)

    @classmethod
    def from_codes(cls, features, codes: CodeMatrix) -> "TeacherModel":
        x = np.asarray(features, dtype=np.float64)
        if x.shape[0] != len(codes):
            raise InvalidInputError("one reference feature row per teacher code required")
        return cls("file", codes.b, ref_features=x, ref_codes=codes.to_pm1())

    @property
    def n_params(self) -> int:
        if self.kind == "file":
            return 0
        return self._projection.size + self._offset.size

    def encode_pm1(self, features) -> np.ndarray:
        x = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if self.kind == "file":
            d = (x * x).sum(1)[:, None] - 2 * x @ self._ref.T + (self._ref**2).sum(1)[None, :]
            return self._ref_codes[np.argmin(d, axis=1)].astype(np.int8)
        return _sign_pm1((x - self._offset) @ self._projection.T)

    def encode(self, features, ids=None) -> CodeMatrix:
        return CodeMatrix.from_pm1(self.encode_pm1(features), ids)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.flags.writeable = False
    return a


# --- student ------------------------------------------------------------------


class StudentModel:
    """``tanh(W x + c)`` (linear) or ``tanh(W2 tanh(W1 x + c1) + c2)`` (mlp)."""

    ARCHS = ("linear", "mlp")

    def __init__(self, arch: str, params: dict):
        if arch not in self.ARCHS:
            raise InvalidInputError(f"unknown student architecture {arch!r}")
        self.arch = arch
        self.params = {k: np.array(v, dtype=np.float64) for k, v in params.items()}

    @classmethod
    def init(cls, dim: int, b: int, arch: str = "linear", hidden: int = 16, seed: int = 0, scale: float = 1.0):
        rng = np.random.default_rng(seed)
        if arch == "linear":
            p = {"W1": rng.standard_normal((b, dim)) * scale / np.sqrt(dim), "c1": np.zeros(b)}
        elif arch == "mlp":
            p = {
                "W1": rng.standard_normal((hidden, dim)) * scale / np.sqrt(dim),
                "c1": np.zeros(hidden),
                "W2": rng.standard_normal((b, hidden)) * scale / np.sqrt(hidden),
                "c2": np.zeros(b),
            }
        else:
            raise InvalidInputError(f"unknown student architecture {arch!r}")
        return cls(arch, p)

    @property
    def b(self) -> int:
        return self.params["c2" if self.arch == "mlp" else "c1"].size

    @property
    def dim(self) -> int:
        return self.params["W1"].shape[1]

    @property
    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "StudentModel":
        return StudentModel(self.arch, {k: v.copy() for k, v in self.params.items()})

    def preactivation(self, x) -> np.ndarray:
        return self._forward(x)[0]

    def _forward(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        p = self.params
        z1 = x @ p["W1"].T + p["c1"]
        if self.arch == "linear":
            return z1, (x,)
        h = np.tanh(z1)
        z2 = h @ p["W2"].T + p["c2"]
        return z2, (x, h)

    def forward(self, x):
        """Relaxed codes and the cache :meth:`backward` needs."""
        z, cache = self._forward(x)
        out = np.tanh(z)
        return out, (cache, out)

    def backward(self, cache, grad_out) -> dict:
        (inner, out) = cache
        gz = grad_out * (1.0 - out**2)
        if self.arch == "linear":
            (x,) = inner
            return {"W1": gz.T @ x, "c1": gz.sum(0)}
        x, h = inner
        p = self.params
        gh = (gz @ p["W2"]) * (1.0 - h**2)
        return {"W2": gz.T @ h, "c2": gz.sum(0), "W1": gh.T @ x, "c1": gh.sum(0)}

    def relaxed(self, x) -> np.ndarray:
        return self.forward(x)[0]

    def encode(self, x, ids=None) -> CodeMatrix:
        """Inference codes: sign of the output (tanh keeps the sign of its input)."""
        return sign_quantize_rows(self.relaxed(x), ids)


# --- augmentation, optimiser, config --------------------------------------------


@dataclass(frozen=True)
class AugmentationSpec:
    gaussian_sigma: float = 0.0
    dropout_p: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.gaussian_sigma < 0:
            raise InvalidInputError("gaussian_sigma must be >= 0")
        if not 0.0 <= self.dropout_p < 1.0:
            raise InvalidInputError("dropout_p must lie in [0, 1)")

    @property
    def is_identity(self) -> bool:
        return self.gaussian_sigma == 0 and self.dropout_p == 0

    def apply(self, x, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if self.is_identity:
            return x.copy()
        out = x + self.gaussian_sigma * rng.standard_normal(x.shape)
        if self.dropout_p > 0:
            out = out * (rng.random(x.shape) >= self.dropout_p)
        return out


class Adam:
    def __init__(self, lr=1e-3, betas=(0.9, 0.999), eps=1e-8):
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = {}
        self.v = {}

    def step(self, params: dict, grads: dict):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            if k not in self.m:
                self.m[k] = np.zeros_like(g)
                self.v[k] = np.zeros_like(g)
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + self.eps)


@dataclass(frozen=True)
class TrainConfig:
    M: int = 64
    epochs: int = 20
    learning_rate: float = 1e-3
    betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    alpha: float = 0.8
    tau: float = 0.3
    delta: float = 0.4
    k: int | None = None
    seed: int = 0
    loss: str = "brcd"
    kmeans_max_iter: int = 100

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise InvalidInputError("learning_rate must be >= 0")
        if self.M < 2:
            raise InvalidInputError("batch size M must be >= 2")
        if self.epochs < 0:
            raise InvalidInputError("epochs must be >= 0")
        if self.loss not in LOSS_KINDS:
            raise InvalidInputError(f"loss must be one of {LOSS_KINDS}")
        if self.k is not None and self.k < 1:
            raise InvalidInputError("k must be >= 1")
        self.loss_config()  # validates alpha / tau / delta

    def loss_config(self) -> LossConfig:
        return LossConfig(self.alpha, self.tau, self.delta)


@dataclass(frozen=True, eq=False)
class RunState:
    teacher_codes: CodeMatrix
    cluster: ClusterModel
    masks: BitMaskSet
    labels: np.ndarray  # pseudo label of every training row


def prepare_run(features, teacher: TeacherModel, cfg: TrainConfig, n_classes: int | None = None) -> RunState:
    """Teacher codes for the whole training set, k-means pseudo labels, and per-cluster bit masks."""
    x = np.asarray(features)
    if x.ndim != 2 or x.shape[0] == 0:
        raise InvalidInputError("features must be a non-empty 2-D array")
    codes = teacher.encode(x)
    k = cfg.k if cfg.k is not None else choose_k(codes, n_classes=n_classes, seed=cfg.seed)
    model = kmeans_fit(codes, k, seed=cfg.seed, max_iter=cfg.kmeans_max_iter)
    labels = model.labels_for(codes.ids)
    masks = masks_from_clusters(codes, labels, model.k, cfg.delta)
    return RunState(codes, model, masks, labels)


def _step_rng(aug: AugmentationSpec, cfg: TrainConfig, step: int) -> np.random.Generator:
    return np.random.default_rng([aug.seed, cfg.seed, step])


def make_batch(features, teacher: TeacherModel, student: StudentModel, aug: AugmentationSpec, indices,
               cluster: ClusterModel, *, step: int = 0, cfg: TrainConfig | None = None) -> BatchView:
    """One contrastive batch for the given training rows.

    Augmentations are drawn from a generator seeded by (aug seed, run seed, step).
    """
    return _batch_with_cache(features, teacher, student, aug, indices, cluster, step, cfg or TrainConfig())[0]


def _batch_with_cache(features, teacher, student, aug, indices, cluster, step, cfg, teacher_codes=None):
    x = np.asarray(features)
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= x.shape[0]):
        raise IndexError("batch index out of range")
    if np.unique(idx).size != idx.size:
        raise InvalidInputError("batch indices must be distinct")
    xb = x[idx].astype(np.float64)
    xa = aug.apply(xb, _step_rng(aug, cfg, step))
    t = teacher.encode_pm1(xb) if teacher_codes is None else teacher_codes[idx]
    ta = teacher.encode_pm1(xa)
    y = assign_many(cluster, t)
    ya = assign_many(cluster, ta)
    s, cache = student.forward(xb)
    return BatchView(s, t, ta, y, ya), cache


def _loss_and_grad(batch: BatchView, cfg: TrainConfig, masks: BitMaskSet):
    lc = cfg.loss_config()
    if cfg.loss == "basic":
        return kd_loss.loss_basic(batch, lc), kd_loss.grad_basic(batch, lc)
    if cfg.loss == "robust":
        return kd_loss.loss_robust(batch, lc), kd_loss.grad_robust(batch, lc)
    return kd_loss.brcd_loss_and_grad(batch, lc, masks, filtering=cfg.loss == "brcd")


@dataclass
class TrainResult:
    student: StudentModel
    log: list = field(default_factory=list)
    state: RunState | None = None


def train(features, teacher: TeacherModel, student: StudentModel, cfg: TrainConfig, aug: AugmentationSpec,
          state: RunState | None = None, n_classes: int | None = None) -> TrainResult:
    """Adam on the configured loss, one pass over shuffled training rows per epoch.

    Returns the trained copy of ``student`` and one log row per epoch with
    the mean per-anchor loss, the training-set ISD and the batch OPR.
    """
    x = np.asarray(features, dtype=np.float64)
    if state is None:
        state = prepare_run(x, teacher, cfg, n_classes)
    student = student.copy()
    opt = Adam(cfg.learning_rate, cfg.betas, cfg.adam_eps)
    t_all = state.teacher_codes.to_pm1()
    order_rng = np.random.default_rng([cfg.seed, 0x5EED])
    n = x.shape[0]
    if n < 2:
        raise InvalidInputError("need at least two training rows")
    step = 0
    history = []
    for epoch in range(1, cfg.epochs + 1):
        perm = order_rng.permutation(n)
        tot_loss = 0.0
        tot_rows = 0
        drift = []
        for s in range(0, n, cfg.M):
            idx = perm[s : s + cfg.M]
            if idx.size < 2:
                continue
            batch, cache = _batch_with_cache(x, teacher, student, aug, idx, state.cluster, step, cfg, t_all)
            loss, g = _loss_and_grad(batch, cfg, state.masks)
            if not np.isfinite(loss) or not np.all(np.isfinite(g)):
                raise NumericError(f"non-finite loss at epoch {epoch}, step {step}")
            grads = student.backward(cache, g)
            opt.step(student.params, grads)
            tot_loss += loss
            tot_rows += idx.size
            drift.append(batch.anchor_labels != batch.aug_labels)
            step += 1
        codes = student.encode(x)
        row = {
            "epoch": epoch,
            "loss": tot_loss / max(tot_rows, 1),
            "isd": isd(codes, state.teacher_codes),
            "opr": float(np.concatenate(drift).mean()) if drift else 0.0,
        }
        history.append(row)
        log.debug("epoch %d loss %.5f isd %.3f opr %.3f", epoch, row["loss"], row["isd"], row["opr"])
    return TrainResult(student, history, state)


# --- gradient checking ------------------------------------------------------------


def max_relative_error(analytic, numeric, floor: float = 1e-3) -> float:
    """Largest elementwise ``|a - n| / max(|a|, |n|, floor * max|n|)``.

    The floor keeps components many orders below the gradient's peak from
    dominating through finite-difference round-off.
    """
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    f = np.asarray(numeric, dtype=np.float64).reshape(-1)
    scale = max(float(np.abs(f).max(initial=0.0)), float(np.abs(a).max(initial=0.0)))
    if scale == 0.0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(a), np.abs(f)), floor * scale)
    return float((np.abs(a - f) / denom).max())


def _student_loss(student, x, batch, cfg, masks):
    s, cache = student.forward(x)
    return _loss_and_grad(batch.with_student(s), cfg, masks), cache


def check_grad(student: StudentModel, features, batch: BatchView, cfg: TrainConfig, masks: BitMaskSet,
               n_params: int = 200, h: float = 1e-4, seed: int = 0, return_details: bool = False):
    """Compare backpropagated parameter gradients with central differences.

    ``batch`` supplies teacher codes and pseudo labels; its student part is
    recomputed from ``features``.  Checks a random subsample of at least
    ``n_params`` parameters (all of them when the model is smaller).
    """
    x = np.asarray(features, dtype=np.float64)
    (loss, g_out), cache = _student_loss(student, x, batch, cfg, masks)
    analytic = student.backward(cache, g_out)
    slots = [(k, i) for k, v in student.params.items() for i in range(v.size)]
    rng = np.random.default_rng(seed)
    if len(slots) > n_params:
        pick = rng.choice(len(slots), size=n_params, replace=False)
        slots = [slots[j] for j in sorted(pick)]
    probe = student.copy()
    a_vals, n_vals = [], []
    for k, i in slots:
        flat = probe.params[k].reshape(-1)
        orig = flat[i]
        flat[i] = orig + h
        lp = _student_loss(probe, x, batch, cfg, masks)[0][0]
        flat[i] = orig - h
        lm = _student_loss(probe, x, batch, cfg, masks)[0][0]
        flat[i] = orig
        a_vals.append(analytic[k].reshape(-1)[i])
        n_vals.append((lp - lm) / (2 * h))
    a_vals = np.array(a_vals)
    n_vals = np.array(n_vals)
    err = max_relative_error(a_vals, n_vals)
    if return_details:
        return err, a_vals, n_vals
    return err


def with_updates(cfg: TrainConfig, **kw) -> TrainConfig:
    return replace(cfg, **kw)
