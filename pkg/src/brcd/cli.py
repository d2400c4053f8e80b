"""``brcd`` command line: data generation, teacher codes, clustering, masks, distillation, evaluation, benchmarks.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
All randomness comes from ``--seed`` through numpy's PCG64 ``default_rng``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import logging
import os
import sys

import numpy as np

from . import __version__
from . import fileio
from .bitmask import bit_frequency_histogram, masks_from_clusters
from .cluster import kmeans_fit
from .codes import CodeMatrix
from .data import make_blobs, split
from .distill import (
    LOSS_KINDS,
    AugmentationSpec,
    StudentModel,
    TeacherModel,
    TrainConfig,
    _batch_with_cache,
    check_grad,
    prepare_run,
    train,
)
from .errors import BRCDError, FormatError, InvalidInputError, NumericError
from .kd_loss import BatchView, brcd_loss_and_grad, grad_basic, loss_basic, loss_brcd
from .metrics import RelevanceJudge, isd, nra_at_k
from .search import bench, build, evaluate

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

log = logging.getLogger("brcd")


class UsageError(BRCDError):
    pass


class StageError(BRCDError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _int_list(s: str) -> list[int]:
    try:
        return [int(v) for v in s.split(",") if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from e


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if path in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", newline="") as f:
            f.write(buf.getvalue())


def _need_file(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")
    return path


def _guard(paths, force):
    if force:
        return
    existing = [p for p in paths if p and os.path.exists(p)]
    if existing:
        raise UsageError(f"refusing to overwrite {existing[0]} (pass --force)")


# --- subcommands -------------------------------------------------------------------


def cmd_gen_data(args):
    x, y = make_blobs(args.n_classes, args.per_class, args.dim, args.spread, args.seed, args.center_scale)
    feats, labs = f"{args.out}.emb", f"{args.out}.lab"
    _guard([feats, labs], args.force)
    fileio.write_embeddings(feats, x)
    fileio.write_labels(labs, y)
    print(f"wrote {len(y)} rows to {feats} and {labs}")


def _make_teacher(kind: str, features, labels, bits: int, seed: int) -> TeacherModel:
    if kind.startswith("file:"):
        codes = fileio.read_codes(_need_file(kind[5:]))
        return TeacherModel.from_codes(features, codes)
    if kind == "hyperplane":
        return TeacherModel.hyperplane(features, bits, seed)
    if kind == "centroid":
        if labels is None:
            raise UsageError("the centroid teacher needs --labels")
        return TeacherModel.centroid(features, labels, bits, seed)
    raise UsageError(f"unknown teacher {kind!r}; use file:<codes>, hyperplane or centroid")


def cmd_teacher(args):
    x = fileio.read_embeddings(_need_file(args.fit))
    labels = fileio.read_labels(_need_file(args.fit_labels)) if args.fit_labels else None
    teacher = _make_teacher(args.kind, x, labels, args.bits, args.seed)
    for pair in args.apply:
        src, _, dst = pair.partition(":")
        if not dst:
            raise UsageError(f"--apply expects IN.emb:OUT.cod, got {pair!r}")
        _guard([dst], args.force)
        fileio.write_codes(dst, teacher.encode(fileio.read_embeddings(_need_file(src))))


def cmd_cluster(args):
    codes = fileio.read_codes(_need_file(args.codes))
    _guard([args.out_labels, args.out_centroids], args.force)
    model = kmeans_fit(codes, args.k, args.seed, args.max_iter, args.tol)
    fileio.write_labels(args.out_labels, model.labels_for(codes.ids))
    if args.out_centroids:
        fileio.write_embeddings(args.out_centroids, model.centroids)
    print(f"k={model.k} inertia={model.inertia:.6g} iterations={model.n_iter}")


def cmd_mask(args):
    codes = fileio.read_codes(_need_file(args.codes))
    labels = fileio.read_labels(_need_file(args.labels))
    if labels.size != len(codes):
        raise FormatError("codes and cluster labels differ in length")
    k = args.k or int(labels.max()) + 1
    _guard([args.out, args.expectations, args.histogram], args.force)
    masks = masks_from_clusters(codes, labels, k, args.delta)
    fileio.write_codes(args.out, CodeMatrix.from_pm1(masks.masks.astype(np.int8) * 2 - 1))
    if args.expectations:
        rows = [(c, r, f"{masks.expectations[c, r]:.6f}", int(masks.masks[c, r]))
                for c in range(k) for r in range(codes.b)]
        _write_csv(args.expectations, ["cluster", "dim", "expectation", "mask"], rows)
    if args.histogram:
        x = codes.to_pm1()
        rows = []
        for c in range(k):
            members = x[labels == c]
            if len(members) == 0:
                continue
            hist = bit_frequency_histogram(members)
            rows += [(c, r, f"{hist[r, 0]:.6f}", f"{hist[r, 1]:.6f}") for r in range(codes.b)]
        _write_csv(args.histogram, ["cluster", "dim", "freq_plus", "freq_minus"], rows)


def _train_config(args) -> TrainConfig:
    return TrainConfig(
        M=args.M, epochs=args.epochs, learning_rate=args.lr, alpha=args.alpha, tau=args.tau,
        delta=args.delta, k=args.k, seed=args.seed, loss=args.loss,
    )


def _log_rows(history):
    return [(r["epoch"], f"{r['loss']:.6f}", f"{r['isd']:.4f}", f"{r['opr']:.4f}") for r in history]


def cmd_distill(args):
    x = fileio.read_embeddings(_need_file(args.features))
    labels = fileio.read_labels(_need_file(args.labels)) if args.labels else None
    _guard([args.out, args.log], args.force)
    teacher = _make_teacher(args.teacher, x, labels, args.bits, args.seed)
    cfg = _train_config(args)
    n_classes = int(np.unique(labels).size) if labels is not None else None
    student = StudentModel.init(x.shape[1], teacher.b, args.arch, args.hidden, args.seed)
    aug = AugmentationSpec(args.sigma, args.dropout, args.seed)
    res = train(x, teacher, student, cfg, aug, n_classes=n_classes)
    fileio.write_student(args.out, res.student.arch, res.student.params)
    _write_csv(args.log, ["epoch", "loss", "isd", "opr"], _log_rows(res.log))


def _load_student(path) -> StudentModel:
    arch, params = fileio.read_student(_need_file(path))
    return StudentModel(arch, params)


def _eval_rows(paradigms, s_db, t_db, s_q, judge, K, t_q=None):
    rows = []
    for p in paradigms:
        rows.append(("mAP", p, K, f"{evaluate(p, s_db, t_db, s_q, judge, K):.6f}"))
    if t_q is not None:
        rows.append(("ISD", "query", "", f"{isd(s_q, t_q):.6f}"))
        rows.append(("NRA", "ASHP", K, f"{nra_at_k(s_q, t_db, judge, K):.6f}"))
    return rows


def cmd_eval(args):
    s_db = fileio.read_codes(_need_file(args.student_db))
    t_db = fileio.read_codes(_need_file(args.teacher_db))
    offset = len(s_db)
    s_q = fileio.read_codes(_need_file(args.queries), id_offset=offset)
    t_q = fileio.read_codes(_need_file(args.teacher_queries), id_offset=offset) if args.teacher_queries else None
    db_lab = fileio.read_labels(_need_file(args.db_labels))
    q_lab = fileio.read_labels(_need_file(args.query_labels))
    if db_lab.size != len(s_db) or q_lab.size != len(s_q):
        raise FormatError("label files do not match the code files in length")
    judge = RelevanceJudge.from_arrays(np.concatenate([s_db.ids, s_q.ids]), np.concatenate([db_lab, q_lab]))
    paradigms = ["SSHP", "ASHP"] if args.paradigm == "both" else [args.paradigm]
    _write_csv(args.out, ["metric", "name", "K", "value"],
               _eval_rows(paradigms, s_db, t_db, s_q, judge, args.K, t_q))


def cmd_bench(args):
    rng = np.random.default_rng(args.seed)
    if args.codes:
        dbs = [fileio.read_codes(_need_file(args.codes))]
        b = dbs[0].b
    elif args.synthetic:
        n_values, b = args.synthetic[:-1], args.synthetic[-1]
        dbs = [CodeMatrix(np.packbits(rng.random((n, b)) < 0.5, axis=1, bitorder="little"), b) for n in n_values]
    else:
        raise UsageError("bench needs --codes FILE or --synthetic N [N ...] B")
    rows = []
    for db in dbs:
        index = build(db)
        queries = [CodeMatrix(np.packbits(rng.random((bs, b)) < 0.5, axis=1, bitorder="little"), b,
                              np.arange(bs) + 10**9) for bs in args.batch_sizes]
        for K in args.K:
            rep = bench(index, queries, K, args.reps)
            rows.append([len(db), K] + [f"{r['mean_ms']:.3f}" for r in rep])
    _write_csv(args.out, ["N", "K"] + [f"bs{bs}_ms" for bs in args.batch_sizes], rows)


def run_check_grad(M=4, bits=16, dim=32, arch="linear", seed=0, loss="brcd", delta=0.4, alpha=0.8, tau=0.3, k=3):
    """Synthetic end-to-end gradient check; returns {check name: max relative error}."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((max(8 * M, 32), dim))
    teacher = TeacherModel.hyperplane(x, bits, seed)
    cfg = TrainConfig(M=M, alpha=alpha, tau=tau, delta=delta, k=min(k, len(x)), seed=seed, loss=loss)
    state = prepare_run(x, teacher, cfg)
    student = StudentModel.init(dim, bits, arch, seed=seed + 1)
    aug = AugmentationSpec(0.5, 0.1, seed)
    idx = rng.choice(len(x), M, replace=False)
    batch, _ = _batch_with_cache(x, teacher, student, aug, idx, state.cluster, 0, cfg)
    out = {"params": check_grad(student, x[idx], batch, cfg, state.masks, seed=seed)}

    lc = cfg.loss_config()

    def fd(f, S, h=1e-4):
        g = np.zeros_like(S)
        for i in np.ndindex(S.shape):
            Sp, Sm = S.copy(), S.copy()
            Sp[i] += h
            Sm[i] -= h
            g[i] = (f(Sp) - f(Sm)) / (2 * h)
        return g

    from .distill import max_relative_error

    S = rng.standard_normal(batch.student.shape)
    b2 = batch.with_student(S)
    out["grad_basic"] = max_relative_error(grad_basic(b2, lc), fd(lambda Z: loss_basic(b2.with_student(Z), lc), S))
    out["grad_brcd"] = max_relative_error(
        brcd_loss_and_grad(b2, lc, state.masks)[1], fd(lambda Z: loss_brcd(b2.with_student(Z), lc, state.masks), S)
    )
    return out


def cmd_check_grad(args):
    errs = run_check_grad(args.M, args.bits, args.dim, args.arch, args.seed, args.loss)
    bad = False
    for name, e in errs.items():
        ok = e < args.tol
        bad |= not ok
        print(f"{name}: max relative error {e:.3e} {'ok' if ok else 'FAIL'}")
    if bad:
        raise NumericError(f"gradient check exceeded tolerance {args.tol:g}")


# --- pipeline ------------------------------------------------------------------------

CONFIG_VERSION = 1
CONFIG_KEYS = {
    "version": int, "workdir": str,
    "features": str, "labels": str,
    "n_classes": int, "per_class": int, "dim": int, "spread": float, "data_seed": int,
    "n_train": int, "n_query": int, "n_db": int,
    "teacher": str, "bits": int, "arch": str, "hidden": int,
    "m": int, "epochs": int, "lr": float, "alpha": float, "tau": float, "delta": float, "k": int,
    "seed": int, "sigma": float, "dropout": float, "loss": str, "eval_k": int,
}
CONFIG_DEFAULTS = {
    "workdir": "brcd-run", "n_classes": 10, "per_class": 1000, "dim": 64, "spread": 1.5, "data_seed": 0,
    "n_train": 5000, "n_query": 1000, "n_db": 4000, "teacher": "centroid", "bits": 32, "arch": "linear",
    "hidden": 16, "m": 64, "epochs": 30, "lr": 1e-3, "alpha": 0.8, "tau": 0.3, "delta": 0.4, "k": 0,
    "seed": 0, "sigma": 0.5, "dropout": 0.0, "loss": "brcd", "eval_k": 100,
}


def load_run_config(path) -> dict:
    """Read a ``[run]`` key/value config; unknown keys and version mismatches are errors."""
    parser = configparser.ConfigParser()
    with open(_need_file(path)) as f:
        parser.read_file(f)
    if parser.sections() != ["run"]:
        raise UsageError(f"{path}: expected exactly one [run] section, found {parser.sections()}")
    raw = dict(parser["run"])
    unknown = sorted(set(raw) - set(CONFIG_KEYS))
    if unknown:
        raise UsageError(f"{path}: unknown config key(s): {', '.join(unknown)}")
    if "version" not in raw:
        raise UsageError(f"{path}: missing 'version'")
    cfg = dict(CONFIG_DEFAULTS)
    for key, val in raw.items():
        try:
            cfg[key] = CONFIG_KEYS[key](val)
        except ValueError as e:
            raise UsageError(f"{path}: bad value for {key}: {val!r}") from e
    if cfg["version"] != CONFIG_VERSION:
        raise UsageError(f"{path}: unsupported config version {cfg['version']} (expected {CONFIG_VERSION})")
    base = os.path.dirname(os.path.abspath(path))
    for key in ("features", "labels", "workdir"):
        if key in cfg and not os.path.isabs(cfg[key]):
            cfg[key] = os.path.join(base, cfg[key])
    return cfg


def run_pipeline(cfg: dict, force: bool = False) -> list:
    wd = cfg["workdir"]

    def p(name):
        return os.path.join(wd, name)

    outputs = [p(n) for n in (
        "train.emb", "train.lab", "query.emb", "query.lab", "db.emb", "db.lab",
        "teacher_train.cod", "teacher_db.cod", "teacher_query.cod", "clusters.lab", "centroids.emb",
        "masks.cod", "student.stu", "student_db.cod", "student_query.cod", "train_log.csv", "summary.csv",
    )]
    _guard(outputs, force)

    def stage(name, fn):
        try:
            return fn()
        except (OSError, BRCDError, ValueError) as e:
            raise StageError(name, e) from e

    def load_data():
        if "features" in cfg:
            x = fileio.read_embeddings(_need_file(cfg["features"]))
            if "labels" not in cfg:
                raise UsageError("config gives 'features' without 'labels'")
            y = fileio.read_labels(_need_file(cfg["labels"]))
        else:
            x, y = make_blobs(cfg["n_classes"], cfg["per_class"], cfg["dim"], cfg["spread"], cfg["data_seed"])
        parts = split(x, y, [cfg["n_train"], cfg["n_query"], cfg["n_db"]], cfg["data_seed"])
        os.makedirs(wd, exist_ok=True)
        for (fx, fy), name in zip(parts, ("train", "query", "db")):
            fileio.write_embeddings(p(f"{name}.emb"), fx)
            fileio.write_labels(p(f"{name}.lab"), fy)
        return parts

    (tr, ytr), (q, yq), (db, ydb) = stage("data", load_data)

    def make_teacher():
        t = _make_teacher(cfg["teacher"], tr, ytr, cfg["bits"], cfg["seed"])
        for name, fx in (("train", tr), ("db", db), ("query", q)):
            fileio.write_codes(p(f"teacher_{name}.cod"), t.encode(fx))
        return t

    teacher = stage("teacher", make_teacher)
    n_classes = int(np.unique(ytr).size)
    tcfg = TrainConfig(
        M=cfg["m"], epochs=cfg["epochs"], learning_rate=cfg["lr"], alpha=cfg["alpha"], tau=cfg["tau"],
        delta=cfg["delta"], k=cfg["k"] or None, seed=cfg["seed"], loss=cfg["loss"],
    )

    def cluster_and_mask():
        state = prepare_run(tr, teacher, tcfg, n_classes=n_classes)
        fileio.write_labels(p("clusters.lab"), state.labels)
        fileio.write_embeddings(p("centroids.emb"), state.cluster.centroids)
        fileio.write_codes(p("masks.cod"), CodeMatrix.from_pm1(state.masks.masks.astype(np.int8) * 2 - 1))
        return state

    state = stage("cluster", cluster_and_mask)

    def distill():
        student = StudentModel.init(tr.shape[1], cfg["bits"], cfg["arch"], cfg["hidden"], cfg["seed"])
        aug = AugmentationSpec(cfg["sigma"], cfg["dropout"], cfg["seed"])
        res = train(tr, teacher, student, tcfg, aug, state=state)
        fileio.write_student(p("student.stu"), res.student.arch, res.student.params)
        _write_csv(p("train_log.csv"), ["epoch", "loss", "isd", "opr"], _log_rows(res.log))
        return res

    res = stage("distill", distill)

    def evaluate_all():
        s = res.student
        db_ids = np.arange(len(db))
        q_ids = np.arange(len(q)) + len(db)
        s_db, s_q = s.encode(db, db_ids), s.encode(q, q_ids)
        t_db, t_q = teacher.encode(db, db_ids), teacher.encode(q, q_ids)
        fileio.write_codes(p("student_db.cod"), s_db)
        fileio.write_codes(p("student_query.cod"), s_q)
        judge = RelevanceJudge.from_arrays(np.concatenate([db_ids, q_ids]), np.concatenate([ydb, yq]))
        K = cfg["eval_k"]
        rows = _eval_rows(["SSHP", "ASHP"], s_db, t_db, s_q, judge, K, t_q)
        rows.append(("mAP", "teacher", K, f"{evaluate('SSHP', t_db, t_db, t_q, judge, K):.6f}"))
        _write_csv(p("summary.csv"), ["metric", "name", "K", "value"], rows)
        return rows

    return stage("eval", evaluate_all)


def cmd_pipeline(args):
    cfg = load_run_config(args.config)
    if args.workdir:
        cfg["workdir"] = args.workdir
    rows = run_pipeline(cfg, args.force)
    _write_csv(None, ["metric", "name", "K", "value"], rows)


# --- parser ------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="brcd", description="Contrastive distillation of binary hash codes and Hamming retrieval tools.")
    ap.add_argument("--version", action="version", version=f"brcd {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_, description=help_)
        sp.set_defaults(func=fn)
        return sp

    g = add("gen-data", cmd_gen_data, "write Gaussian-blob features (BRCDEMB1) and labels (BRCDLAB1)")
    g.add_argument("--n-classes", type=int, default=10)
    g.add_argument("--per-class", type=int, default=500)
    g.add_argument("--dim", type=int, default=64)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--center-scale", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output prefix; writes PREFIX.emb and PREFIX.lab")
    g.add_argument("--force", action="store_true")

    t = add("teacher", cmd_teacher, "fit a frozen teacher and write its codes for feature files")
    t.add_argument("--kind", default="centroid", help="hyperplane, centroid or file:<codes>")
    t.add_argument("--fit", required=True, help="features the teacher is built from")
    t.add_argument("--fit-labels")
    t.add_argument("--bits", type=int, default=32)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--apply", action="append", default=[], metavar="IN.emb:OUT.cod")
    t.add_argument("--force", action="store_true")

    c = add("cluster", cmd_cluster, "k-means over a code file; writes pseudo labels and centroids")
    c.add_argument("--codes", required=True)
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-iter", type=int, default=100)
    c.add_argument("--tol", type=float, default=1e-6)
    c.add_argument("--out-labels", required=True)
    c.add_argument("--out-centroids")
    c.add_argument("--force", action="store_true")

    m = add("mask", cmd_mask, "per-cluster bit masks (BRCDCOD1) plus expectation / histogram CSVs")
    m.add_argument("--codes", required=True)
    m.add_argument("--labels", required=True, help="cluster assignments (BRCDLAB1)")
    m.add_argument("--k", type=int)
    m.add_argument("--delta", type=float, default=0.4)
    m.add_argument("--out", required=True)
    m.add_argument("--expectations", help="CSV: cluster,dim,expectation,mask")
    m.add_argument("--histogram", help="CSV: cluster,dim,freq_plus,freq_minus")
    m.add_argument("--force", action="store_true")

    d = add("distill", cmd_distill, "train a student on a frozen teacher's codes")
    d.add_argument("--features", required=True)
    d.add_argument("--labels", help="class labels (required for the centroid teacher)")
    d.add_argument("--teacher", default="centroid", help="file:<codes>, hyperplane or centroid")
    d.add_argument("--bits", type=int, default=32)
    d.add_argument("--M", type=int, default=64)
    d.add_argument("--epochs", type=int, default=20)
    d.add_argument("--lr", type=float, default=1e-3)
    d.add_argument("--alpha", type=float, default=0.8)
    d.add_argument("--tau", type=float, default=0.3)
    d.add_argument("--delta", type=float, default=0.4)
    d.add_argument("--k", type=int)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--arch", choices=StudentModel.ARCHS, default="linear")
    d.add_argument("--hidden", type=int, default=16)
    d.add_argument("--sigma", type=float, default=0.5, help="augmentation feature noise")
    d.add_argument("--dropout", type=float, default=0.0, help="augmentation coordinate dropout")
    d.add_argument("--loss", choices=LOSS_KINDS, default="brcd")
    d.add_argument("--out", required=True, help="student weights (BRCDSTU1)")
    d.add_argument("--log", default="-", help="per-epoch CSV (default stdout)")
    d.add_argument("--force", action="store_true")

    e = add("eval", cmd_eval, "mAP@K under SSHP / ASHP; CSV columns metric,name,K,value")
    e.add_argument("--paradigm", choices=["SSHP", "ASHP", "both"], default="both")
    e.add_argument("--student-db", required=True)
    e.add_argument("--teacher-db", required=True)
    e.add_argument("--queries", required=True, help="student query codes")
    e.add_argument("--teacher-queries", help="teacher query codes; adds ISD and NRA@K rows")
    e.add_argument("--db-labels", required=True)
    e.add_argument("--query-labels", required=True)
    e.add_argument("--K", type=int, default=100)
    e.add_argument("--out", default="-")

    b = add("bench", cmd_bench, "top-K search latency per (N, K) and batch size")
    b.add_argument("--codes")
    b.add_argument("--synthetic", type=int, nargs="+", metavar="N", help="N [N ...] B: random codes")
    b.add_argument("--batch-sizes", type=_int_list, default=[4, 16, 64])
    b.add_argument("--K", type=_int_list, default=[100, 1000])
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", default="-")

    k = add("check-grad", cmd_check_grad, "compare analytic and finite-difference gradients; exit 4 on failure")
    k.add_argument("--M", type=int, default=4)
    k.add_argument("--bits", type=int, default=16)
    k.add_argument("--dim", type=int, default=32)
    k.add_argument("--arch", choices=StudentModel.ARCHS, default="linear")
    k.add_argument("--loss", choices=LOSS_KINDS, default="brcd")
    k.add_argument("--seed", type=int, default=0)
    k.add_argument("--tol", type=float, default=1e-5)

    pl = add("pipeline", cmd_pipeline, "data -> teacher -> cluster -> mask -> distill -> eval from a config file")
    pl.add_argument("--config", required=True)
    pl.add_argument("--workdir", help="override the config's workdir")
    pl.add_argument("--force", action="store_true")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except UsageError as e:
        print(f"brcd: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as e:
        print(f"brcd: error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except StageError as e:
        print(f"brcd: error: {e}", file=sys.stderr)
        if isinstance(e.cause, UsageError):
            return EXIT_USAGE
        return EXIT_NUMERIC if isinstance(e.cause, NumericError) else EXIT_DATA
    except (OSError, FormatError, InvalidInputError, BRCDError, ValueError) as e:
        print(f"brcd: error: {e}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
