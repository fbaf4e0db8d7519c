"""Command-line interface.

Exit codes: 0 success, 2 usage or invalid argument, 3 unreadable or
malformed input, 4 shape mismatch, 5 numerical failure. Failures print a
one-line JSON error record on stderr.

CSV inputs hold one point per row. Commands that fit or benchmark print a
JSON run report on stdout; data products go to ``--output`` (or stdout for
the commands whose product is data).
"""
import argparse
import json
import sys
import time

import numpy as np

from . import alignment, baseline, core, datagen, diffusion, extension, multiclass, storage
from .distortion import verify_distortion
from .exceptions import (
    BoundViolation,
    ConnectivityError,
    NumericalIntegrityError,
    ParseError,
    ShapeError,
    ValidationError,
)
from .storage import RunReport

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_SHAPE, EXIT_NUMERIC = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()
        self.last = self.start
        self.stages = {}

    def lap(self, name):
        now = time.perf_counter()
        self.stages[name] = self.stages.get(name, 0.0) + now - self.last
        self.last = now

    def total(self):
        return time.perf_counter() - self.start


def _verify(report, X, Y, bound, seed):
    dist, sampled = verify_distortion(X, Y, seed=seed)
    report.achieved_distortion = dist
    report.distortion_sampled = sampled
    report.bound = bound
    report.bound_holds = bool(dist <= bound + 1e-8)
    if not report.bound_holds:
        raise BoundViolation(f"achieved distortion {dist:.6g} exceeds the bound {bound:.6g}")


def _emit_scatter(path, emb, series="embedding"):
    k = min(3, emb.shape[0])
    cols = [emb[j] for j in range(k)] + [[series] * emb.shape[1]]
    header = ["x", "y", "z"][:k] + ["series"]
    storage.write_text(path, storage.format_table(cols, header))


def _finish(report, clock):
    report.timings = {k: round(v, 6) for k, v in clock.stages.items()}
    report.wall_time = clock.total()
    sys.stdout.write(report.to_json())


def _epsilon(value, X):
    if value == "median2":
        return diffusion.median2_epsilon(X)
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"--epsilon expects a number or 'median2', got {value!r}") from None


def _save(model, path):
    if path:
        storage.save_model(model, path)


# ---------------------------------------------------------------- commands

def cmd_fit(args):
    clock = _Clock()
    A = storage.read_matrix(args.input)
    clock.lap("read")
    model = core.fit(A, args.mu, max_dim=args.max_dim)
    clock.lap("fit")
    report = RunReport("fit", s=model.s, mu=model.mu, mu_strict=model.mu_strict)
    _verify(report, A, model.embedding, 2.0 * model.mu, args.seed)
    report.extra = {"mu_requested": model.mu_requested, "capped": model.capped,
                    "pivots": [int(v) for v in model.pivots]}
    clock.lap("verify")
    _save(model, args.model)
    if args.output:
        storage.write_text(args.output, storage.matrix_to_csv(model.embedding, "h"))
    if args.emit_plot_data:
        _emit_scatter(args.emit_plot_data, core.align_optimal_coords(model)[0])
    clock.lap("write")
    _finish(report, clock)


def cmd_embed(args):
    model = storage.load_model(args.model)
    if isinstance(model, diffusion.DiffusionModel):
        model = model.icpqr
    if not isinstance(model, core.IcpqrModel):
        raise ValidationError("embed needs an icpqr or diffusion model")
    if args.input:
        coords, _ = extension.extend_many(model, storage.read_matrix(args.input))
    else:
        coords = core.embed(model)
    storage.write_text(args.output, storage.matrix_to_csv(coords, "h"))


def _extension_table(coords, dist, normal, strict, verdict, far=None):
    cols = list(coords) + [dist, normal, strict]
    header = [f"h{j}" for j in range(coords.shape[0])] + ["distortion", "normal", "strictly_normal"]
    if far is not None:
        cols.append(far)
        header.append("far")
    cols.append(verdict)
    header.append("verdict")
    return storage.format_table(cols, header)


def _verdicts(dist, kappa, policy, far=None):
    label = "strict" if policy in ("strict", "mu_strict") else "mu"
    out = []
    for i, v in enumerate(dist):
        if far is not None and far[i]:
            out.append(extension.ABNORMAL)
        else:
            out.append(extension.verdict_for(v, kappa, label))
    return out


def cmd_extend(args):
    model = storage.load_model(args.model, expect="icpqr")
    X = storage.read_matrix(args.input)
    coords, dist = extension.extend_many(model, X)
    kappa = extension.resolve_kappa(model, args.policy)
    table = _extension_table(
        coords, dist, dist <= model.mu, dist <= model.mu_strict, _verdicts(dist, kappa, args.policy)
    )
    storage.write_text(args.output, table)


def cmd_dm_fit(args):
    clock = _Clock()
    X = storage.read_matrix(args.input)
    clock.lap("read")
    eps = _epsilon(args.epsilon, X)
    K = diffusion.gaussian_kernel(X, eps)
    P, d = diffusion.markov(K)
    G = diffusion.g_matrix(P, d, args.t)
    clock.lap("kernel")
    model = diffusion.fit_dm(K, args.t, args.mu, points=X, epsilon=eps, max_dim=args.max_dim)
    clock.lap("fit")
    report = RunReport("dm-fit", s=model.s, mu=model.mu, mu_strict=model.mu_strict_t)
    _verify(report, G, diffusion.embedding(model), 2.0 * model.mu, args.seed)
    report.extra = {"epsilon": eps, "t": model.t, "n": model.n, "far_threshold": model.far_threshold}
    clock.lap("verify")
    _save(model, args.model)
    if args.output:
        storage.write_text(args.output, storage.matrix_to_csv(diffusion.embedding(model), "h"))
    if args.emit_plot_data:
        _emit_scatter(args.emit_plot_data, core.align_optimal_coords(model.icpqr)[0])
    clock.lap("write")
    _finish(report, clock)


def cmd_dm_extend(args):
    model = storage.load_model(args.model, expect="diffusion")
    Y = storage.read_matrix(args.input)
    ext = diffusion.extend_points(model, Y)
    kappa = extension.resolve_kappa(model.icpqr, args.policy)
    table = _extension_table(
        ext.coords, ext.distortion, ext.normal, ext.strictly_normal,
        _verdicts(ext.distortion, kappa, args.policy, ext.far), ext.far,
    )
    storage.write_text(args.output, table)


def _mu_grid(text):
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--mu expects a number or a comma-separated grid, got {text!r}") from None
    if not vals:
        raise UsageError("--mu is empty")
    return vals


def cmd_classify_fit(args):
    clock = _Clock()
    X = storage.read_matrix(args.input)
    if not args.labels:
        raise UsageError("classify-fit requires --labels")
    y = storage.read_labels(args.labels, X.shape[1])
    clock.lap("read")
    grid = _mu_grid(args.mu)
    mu = grid[0] if len(grid) == 1 else multiclass.select_mu(X, y, grid, seed=args.seed)
    clock.lap("select")
    bundle = multiclass.fit_multiclass(X, y, mu)
    clock.lap("fit")
    report = RunReport("classify-fit", mu=mu)
    report.extra = {
        "labels": list(bundle.labels),
        "dictionary_sizes": [m.s for m in bundle.models],
        "grid": grid,
        "training_accuracy": multiclass.accuracy(bundle, X, y),
    }
    _save(bundle, args.model)
    clock.lap("write")
    _finish(report, clock)


def cmd_classify_predict(args):
    bundle = storage.load_model(args.model, expect="classifier")
    X = storage.read_matrix(args.input)
    pred, b = multiclass.predict_many(bundle, X)
    cols = [pred] + list(b)
    header = ["label"] + [f"distortion_{lab}" for lab in bundle.labels]
    storage.write_text(args.output, storage.format_table(cols, header))
    if args.labels:
        y = storage.read_labels(args.labels, X.shape[1])
        acc = float(np.mean([p == t for p, t in zip(pred, y)]))
        sys.stderr.write(json.dumps({"accuracy": acc, "n": len(y)}) + "\n")


def cmd_align(args):
    if not args.target:
        raise UsageError("align requires --target")
    A = storage.read_matrix(args.input)
    B = storage.read_matrix(args.target)
    res = alignment.align(A, B)
    storage.write_text(args.output, storage.matrix_to_csv(res.aligned, "x"))


_GEN_KINDS = {"swiss-roll": "swiss_roll", "bounding-box": "bounding_box", "blobs": "blobs",
              "noise": "noise", "subspaces": "subspaces"}


def cmd_gen(args):
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.config}: {exc}") from exc
        spec = datagen.GeneratorSpec(cfg["kind"], int(cfg["n"]), int(cfg.get("seed", 0)), dict(cfg.get("params", {})))
    else:
        if not args.kind:
            raise UsageError("gen needs a generator kind or --config")
        params = {}
        if args.kind == "bounding-box" and args.input:
            params["reference"] = storage.read_matrix(args.input)
        if args.kind == "noise":
            params["eta"] = args.eta
            params["m"] = args.m
        spec = datagen.GeneratorSpec(_GEN_KINDS[args.kind], args.n, args.seed, params)
    X, extra = spec.generate()
    storage.write_text(args.output, storage.matrix_to_csv(X, "x"))
    if args.labels and extra is not None:
        if spec.kind in ("blobs", "subspaces"):
            storage.write_text(args.labels, storage.format_table([list(extra)], ["label"]))
        else:
            storage.write_text(args.labels, storage.matrix_to_csv(extra, "u"))


def _measure(seed):
    return lambda X, Y: verify_distortion(X, Y, seed=seed)[0]


def cmd_bench(args):
    clock = _Clock()
    if args.against != "pca":
        raise UsageError(f"unknown baseline {args.against!r}")
    A = storage.read_matrix(args.input)
    clock.lap("read")
    measure = _measure(args.seed)
    extra = {}
    if args.epsilon is not None:
        eps = _epsilon(args.epsilon, A)
        K = diffusion.gaussian_kernel(A, eps)
        P, d = diffusion.markov(K)
        A = diffusion.g_matrix(P, d, args.t)
        extra.update(epsilon=eps, t=args.t)
        clock.lap("kernel")
    model = core.fit(A, args.mu, max_dim=args.max_dim)
    clock.lap("fit")
    report = RunReport("bench", s=model.s, mu=model.mu, mu_strict=model.mu_strict)
    _verify(report, A, model.embedding, 2.0 * model.mu, args.seed)
    clock.lap("verify")
    target = report.achieved_distortion
    k, k_dist = baseline.pca_dimension_for(A, target, measure)
    S = np.linalg.svd(A, compute_uv=False)
    analytic_k = next((j for j in range(S.shape[0] + 1)
                       if 2.0 * (S[j] if j < S.shape[0] else 0.0) <= target), S.shape[0])
    extra.update(
        pca_dimension=k,
        pca_distortion=k_dist,
        pca_bound_dimension=analytic_k,
        pca_needs_at_least_s=bool(k >= model.s),
    )
    if args.epsilon is not None:
        cdm = diffusion.classical_dm(K, args.t)
        extra["dm_analytic_dimension"] = diffusion.analytic_dimension(cdm, target)
        extra["dm_truncation_dimension"] = diffusion.minimal_dm_dimension(cdm, target, measure)
    clock.lap("baseline")
    report.extra = extra
    if args.emit_plot_data:
        U, _, _ = np.linalg.svd(A, full_matrices=False)
        proj = U.T @ A
        ks = sorted(set(np.linspace(1, model.s, min(model.s, 40)).astype(int).tolist())) if model.s else []
        xs, ys, series = [], [], []
        for j in ks:
            for name, emb in (("icpqr", model.embedding[:j]), ("pca", proj[:j])):
                xs.append(j)
                ys.append(measure(A, emb))
                series.append(name)
            xs.append(j)
            ys.append(2.0 * (S[j] if j < S.shape[0] else 0.0))
            series.append("pca_bound")
        storage.write_text(args.emit_plot_data, storage.format_table([xs, ys, series], ["x", "y", "series"]))
        clock.lap("plot")
    _finish(report, clock)


# ---------------------------------------------------------------- parser

def build_parser():
    p = _Parser(prog="icpqr", description="ICPQR dimensionality reduction")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp, mu=True, model_in=False):
        sp.add_argument("--input", help="CSV, one point per row (default: stdin)")
        sp.add_argument("--output", help="output path (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        if mu:
            sp.add_argument("--mu", type=float, required=True)
            sp.add_argument("--max-dim", type=int)
        if model_in:
            sp.add_argument("--model", required=True)
        return sp

    sp = common(sub.add_parser("fit", help="fit ICPQR on raw data"))
    sp.add_argument("--model", help="save the fitted model here")
    sp.add_argument("--emit-plot-data", help="write an embedding scatter CSV here")
    sp.set_defaults(func=cmd_fit)

    sp = common(sub.add_parser("embed", help="write a stored or extended embedding"), mu=False, model_in=True)
    sp.set_defaults(func=cmd_embed)

    sp = common(sub.add_parser("extend", help="extend new points, with verdicts"), mu=False, model_in=True)
    sp.add_argument("--policy", default="mu")
    sp.set_defaults(func=cmd_extend)

    sp = common(sub.add_parser("dm-fit", help="ICPQR diffusion map"))
    sp.add_argument("--epsilon", default="median2")
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--model")
    sp.add_argument("--emit-plot-data")
    sp.set_defaults(func=cmd_dm_fit)

    sp = common(sub.add_parser("dm-extend", help="extend new points through a diffusion model"),
                mu=False, model_in=True)
    sp.add_argument("--policy", default="mu")
    sp.set_defaults(func=cmd_dm_extend)

    sp = common(sub.add_parser("classify-fit", help="one dictionary per class"), mu=False)
    sp.add_argument("--mu", required=True, help="value, or comma-separated grid for validation")
    sp.add_argument("--labels")
    sp.add_argument("--model")
    sp.set_defaults(func=cmd_classify_fit)

    sp = common(sub.add_parser("classify-predict", help="minimal-distortion labels"), mu=False, model_in=True)
    sp.add_argument("--labels", help="true labels; accuracy goes to stderr")
    sp.set_defaults(func=cmd_classify_predict)

    sp = common(sub.add_parser("align", help="align --target onto --input"), mu=False)
    sp.add_argument("--target")
    sp.set_defaults(func=cmd_align)

    sp = common(sub.add_parser("gen", help="synthetic data"), mu=False)
    sp.add_argument("kind", nargs="?", choices=sorted(_GEN_KINDS))
    sp.add_argument("--n", type=int, default=3000)
    sp.add_argument("--eta", type=float, default=1.0)
    sp.add_argument("--m", type=int, default=3)
    sp.add_argument("--labels", help="write labels / intrinsic coordinates here")
    sp.add_argument("--config", help="JSON generator spec {kind, n, seed, params}")
    sp.set_defaults(func=cmd_gen)

    sp = common(sub.add_parser("bench", help="compare against PCA"))
    sp.add_argument("--against", default="pca")
    sp.add_argument("--epsilon", help="benchmark the diffusion matrix of this kernel scale instead")
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--emit-plot-data")
    sp.set_defaults(func=cmd_bench)
    return p


def _exit_code(exc):
    if isinstance(exc, UsageError):
        return EXIT_USAGE
    if isinstance(exc, ParseError):
        return EXIT_PARSE
    if isinstance(exc, ShapeError):
        return EXIT_SHAPE
    if isinstance(exc, (NumericalIntegrityError, ConnectivityError, np.linalg.LinAlgError, FloatingPointError)):
        return EXIT_NUMERIC
    if isinstance(exc, (ValidationError, OSError)):
        return EXIT_USAGE
    return None


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError("a command is required")
        args.func(args)
    except Exception as exc:  # noqa: BLE001 - mapped to exit codes below
        code = _exit_code(exc)
        if code is None:
            raise
        record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        sys.stderr.write(json.dumps(record) + "\n")
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
