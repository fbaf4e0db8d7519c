"""CSV exchange, model persistence and run reports.

CSV files hold one point per row (optionally preceded by a header row); they
are transposed on read so arrays keep the columns-are-points convention.

Models are stored as versioned JSON documents
``{"format_version", "kind", "payload"}``. Floats are written with 17
significant digits, which round-trips every float64 exactly, and the writer
is deterministic, so save -> load -> save reproduces the file byte for byte.
"""
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import IcpqrModel
from .diffusion import DiffusionModel
from .exceptions import ParseError, ShapeError, ValidationError
from .multiclass import ClassifierBundle

FORMAT_VERSION = 1


# ---------------------------------------------------------------- CSV

def _open_text(path):
    if path is None or path == "-":
        return sys.stdin.read()
    try:
        with open(path, newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _floats(row):
    return [float(c) for c in row]


def parse_matrix_csv(text, source="<input>"):
    """Parse CSV text into a ``(m, n)`` array (rows of the file are columns)."""
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{source}: no data rows")
    try:
        _floats(rows[0])
    except ValueError:
        rows = rows[1:]
        if not rows:
            raise ParseError(f"{source}: header but no data rows") from None
    width = len(rows[0])
    data = np.empty((len(rows), width))
    for k, r in enumerate(rows):
        if len(r) != width:
            raise ParseError(f"{source}: row {k + 1} has {len(r)} fields, expected {width}")
        try:
            data[k] = _floats(r)
        except ValueError as exc:
            raise ParseError(f"{source}: row {k + 1}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise ParseError(f"{source}: non-finite value")
    return np.ascontiguousarray(data.T)


def read_matrix(path):
    """Read a points-per-row CSV (``"-"`` or None reads stdin)."""
    return parse_matrix_csv(_open_text(path), "<stdin>" if path in (None, "-") else path)


def _label_value(v):
    v = v.strip()
    try:
        return int(v)
    except ValueError:
        return v


def read_labels(path, n):
    """Single-column label file aligned with `n` data rows; a header row is
    recognised by the file having exactly ``n + 1`` rows."""
    rows = [r for r in csv.reader(io.StringIO(_open_text(path))) if r and r[0].strip()]
    if len(rows) == n + 1:
        rows = rows[1:]
    if len(rows) != n:
        raise ShapeError(f"{path}: {len(rows)} labels for {n} points")
    if any(len(r) != 1 for r in rows):
        raise ParseError(f"{path}: label file must have a single column")
    return [_label_value(r[0]) for r in rows]


def _fmt(v):
    return format(float(v), ".17g")


def format_table(columns, header):
    """CSV text from equally long columns; floats with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    n = len(columns[0]) if columns else 0
    for i in range(n):
        w.writerow([_cell(c[i]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer, str)):
        return str(v)
    return _fmt(v)


def matrix_to_csv(M, prefix="x"):
    """Points-per-row CSV for a ``(k, n)`` array of column points."""
    M = np.atleast_2d(np.asarray(M, dtype=np.float64))
    return format_table(list(M), [f"{prefix}{j}" for j in range(M.shape[0])])


def write_text(path, text):
    """Write atomically to `path` (temporary file + rename); None/"-" means stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------- JSON

def _dump(obj):
    # deterministic JSON with fixed float formatting
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise ValidationError(f"cannot store non-finite value {obj}")
        return _fmt(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _dump(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_dump(v) for v in obj) + "]"
    if isinstance(obj, dict):
        return "{" + ",".join(f"{json.dumps(str(k))}:{_dump(v)}" for k, v in obj.items()) + "}"
    raise ValidationError(f"cannot serialise {type(obj).__name__}")


def _matrix(M):
    M = np.asarray(M, dtype=np.float64)
    return {"shape": list(M.shape), "data": M.ravel().tolist()}


def _unmatrix(d, name):
    try:
        shape = tuple(int(v) for v in d["shape"])
        data = np.asarray(d["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"field {name!r} is not a stored matrix") from exc
    if data.size != int(np.prod(shape)):
        raise ParseError(f"field {name!r}: {data.size} values for shape {shape}")
    return data.reshape(shape)


def _icpqr_payload(model):
    return {
        "mu": model.mu,
        "mu_requested": model.mu_requested,
        "mu_strict": model.mu_strict,
        "s": model.s,
        "m": model.m,
        "n": model.n,
        "capped": model.capped,
        "perm": [int(v) for v in model.perm],
        "dictionary": _matrix(model.dictionary),
        "tri": _matrix(model.tri),
        "embedding": None if model.embedding is None else _matrix(model.embedding),
    }


def _require(p, keys, kind):
    missing = [k for k in keys if k not in p]
    if missing:
        raise ParseError(f"{kind} payload lacks {missing}")


def _icpqr_from(p):
    _require(p, ["mu", "mu_requested", "mu_strict", "s", "m", "n", "perm", "dictionary", "tri"], "icpqr")
    s, m, n = int(p["s"]), int(p["m"]), int(p["n"])
    perm = np.asarray(p["perm"], dtype=np.int64)
    dictionary = _unmatrix(p["dictionary"], "dictionary")
    tri = _unmatrix(p["tri"], "tri")
    emb = p.get("embedding")
    emb = None if emb is None else _unmatrix(emb, "embedding")
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValidationError("perm is not a permutation of the training columns")
    if dictionary.shape != (m, s) or tri.shape != (s, s):
        raise ShapeError(f"dictionary {dictionary.shape} / tri {tri.shape} inconsistent with s={s}, m={m}")
    if emb is not None and emb.shape != (s, n):
        raise ShapeError(f"embedding shape {emb.shape}, expected {(s, n)}")
    if np.any(np.tril(tri, -1) != 0) or np.any(np.diag(tri) <= 0):
        raise ValidationError("tri must be upper triangular with positive diagonal")
    if emb is not None and not np.array_equal(emb[:, perm[:s]], tri):
        raise ValidationError("embedding pivot columns disagree with tri")
    mu, mu_strict = float(p["mu"]), float(p["mu_strict"])
    if not (0 <= mu_strict <= mu):
        raise ValidationError("stored mu_strict exceeds mu")
    for name, M in (("dictionary", dictionary), ("tri", tri)):
        if not np.all(np.isfinite(M)):
            raise ValidationError(f"{name} contains non-finite values")
    return IcpqrModel(
        mu=mu,
        mu_requested=float(p["mu_requested"]),
        s=s,
        perm=perm,
        dictionary=dictionary,
        tri=tri,
        embedding=emb,
        mu_strict=mu_strict,
        m=m,
        n=n,
        capped=bool(p.get("capped", False)),
    )


def _diffusion_payload(model):
    return {
        "epsilon": model.epsilon,
        "t": model.t,
        "degrees": [float(v) for v in model.degrees],
        "train": None if model.train is None else _matrix(model.train),
        "mu_strict_t": model.mu_strict_t,
        "far_threshold": model.far_threshold,
        "icpqr": _icpqr_payload(model.icpqr),
    }


def _diffusion_from(p):
    _require(p, ["epsilon", "t", "degrees", "mu_strict_t", "far_threshold", "icpqr"], "diffusion")
    icp = _icpqr_from(p["icpqr"])
    d = np.asarray(p["degrees"], dtype=np.float64)
    if d.ndim != 1 or np.any(d <= 0):
        raise ValidationError("degrees must be a positive vector")
    if icp.m != d.shape[0] or icp.n != d.shape[0]:
        raise ShapeError("inner model does not match the number of training points")
    train = p.get("train")
    train = None if train is None else _unmatrix(train, "train")
    if train is not None and train.shape[1] != d.shape[0]:
        raise ShapeError("training points do not match the degrees vector")
    t = int(p["t"])
    if t < 1:
        raise ValidationError("t must be positive")
    return DiffusionModel(
        epsilon=None if p["epsilon"] is None else float(p["epsilon"]),
        t=t,
        degrees=d,
        train=train,
        icpqr=icp,
        mu_strict_t=float(p["mu_strict_t"]),
        far_threshold=float(p["far_threshold"]),
    )


def _classifier_payload(bundle):
    return {
        "labels": list(bundle.labels),
        "mu": bundle.mu,
        "models": [_icpqr_payload(m) for m in bundle.models],
    }


def _classifier_from(p):
    _require(p, ["labels", "mu", "models"], "classifier")
    labels = tuple(p["labels"])
    if len(set(labels)) != len(labels):
        raise ValidationError("duplicate class labels")
    models = tuple(_icpqr_from(m) for m in p["models"])
    if len(models) != len(labels) or not models:
        raise ValidationError("one model per label required")
    mu = float(p["mu"])
    if any(m.mu_requested != mu for m in models):
        raise ValidationError("class models were fitted with different mu")
    if len({m.m for m in models}) != 1:
        raise ShapeError("class models disagree on the ambient dimension")
    return ClassifierBundle(labels=labels, models=models, mu=mu)


_KINDS = {
    "icpqr": (IcpqrModel, _icpqr_payload, _icpqr_from),
    "diffusion": (DiffusionModel, _diffusion_payload, _diffusion_from),
    "classifier": (ClassifierBundle, _classifier_payload, _classifier_from),
}


def dumps_model(model):
    for kind, (cls, to_payload, _) in _KINDS.items():
        if isinstance(model, cls):
            doc = {"format_version": FORMAT_VERSION, "kind": kind, "payload": to_payload(model)}
            return _dump(doc) + "\n"
    raise ValidationError(f"cannot store objects of type {type(model).__name__}")


def loads_model(text, expect=None):
    """Parse a model document; `expect` optionally pins the kind."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format_version") != FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {doc.get('format_version') if isinstance(doc, dict) else None}")
    kind = doc.get("kind")
    if kind not in _KINDS:
        raise ParseError(f"unknown model kind {kind!r}")
    if expect is not None and kind != expect:
        raise ValidationError(f"expected a {expect} model, got {kind}")
    return _KINDS[kind][2](doc["payload"])


def save_model(model, path):
    write_text(path, dumps_model(model))


def load_model(path, expect=None):
    return loads_model(_open_text(path), expect=expect)


# ---------------------------------------------------------------- reports

@dataclass
class RunReport:
    """Summary of one command run.

    `distortion_sampled` marks distortions measured over a random subset of
    pairs; a bound check on such a value is a necessary condition only.
    """

    command: str
    s: int = None
    mu: float = None
    mu_strict: float = None
    achieved_distortion: float = None
    distortion_sampled: bool = False
    bound: float = None
    bound_holds: bool = None
    wall_time: float = 0.0
    timings: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        if self.distortion_sampled and self.bound_holds is not None:
            d["bound_check"] = "necessary-condition (sampled pairs)"
        elif self.bound_holds is not None:
            d["bound_check"] = "all pairs"
        return json.dumps(d, indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)
