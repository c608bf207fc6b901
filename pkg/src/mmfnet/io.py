"""Self-describing JSON artifacts.

Every file is ``{"schema_version": 1, "type": <tag>, "data": {...}}``.
Arrays are stored as ``{"dtype", "shape", "real"[, "imag"]}`` with flat
lists of floats; Python's shortest round-trip float repr makes reloads
bit-identical.
"""

import json
from pathlib import Path

import numpy as np

from .circuit import PhasePlanes
from .errors import ArtifactParseError, ArtifactTypeError, ArtifactVersionError
from .medium import MediumModel
from .quantum import CountTable
from .tmchar import TmFit

SCHEMA_VERSION = 1


def encode_array(a):
    a = np.asarray(a)
    out = {"dtype": "complex" if np.iscomplexobj(a) else str(a.dtype), "shape": list(a.shape),
           "real": a.real.ravel().tolist()}
    if np.iscomplexobj(a):
        out["imag"] = a.imag.ravel().tolist()
    return out


def decode_array(obj):
    shape = tuple(obj["shape"])
    if obj["dtype"] == "complex":
        arr = np.array(obj["real"], dtype=float) + 1j * np.array(obj["imag"], dtype=float)
    else:
        arr = np.array(obj["real"], dtype=obj["dtype"])
    return arr.reshape(shape)


def _enc_medium(m):
    return {"N": m.N, "M": m.M, "phi": m.phi, "seed": m.seed,
            **{k: encode_array(getattr(m, k)) for k in ("U1", "C_in", "F_in", "U2", "F_out")}}


def _dec_medium(d):
    arrays = {k: decode_array(d[k]) for k in ("U1", "C_in", "F_in", "U2", "F_out")}
    return MediumModel(d["N"], d["M"], phi=d["phi"], seed=d["seed"], **arrays)


def _enc_fit(f):
    return {"U1": encode_array(f.U1), "loss": encode_array(f.loss),
            "similarity": None if f.similarity is None else encode_array(f.similarity)}


def _dec_fit(d):
    sim = None if d["similarity"] is None else decode_array(d["similarity"])
    return TmFit(decode_array(d["U1"]), decode_array(d["loss"]), sim)


def _enc_counts(c):
    return {"d": c.d, "settings": [[m, n, encode_array(v)] for (m, n), v in sorted(c.data.items())]}


def _dec_counts(d):
    return CountTable(d["d"], {(m, n): decode_array(v) for m, n, v in d["settings"]})


_CODECS = {
    MediumModel: ("MediumModel", _enc_medium, _dec_medium),
    PhasePlanes: ("PhasePlanes", lambda p: {"phases": encode_array(p.phases)},
                  lambda d: PhasePlanes(decode_array(d["phases"]))),
    TmFit: ("TmFit", _enc_fit, _dec_fit),
    CountTable: ("CountTable", _enc_counts, _dec_counts),
    np.ndarray: ("Array", encode_array, decode_array),
}
_BY_TAG = {tag: dec for tag, _, dec in _CODECS.values()}


def _codec(obj):
    for cls, codec in _CODECS.items():
        if isinstance(obj, cls):
            return codec
    raise ArtifactTypeError(f"no artifact codec for {type(obj).__name__}")


def save_artifact(path, obj):
    """Write ``obj`` to ``path`` and return the path."""
    tag, enc, _ = _codec(obj)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps({"schema_version": SCHEMA_VERSION, "type": tag, "data": enc(obj)})
    path.write_text(text)
    return path


def load_artifact(path, expected=None):
    """Read an artifact; ``expected`` is a type tag or class to enforce."""
    raw = Path(path).read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ArtifactParseError(f"corrupt artifact {path}: not UTF-8", exc.start) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[:exc.pos].encode("utf-8"))
        raise ArtifactParseError(f"corrupt artifact {path}: {exc.msg}", offset) from exc
    if not isinstance(doc, dict) or "type" not in doc or "schema_version" not in doc:
        raise ArtifactParseError(f"{path} is not an artifact container", 0)
    if doc["schema_version"] != SCHEMA_VERSION:
        raise ArtifactVersionError(
            f"{path} has schema version {doc['schema_version']}; this build reads {SCHEMA_VERSION}"
            " and has no migration for it")
    tag = doc["type"]
    if expected is not None:
        want = expected if isinstance(expected, str) else _CODECS[expected][0]
        if tag != want:
            raise ArtifactTypeError(f"{path} holds a {tag}, expected {want}")
    if tag not in _BY_TAG:
        raise ArtifactTypeError(f"unknown artifact type {tag!r} in {path}")
    return _BY_TAG[tag](doc["data"])
