"""Scorer weight files and the reference forward pass.

The file format is the interchange contract: JSON with the assembly
block and one little-endian float64 base64 blob per named matrix.
`forward_score` is a straight-line numpy evaluation of the published
architecture; the conformance artifacts it produces are what the
recommender's scorer is held to.
"""

from __future__ import annotations

import base64
import json
import math

import numpy as np

from .errors import DataError
from .features import AssemblyParams, Bundle, assembly_from_obj, assembly_to_obj, unary_bits

FORMAT_VERSION = 1

_TOWER = ("0", "1", "2")


def matrix_names() -> list[str]:
    names = []
    for k in _TOWER:
        names += [f"dense.{k}.w", f"dense.{k}.b"]
    names += ["dense.out.w", "dense.out.b", "fuse.w", "fuse.b"]
    names += ["nt_enc.w", "nt_enc.b", "attn.query", "nt.empty_context"]
    for k in _TOWER:
        names += [f"nt.{k}.w", f"nt.{k}.b"]
    for k in _TOWER:
        names += [f"head.{k}.w", f"head.{k}.b"]
    names += ["head.out.w", "head.out.b"]
    return names


def save_weights_file(assembly: AssemblyParams, matrices: dict[str, np.ndarray], path) -> None:
    expected = set(matrix_names())
    got = set(matrices)
    if got != expected:
        raise DataError(
            f"matrix set mismatch: missing={sorted(expected - got)} "
            f"unexpected={sorted(got - expected)}"
        )
    doc = {
        "format_version": FORMAT_VERSION,
        "assembly": assembly_to_obj(assembly),
        "matrices": {
            name: {
                "shape": list(m.shape),
                "dtype": "<f8",
                "data_b64": base64.b64encode(
                    np.ascontiguousarray(m, dtype="<f8").tobytes()
                ).decode("ascii"),
            }
            for name, m in sorted(matrices.items())
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_weights_file(path) -> tuple[AssemblyParams, dict[str, np.ndarray]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from e
    except ValueError as e:
        raise DataError(f"{path}: not valid JSON: {e}") from e
    if doc.get("format_version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported format_version {doc.get('format_version')!r}")
    assembly = assembly_from_obj(doc.get("assembly", {}))
    matrices = {}
    try:
        for name, spec in doc["matrices"].items():
            if spec.get("dtype") != "<f8":
                raise DataError(f"matrix {name!r}: expected little-endian float64")
            arr = np.frombuffer(base64.b64decode(spec["data_b64"]), dtype="<f8")
            matrices[name] = arr.reshape(spec["shape"]).copy()
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"{path}: malformed matrices: {e}") from e
    missing = set(matrix_names()) - set(matrices)
    if missing:
        raise DataError(f"{path}: missing matrices {sorted(missing)}")
    for name, m in matrices.items():
        if not np.isfinite(m).all():
            raise DataError(f"{path}: non-finite values in {name!r}")
    return assembly, matrices


def _stable_sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def forward_score(assembly: AssemblyParams, matrices: dict[str, np.ndarray], bundle: Bundle) -> float:
    """Trigger probability for one bundle, plain numpy end to end."""
    m = matrices
    L = assembly.encoding_length
    unit = assembly.encoding_unit_cents

    h = np.asarray(bundle.dense, dtype=np.float64)
    if h.shape != (9,):
        raise DataError(f"dense block must have 9 entries, got {h.shape}")
    sparse = np.asarray(bundle.sparse_onehot, dtype=np.float64)
    if sparse.shape != (assembly.sparse_size,):
        raise DataError(
            f"sparse block must have {assembly.sparse_size} entries, got {sparse.shape}"
        )

    for k in _TOWER:
        h = np.maximum(m[f"dense.{k}.w"] @ h + m[f"dense.{k}.b"], 0.0)
    h = np.maximum(m["dense.out.w"] @ h + m["dense.out.b"], 0.0)

    fused = np.maximum(m["fuse.w"] @ np.concatenate([h, sparse]) + m["fuse.b"], 0.0)
    gated = fused * unary_bits(bundle.target.threshold_cents, unit, L)
    gated = gated * unary_bits(bundle.target.discount_cents, unit, L)

    if bundle.not_target:
        encoded = []
        for p in bundle.not_target:
            enc = np.concatenate(
                [
                    unary_bits(p.threshold_cents, unit, L),
                    unary_bits(p.discount_cents, unit, L),
                ]
            )
            encoded.append(np.maximum(m["nt_enc.w"] @ enc + m["nt_enc.b"], 0.0))
        stack = np.stack(encoded)
        scores = stack @ m["attn.query"] / math.sqrt(L)
        scores = scores - scores.max()
        alphas = np.exp(scores)
        alphas = alphas / alphas.sum()
        pooled = alphas @ stack
    else:
        pooled = m["nt.empty_context"]

    p = pooled
    for k in _TOWER:
        p = np.maximum(m[f"nt.{k}.w"] @ p + m[f"nt.{k}.b"], 0.0)

    z = np.concatenate([gated, p])
    for k in _TOWER:
        z = np.maximum(m[f"head.{k}.w"] @ z + m[f"head.{k}.b"], 0.0)
    logit = float((m["head.out.w"] @ z + m["head.out.b"])[0])
    if not math.isfinite(logit):
        raise DataError("non-finite logit")
    return _stable_sigmoid(logit)
