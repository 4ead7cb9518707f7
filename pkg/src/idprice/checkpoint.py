"""Versioned JSON checkpoints.

Arrays are stored as ``{"shape": [...], "data": [hex floats]}`` so that a
load/save round trip is bit-exact in any language with a hex-float parser.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import FormatError
from .numerics import MinMaxScaler

FORMAT_VERSION = 1
KINDS = ("lstm", "dcgan", "nuts")


def encode_array(a) -> dict:
    a = np.asarray(a, dtype=np.float64)
    return {"shape": list(a.shape), "data": [float(x).hex() for x in a.ravel()]}


def decode_array(obj) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        flat = np.array([float.fromhex(x) for x in obj["data"]], dtype=np.float64)
        return flat.reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed array in checkpoint: {exc}") from None


def fingerprint(values) -> str:
    """SHA-256 over the exact float64 bytes of the training data."""
    a = np.ascontiguousarray(np.asarray(values, dtype="<f8"))
    return "sha256:" + hashlib.sha256(a.tobytes()).hexdigest()


@dataclass
class Checkpoint:
    kind: str
    hyper: dict
    params: dict
    scaler: Optional[MinMaxScaler] = None
    seed: Optional[int] = None
    data_fingerprint: str = ""
    extra: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def to_json(self) -> str:
        if self.kind not in KINDS:
            raise FormatError(f"unknown model kind {self.kind!r}")
        doc = {
            "format_version": self.format_version,
            "kind": self.kind,
            "hyper": self.hyper,
            "params": {k: encode_array(v) for k, v in self.params.items()},
            "scaler": None
            if self.scaler is None
            else {k: float(v).hex() for k, v in self.scaler.to_dict().items()},
            "seed": self.seed,
            "data_fingerprint": self.data_fingerprint,
            "extra": self.extra,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Checkpoint":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"checkpoint is not valid JSON: {exc}") from None
        if doc.get("format_version") != FORMAT_VERSION:
            raise FormatError(f"unsupported checkpoint format version {doc.get('format_version')!r}")
        if doc.get("kind") not in KINDS:
            raise FormatError(f"unknown model kind {doc.get('kind')!r}")
        sc = doc.get("scaler")
        scaler = None
        if sc is not None:
            vals = {k: float.fromhex(v) for k, v in sc.items()}
            scaler = MinMaxScaler(vals["min"], vals["max"], vals["lower"], vals["upper"])
        return cls(
            kind=doc["kind"],
            hyper=doc.get("hyper", {}),
            params={k: decode_array(v) for k, v in doc.get("params", {}).items()},
            scaler=scaler,
            seed=doc.get("seed"),
            data_fingerprint=doc.get("data_fingerprint", ""),
            extra=doc.get("extra", {}),
            format_version=doc["format_version"],
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
