"""Binary serialization for trained models plus their performance wiring.

A saved file bundles the learned arrays with everything needed to actually
play: the orchestra layout the model was trained against, the time
quantization, how many past frames it conditions on, and default sampling
settings.

Layout (all integers little-endian):

    8s   magic  "TUTTIMDL"
    u32  format version (currently 1)
    u32  tensor count
    per tensor:
        u16  name length, then name (utf-8)
        u16  ndim, then u32 x ndim dims
        f64  data, C order
    u64  metadata length, then metadata (utf-8 JSON)

The JSON metadata carries the model kind, constructor hyperparameters, the
layout, quantization, past-frame count, and sampling defaults.  Writing is
canonical (sorted JSON keys, fixed field order), so identical bundles produce
identical bytes — retraining with the same seeds yields bit-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..pianoroll import OrchestraLayout
from .base import EnergyModel, SamplingConfig
from .crbm import ConditionalRBM
from .fgcrbm import FactoredGatedRBM
from .rbm import RBM

MAGIC = b"TUTTIMDL"
FORMAT_VERSION = 1

MODEL_KINDS = {"rbm": RBM, "crbm": ConditionalRBM, "fgcrbm": FactoredGatedRBM}


class SerializationError(ValueError):
    """Raised for malformed, truncated, or unsupported model files."""


@dataclass
class ModelBundle:
    """A trained model together with the context needed to project scores."""

    model: EnergyModel
    layout: OrchestraLayout | None
    quantization: int
    n_past: int
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    extra: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return self.model.kind

    @property
    def orchestra_dim(self) -> int:
        if self.layout is None:
            raise ValueError("bundle has no orchestra layout")
        return self.layout.total_dim


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise SerializationError(
                f"truncated model file: wanted {n} bytes for {what} at byte "
                f"{self.pos}, file has {len(self.data)}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]


def _pack_tensors(params: dict[str, np.ndarray]) -> bytes:
    chunks = [struct.pack("<I", len(params))]
    for name, arr in params.items():
        arr = np.ascontiguousarray(arr, dtype="<f8")
        raw_name = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack("<H", arr.ndim))
        chunks.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        chunks.append(arr.tobytes(order="C"))
    return b"".join(chunks)


def _unpack_tensors(reader: _Reader) -> dict[str, np.ndarray]:
    count = reader.u32("tensor count")
    params: dict[str, np.ndarray] = {}
    for i in range(count):
        name_len = reader.u16(f"tensor {i} name length")
        name = reader.take(name_len, f"tensor {i} name").decode("utf-8")
        ndim = reader.u16(f"{name!r} ndim")
        dims = struct.unpack(f"<{ndim}I", reader.take(4 * ndim, f"{name!r} dims"))
        n_items = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        raw = reader.take(8 * n_items, f"{name!r} data")
        params[name] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(dims)
    return params


def _model_from_params(kind: str, params: dict[str, np.ndarray], hypers: dict) -> EnergyModel:
    if kind == "rbm":
        model = RBM.from_arrays(
            params["weights_"], params["visible_bias_"], params["hidden_bias_"]
        )
    elif kind == "crbm":
        model = ConditionalRBM.from_arrays(
            params["weights_"],
            params["visible_bias_"],
            params["hidden_bias_"],
            params["context_visible_"],
            params["context_hidden_"],
        )
    elif kind == "fgcrbm":
        model = FactoredGatedRBM.from_arrays(
            params["visible_bias_"],
            params["hidden_bias_"],
            params["w_vis_"],
            params["w_hid_"],
            params["w_feat_"],
            params["a_vis_"],
            params["a_ctx_"],
            params["a_feat_"],
            params["b_hid_"],
            params["b_ctx_"],
            params["b_feat_"],
        )
    else:
        raise SerializationError(f"unknown model kind {kind!r}")
    known = model.get_params()
    model.set_params(**{k: v for k, v in hypers.items() if k in known})
    return model


def _jsonable(value):
    """Hyperparameter values that survive a JSON round trip; others become None."""
    try:
        json.dumps(value)
        return value
    except TypeError:
        return None


def bundle_to_bytes(bundle: ModelBundle) -> bytes:
    model = bundle.model
    if model.kind not in MODEL_KINDS:
        raise SerializationError(f"cannot serialize model kind {model.kind!r}")
    meta = {
        "kind": model.kind,
        "hyperparameters": {k: _jsonable(v) for k, v in model.get_params().items()},
        "layout": None if bundle.layout is None else bundle.layout.to_dict(),
        "quantization": int(bundle.quantization),
        "n_past": int(bundle.n_past),
        "sampling": asdict(bundle.sampling),
        "extra": bundle.extra,
    }
    meta_raw = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    params = {name: getattr(model, name) for name in model._param_names()}
    return b"".join(
        [
            MAGIC,
            struct.pack("<I", FORMAT_VERSION),
            _pack_tensors(params),
            struct.pack("<Q", len(meta_raw)),
            meta_raw,
        ]
    )


def bundle_from_bytes(data: bytes) -> ModelBundle:
    reader = _Reader(data)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise SerializationError(f"not a model file (bad magic {magic!r})")
    version = reader.u32("format version")
    if version != FORMAT_VERSION:
        raise SerializationError(
            f"unsupported model format version {version} (this build reads "
            f"{FORMAT_VERSION})"
        )
    params = _unpack_tensors(reader)
    meta_len = reader.u64("metadata length")
    try:
        meta = json.loads(reader.take(meta_len, "metadata").decode("utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise SerializationError(f"corrupt metadata: {exc}") from exc
    if reader.pos != len(data):
        raise SerializationError(
            f"{len(data) - reader.pos} trailing bytes after metadata"
        )
    kind = meta.get("kind")
    model = _model_from_params(kind, params, meta.get("hyperparameters", {}))
    layout_dict = meta.get("layout")
    layout = None if layout_dict is None else OrchestraLayout.from_dict(layout_dict)
    sampling = SamplingConfig(**meta.get("sampling", {}))
    return ModelBundle(
        model=model,
        layout=layout,
        quantization=int(meta["quantization"]),
        n_past=int(meta["n_past"]),
        sampling=sampling,
        extra=meta.get("extra", {}),
    )


def save_model(path, bundle: ModelBundle) -> None:
    Path(path).write_bytes(bundle_to_bytes(bundle))


def load_model(path) -> ModelBundle:
    return bundle_from_bytes(Path(path).read_bytes())
