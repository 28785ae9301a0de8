"""Quantized MLP manifests.

A manifest is JSON: ``{"name": ..., "layers": [layer, ...]}`` where each
layer gives ``in_dim``, ``out_dim``, ``weights`` and ``bias`` file paths
(relative to the manifest), ``weight_scale``, ``input_scale``,
``output_scale`` and ``activation`` (``relu``, or ``none`` for the argmax
output layer). Weights are little-endian int8, row-major (out_dim x in_dim).
Biases are little-endian int32 already in accumulator units
(``weight_scale * input_scale``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from undervolt.dataflow import Layer
from undervolt.harness.errors import DataError
from undervolt.qarith import QTensor


class ManifestError(DataError):
    pass


class MissingFileError(DataError):
    pass


class SizeMismatchError(DataError):
    pass


class ChainingError(DataError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    weights: str
    bias: str
    weight_scale: float
    input_scale: float
    output_scale: float
    activation: str = "relu"


@dataclass(frozen=True)
class ModelManifest:
    name: str
    layers: tuple[LayerSpec, ...]
    root: Path

    @property
    def dims(self) -> tuple[int, ...]:
        return (self.layers[0].in_dim,) + tuple(s.out_dim for s in self.layers)


@dataclass(frozen=True)
class Model:
    manifest: ModelManifest
    layers: tuple[Layer, ...]

    @property
    def dims(self):
        return self.manifest.dims

    def __len__(self):
        return len(self.layers)


REQUIRED = ("in_dim", "out_dim", "weights", "bias", "weight_scale", "input_scale", "output_scale")


def parse_manifest(path) -> ModelManifest:
    path = Path(path)
    if not path.exists():
        raise MissingFileError(f"{path}: manifest not found")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    layers = doc.get("layers")
    if not isinstance(layers, list) or not layers:
        raise ManifestError(f"{path}: 'layers' must be a non-empty list")
    specs = []
    for idx, entry in enumerate(layers):
        missing = [k for k in REQUIRED if k not in entry]
        if missing:
            raise ManifestError(f"{path}: layer {idx} missing {', '.join(missing)}")
        spec = LayerSpec(
            in_dim=int(entry["in_dim"]),
            out_dim=int(entry["out_dim"]),
            weights=str(entry["weights"]),
            bias=str(entry["bias"]),
            weight_scale=float(entry["weight_scale"]),
            input_scale=float(entry["input_scale"]),
            output_scale=float(entry["output_scale"]),
            activation=str(entry.get("activation", "relu")),
        )
        if min(spec.in_dim, spec.out_dim) < 1:
            raise ManifestError(f"{path}: layer {idx} has a non-positive dimension")
        if min(spec.weight_scale, spec.input_scale, spec.output_scale) <= 0:
            raise ManifestError(f"{path}: layer {idx} scales must be positive")
        if spec.activation not in ("relu", "none"):
            raise ManifestError(f"{path}: layer {idx} activation must be 'relu' or 'none'")
        specs.append(spec)
    for idx, (a, b) in enumerate(zip(specs, specs[1:])):
        if a.out_dim != b.in_dim:
            raise ChainingError(
                f"{path}: layer {idx} out_dim={a.out_dim} does not chain into layer {idx + 1} in_dim={b.in_dim}"
            )
        if not np.isclose(a.output_scale, b.input_scale):
            raise ChainingError(f"{path}: layer {idx} output_scale does not match layer {idx + 1} input_scale")
    return ModelManifest(str(doc.get("name", path.stem)), tuple(specs), path.parent)


def _read_tensor(path: Path, dtype: str, count: int, what: str) -> np.ndarray:
    if not path.exists():
        raise MissingFileError(f"{path}: {what} file not found")
    data = np.fromfile(path, dtype=dtype)
    if data.size != count:
        raise SizeMismatchError(f"{path}: {what} has {data.size} values, manifest declares {count}")
    return data


def load_model(path) -> Model:
    manifest = parse_manifest(path)
    layers = []
    for spec in manifest.layers:
        w = _read_tensor(manifest.root / spec.weights, "<i1", spec.out_dim * spec.in_dim, "weights")
        b = _read_tensor(manifest.root / spec.bias, "<i4", spec.out_dim, "bias")
        layers.append(
            Layer(
                QTensor(w.reshape(spec.out_dim, spec.in_dim), spec.weight_scale),
                b.astype(np.int64),
                spec.input_scale,
                spec.output_scale,
                spec.activation,
            )
        )
    return Model(manifest, tuple(layers))


def save_model(model_layers, directory, name="model") -> Path:
    """Write layers as a manifest plus tensor files; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for idx, layer in enumerate(model_layers):
        wname, bname = f"fc{idx + 1}.w.i8", f"fc{idx + 1}.b.i32"
        layer.weights.data.astype("<i1").tofile(directory / wname)
        layer.bias.astype("<i4").tofile(directory / bname)
        entries.append(
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "weights": wname,
                "bias": bname,
                "weight_scale": layer.weights.scale,
                "input_scale": layer.input_scale,
                "output_scale": layer.output_scale,
                "activation": layer.activation,
            }
        )
    path = directory / "manifest.json"
    path.write_text(json.dumps({"name": name, "layers": entries}, indent=2) + "\n")
    return path


def data_path(*parts) -> Path:
    return Path(str(resources.files("undervolt").joinpath("data", *parts)))


def reference_manifest() -> Path:
    return data_path("model", "manifest.json")


def reference_images() -> Path:
    return data_path("mnist", "heldout-images-idx3-ubyte")


def reference_labels() -> Path:
    return data_path("mnist", "heldout-labels-idx1-ubyte")
