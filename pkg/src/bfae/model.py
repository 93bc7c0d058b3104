"""Bi-functional autoencoder: encoder/decoder stacks of continuous layers.

The latent code of sample ``i`` is the output of layer ``latent_index``:
``feature_counts[latent_index]`` functions observed on a grid of
``grid_sizes[latent_index]`` timepoints.  Training minimizes the quadrature
approximation of the mean integrated squared reconstruction error by
full-batch gradient descent on the exact discretized gradients.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .grids import Grid, make_uniform_grid
from .layers import (
    Activation,
    ContinuousLayer,
    init_layer,
    layer_backward,
    layer_forward,
    sgd_step,
)

__all__ = [
    "BFAEConfig",
    "BFAEModel",
    "TrainHistory",
    "TrainingDiverged",
    "build",
    "bottleneck_config",
    "reconstruction_loss",
    "train",
    "model_gradients",
    "save_model",
    "load_model",
]


class TrainingDiverged(RuntimeError):
    """Raised when the training loss becomes non-finite."""


@dataclass(frozen=True)
class BFAEConfig:
    """Architecture and optimization settings.

    ``feature_counts`` and ``grid_sizes`` have one entry per layer boundary
    (``L + 1`` entries for ``L`` layers); the first and last entries must
    match the data shape.  ``latent_index`` picks the layer whose output is
    the latent code and defaults to ``ceil(L / 2)``.
    """

    feature_counts: tuple
    grid_sizes: tuple
    latent_index: Optional[int] = None
    activations: Optional[tuple] = None
    interval: tuple = (0.0, 1.0)
    lr: float = 0.01
    epochs: int = 2000
    init_scheme: str = "uniform"
    seed: int = 0
    momentum: float = 0.0
    batch_size: Optional[int] = None

    def __post_init__(self):
        feats = tuple(int(j) for j in self.feature_counts)
        grids = tuple(int(m) for m in self.grid_sizes)
        if len(feats) < 3:
            raise ValueError("need at least 2 layers (3 boundary entries)")
        if len(feats) != len(grids):
            raise ValueError("feature_counts and grid_sizes must have equal length")
        if any(j < 1 for j in feats) or any(m < 1 for m in grids):
            raise ValueError("feature counts and grid sizes must be >= 1")
        if feats[0] != feats[-1] or grids[0] != grids[-1]:
            raise ValueError(
                "first and last feature counts / grid sizes must match the data shape"
            )
        n_layers = len(feats) - 1
        latent = self.latent_index
        if latent is None:
            latent = math.ceil(n_layers / 2)
        if not 1 <= latent <= n_layers - 1:
            raise ValueError(
                f"latent_index must be in 1..{n_layers - 1}, got {latent}"
            )
        acts = self.activations
        if acts is None:
            acts = ("tanh",) * (n_layers - 1) + ("linear",)
        acts = tuple(a.kind if isinstance(a, Activation) else str(a) for a in acts)
        if len(acts) != n_layers:
            raise ValueError(f"need {n_layers} activations, got {len(acts)}")
        if acts[-1] != "linear":
            raise ValueError("output layer activation must be linear")
        a, b = self.interval
        if not b > a:
            raise ValueError("interval must satisfy b > a")
        if self.lr < 0:
            raise ValueError("lr must be >= 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        object.__setattr__(self, "feature_counts", feats)
        object.__setattr__(self, "grid_sizes", grids)
        object.__setattr__(self, "latent_index", int(latent))
        object.__setattr__(self, "activations", acts)
        object.__setattr__(self, "interval", (float(a), float(b)))

    @property
    def n_layers(self) -> int:
        return len(self.feature_counts) - 1

    @property
    def latent_shape(self) -> tuple:
        return (self.feature_counts[self.latent_index], self.grid_sizes[self.latent_index])


def bottleneck_config(
    n_features: int,
    n_points: int,
    latent_features: int,
    latent_points: int,
    n_layers: int = 2,
    hidden: str = "tanh",
    **kwargs,
) -> BFAEConfig:
    """Symmetric encoder/decoder config with the latent layer in the middle.

    ``n_layers=2`` gives one encoding and one decoding layer; deeper stacks
    repeat the latent width on the extra interior boundaries.
    """
    if n_layers < 2:
        raise ValueError("need at least 2 layers for an interior latent")
    feats = [n_features] + [latent_features] * (n_layers - 1) + [n_features]
    grids = [n_points] + [latent_points] * (n_layers - 1) + [n_points]
    acts = (hidden,) * (n_layers - 1) + ("linear",)
    return BFAEConfig(
        feature_counts=tuple(feats),
        grid_sizes=tuple(grids),
        activations=acts,
        **kwargs,
    )


@dataclass
class TrainHistory:
    """Per-epoch training loss, plus validation loss when supplied."""

    losses: np.ndarray
    val_losses: Optional[np.ndarray] = None


@dataclass
class BFAEModel:
    """Encoder (layers ``1..latent_index``) plus decoder (the rest)."""

    layers: list
    latent_index: int
    config: BFAEConfig
    trained_epochs: int = 0

    @property
    def data_grid(self) -> Grid:
        return self.layers[0].in_grid

    @property
    def n_features(self) -> int:
        return self.layers[0].j_in

    def forward(self, x: np.ndarray):
        """Full reconstruction pass; returns ``(reconstruction, caches)``."""
        x = self._check_batch(x)
        caches = []
        h = x
        for layer in self.layers:
            h, cache = layer_forward(layer, h)
            caches.append(cache)
        return h, caches

    def encode(self, x: np.ndarray) -> np.ndarray:
        """Latent code: output of the layer at ``latent_index``."""
        x = self._check_batch(x)
        h = x
        for layer in self.layers[: self.latent_index]:
            h, _ = layer_forward(layer, h)
        return h

    def reconstruct(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def copy(self) -> "BFAEModel":
        return BFAEModel(
            layers=[lay.copy() for lay in self.layers],
            latent_index=self.latent_index,
            config=self.config,
            trained_epochs=self.trained_epochs,
        )

    def _check_batch(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3:
            raise ValueError(f"batch must be (n, R, M), got shape {x.shape}")
        if x.shape[1] != self.n_features or x.shape[2] != len(self.data_grid):
            raise ValueError(
                f"batch shape {x.shape[1:]} does not match model "
                f"({self.n_features}, {len(self.data_grid)})"
            )
        return x


def _layer_grid(a: float, b: float, m: int) -> Grid:
    if m == 1:
        # scalar latent: one midpoint sample, weight = interval length
        return Grid(points=np.array([(a + b) / 2.0]), quad_weights=np.array([b - a]))
    return make_uniform_grid(a, b, m)


def build(config: BFAEConfig) -> BFAEModel:
    """Initialize all layers of the architecture described by ``config``."""
    a, b = config.interval
    grids = [_layer_grid(a, b, m) for m in config.grid_sizes]
    layers = []
    for ell in range(config.n_layers):
        layers.append(
            init_layer(
                in_grid=grids[ell],
                out_grid=grids[ell + 1],
                j_in=config.feature_counts[ell],
                j_out=config.feature_counts[ell + 1],
                activation=Activation(config.activations[ell]),
                scheme=config.init_scheme,
                seed=config.seed + ell,
            )
        )
    return BFAEModel(layers=layers, latent_index=config.latent_index, config=config)


def reconstruction_loss(x: np.ndarray, xhat: np.ndarray, grid: Grid) -> float:
    """Mean over samples of the summed integrated squared feature errors."""
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {xhat.shape}")
    if x.shape[-1] != len(grid):
        raise ValueError("last axis must match grid length")
    d = x - xhat
    return float(((d * d) @ grid.quad_weights).sum(axis=1).mean())


def _loss_upstream(x: np.ndarray, xhat: np.ndarray, grid: Grid) -> np.ndarray:
    # d(loss)/d(xhat): quadrature weights included
    return (2.0 / x.shape[0]) * grid.quad_weights * (xhat - x)


def model_gradients(model: BFAEModel, x: np.ndarray):
    """Exact gradients of :func:`reconstruction_loss` w.r.t. all parameters.

    Returns ``(loss, [(grad_w, grad_b), ...])`` ordered like ``model.layers``.
    """
    xhat, caches = model.forward(x)
    loss = reconstruction_loss(x, xhat, model.data_grid)
    upstream = _loss_upstream(x, xhat, model.data_grid)
    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        gw, gb, upstream = layer_backward(model.layers[i], caches[i], upstream)
        grads[i] = (gw, gb)
    return loss, grads


def train(
    model: BFAEModel,
    train_values: np.ndarray,
    val_values: Optional[np.ndarray] = None,
) -> TrainHistory:
    """Gradient-descent training using the model config's lr/epochs.

    Full batch by default; with ``config.batch_size`` set, fixed contiguous
    mini-batches are visited in order each epoch.  Raises
    :class:`TrainingDiverged` if the loss becomes non-finite.
    """
    cfg = model.config
    x = model._check_batch(train_values)
    grid = model.data_grid
    n = x.shape[0]
    momentum = cfg.momentum
    velocity = None
    if momentum > 0:
        velocity = [
            (np.zeros_like(lay.weights), np.zeros_like(lay.biases))
            for lay in model.layers
        ]
    if cfg.batch_size is None or cfg.batch_size >= n:
        batches = [slice(0, n)]
    else:
        batches = [slice(s, min(s + cfg.batch_size, n)) for s in range(0, n, cfg.batch_size)]

    losses = np.empty(cfg.epochs)
    val_losses = np.empty(cfg.epochs) if val_values is not None else None
    for epoch in range(cfg.epochs):
        epoch_loss = 0.0
        for sl in batches:
            xb = x[sl]
            xhat, caches = model.forward(xb)
            batch_loss = reconstruction_loss(xb, xhat, grid)
            epoch_loss += batch_loss * xb.shape[0]
            upstream = _loss_upstream(xb, xhat, grid)
            for i in range(len(model.layers) - 1, -1, -1):
                gw, gb, upstream = layer_backward(model.layers[i], caches[i], upstream)
                if velocity is not None:
                    vw, vb = velocity[i]
                    vw *= momentum
                    vw += gw
                    vb *= momentum
                    vb += gb
                    gw, gb = vw, vb
                sgd_step(model.layers[i], (gw, gb), cfg.lr)
        epoch_loss /= n
        if not np.isfinite(epoch_loss):
            last = losses[epoch - 1] if epoch > 0 else None
            raise TrainingDiverged(
                f"non-finite loss at epoch {epoch}"
                + (f"; last finite loss {last:.6g}" if last is not None else "")
                + "; reduce lr"
            )
        losses[epoch] = epoch_loss
        if val_losses is not None:
            val_losses[epoch] = reconstruction_loss(
                val_values, model.reconstruct(val_values), grid
            )
        model.trained_epochs += 1
    return TrainHistory(losses=losses, val_losses=val_losses)


# --- serialization -------------------------------------------------------------


def save_model(model: BFAEModel, path) -> Path:
    """Write a model as JSON: config + shapes header + base64 row-major payload."""
    path = Path(path)
    chunks = []
    shapes = []
    for lay in model.layers:
        shapes.append({"weights": list(lay.weights.shape), "biases": list(lay.biases.shape)})
        chunks.append(lay.weights.ravel())
        chunks.append(lay.biases.ravel())
    payload = np.concatenate(chunks).astype("<f8").tobytes()
    cfg = model.config
    doc = {
        "format_version": 1,
        "config": {
            "feature_counts": list(cfg.feature_counts),
            "grid_sizes": list(cfg.grid_sizes),
            "latent_index": cfg.latent_index,
            "activations": list(cfg.activations),
            "interval": list(cfg.interval),
            "lr": cfg.lr,
            "epochs": cfg.epochs,
            "init_scheme": cfg.init_scheme,
            "seed": cfg.seed,
            "momentum": cfg.momentum,
            "batch_size": cfg.batch_size,
        },
        "trained_epochs": model.trained_epochs,
        "layer_shapes": shapes,
        "dtype": "float64",
        "payload_b64": base64.b64encode(payload).decode("ascii"),
    }
    path.write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8", newline="\n")
    return path


def load_model(path) -> BFAEModel:
    """Inverse of :func:`save_model`; reconstruction is bitwise identical."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format_version") != 1:
        raise ValueError(f"unsupported model file version: {doc.get('format_version')}")
    c = doc["config"]
    config = BFAEConfig(
        feature_counts=tuple(c["feature_counts"]),
        grid_sizes=tuple(c["grid_sizes"]),
        latent_index=c["latent_index"],
        activations=tuple(c["activations"]),
        interval=tuple(c["interval"]),
        lr=c["lr"],
        epochs=c["epochs"],
        init_scheme=c["init_scheme"],
        seed=c["seed"],
        momentum=c["momentum"],
        batch_size=c["batch_size"],
    )
    flat = np.frombuffer(
        base64.b64decode(doc["payload_b64"]), dtype="<f8"
    ).astype(np.float64)
    a, b = config.interval
    grids = [_layer_grid(a, b, m) for m in config.grid_sizes]
    layers = []
    offset = 0
    for ell, shp in enumerate(doc["layer_shapes"]):
        w_shape = tuple(shp["weights"])
        b_shape = tuple(shp["biases"])
        w_size = int(np.prod(w_shape))
        b_size = int(np.prod(b_shape))
        w = flat[offset : offset + w_size].reshape(w_shape).copy()
        offset += w_size
        bias = flat[offset : offset + b_size].reshape(b_shape).copy()
        offset += b_size
        layers.append(
            ContinuousLayer(
                in_grid=grids[ell],
                out_grid=grids[ell + 1],
                weights=w,
                biases=bias,
                activation=Activation(config.activations[ell]),
            )
        )
    if offset != flat.size:
        raise ValueError("payload size does not match shapes header")
    return BFAEModel(
        layers=layers,
        latent_index=config.latent_index,
        config=config,
        trained_epochs=doc.get("trained_epochs", 0),
    )
