"""Per-view autoencoder with a projection head, manual backprop and Adam.

Each view owns three fully connected stacks:

* encoder    X -> H       (ReLU hidden layers, identity into H)
* projection H -> Hhat    (affine by default)
* decoder    H -> Xrec    (mirror of the encoder)

Everything is float64 numpy; gradients are exact reverse-mode derivatives.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import NonFiniteError, RandomSource

DEFAULT_HIDDEN = (500, 500, 2000)
SECTIONS = ("encoder", "projection", "decoder")


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "relu"  # "relu" | "identity"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Layer:
    spec: LayerSpec
    W: np.ndarray  # in_dim x out_dim
    b: np.ndarray  # out_dim


@dataclass
class AdamConfig:
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")


@dataclass
class ViewModel:
    encoder: list[Layer]
    projection: list[Layer]
    decoder: list[Layer]
    adam_m: list[np.ndarray] = field(default_factory=list)
    adam_v: list[np.ndarray] = field(default_factory=list)
    step: int = 0

    def __post_init__(self):
        h = self.encoder[-1].spec.out_dim
        if self.projection[0].spec.in_dim != h or self.decoder[0].spec.in_dim != h:
            raise ValueError("projection and decoder must consume the encoder output")
        if self.decoder[-1].spec.out_dim != self.input_dim:
            raise ValueError("decoder must reconstruct the view input dimension")
        if not self.adam_m:
            self.adam_m = [np.zeros_like(p) for p in self.parameters()]
            self.adam_v = [np.zeros_like(p) for p in self.parameters()]

    @property
    def input_dim(self) -> int:
        return self.encoder[0].spec.in_dim

    @property
    def h_dim(self) -> int:
        return self.encoder[-1].spec.out_dim

    @property
    def hhat_dim(self) -> int:
        return self.projection[-1].spec.out_dim

    def stacks(self):
        return {"encoder": self.encoder, "projection": self.projection, "decoder": self.decoder}

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list, order: encoder, projection, decoder; W then b per layer."""
        out = []
        for name in SECTIONS:
            for layer in self.stacks()[name]:
                out.extend((layer.W, layer.b))
        return out

    def parameter_names(self) -> list[str]:
        out = []
        for name in SECTIONS:
            for i, _ in enumerate(self.stacks()[name]):
                out.extend((f"{name}.{i}.W", f"{name}.{i}.b"))
        return out


def _make_stack(dims, activations, rng: RandomSource) -> list[Layer]:
    layers = []
    for i, act in enumerate(activations):
        spec = LayerSpec(dims[i], dims[i + 1], act)
        # He fan-in scaling
        W = rng.normal((spec.in_dim, spec.out_dim), scale=np.sqrt(2.0 / spec.in_dim))
        layers.append(Layer(spec, W, np.zeros(spec.out_dim)))
    return layers


def init_view_model(input_dim: int, h_dim: int, hhat_dim: int, rng: RandomSource,
                    hidden=DEFAULT_HIDDEN, projection_hidden=()) -> ViewModel:
    """Build one view's encoder / projection / decoder.

    ``hidden`` are the encoder widths (the decoder walks them in reverse).
    ``projection_hidden`` adds ReLU layers to the projection head; empty means
    a single affine map.
    """
    if min(input_dim, h_dim, hhat_dim) < 1:
        raise ValueError("dims must be >= 1")
    hidden = tuple(int(h) for h in hidden)
    enc_dims = (input_dim, *hidden, h_dim)
    dec_dims = (h_dim, *reversed(hidden), input_dim)
    proj_dims = (h_dim, *projection_hidden, hhat_dim)
    relu_then_identity = lambda n: ["relu"] * (n - 1) + ["identity"]  # noqa: E731
    return ViewModel(
        encoder=_make_stack(enc_dims, relu_then_identity(len(enc_dims) - 1), rng.derive(0)),
        projection=_make_stack(proj_dims, relu_then_identity(len(proj_dims) - 1), rng.derive(1)),
        decoder=_make_stack(dec_dims, relu_then_identity(len(dec_dims) - 1), rng.derive(2)),
    )


@dataclass
class ForwardResult:
    H: np.ndarray
    Hhat: np.ndarray
    Xrec: np.ndarray
    tape: dict


def _stack_forward(layers: list[Layer], x: np.ndarray):
    inputs = []
    for layer in layers:
        inputs.append(x)
        z = x @ layer.W + layer.b
        x = np.maximum(z, 0.0) if layer.spec.activation == "relu" else z
    return x, inputs


def _stack_backward(layers: list[Layer], inputs, out: np.ndarray, grad: np.ndarray):
    """Backprop through ``layers``; ``out`` is the stack output, needed for the last ReLU mask."""
    grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.spec.activation == "relu":
            post = out if i == len(layers) - 1 else inputs[i + 1]
            grad = grad * (post > 0)
        grads[i] = (inputs[i].T @ grad, grad.sum(axis=0))
        grad = grad @ layer.W.T
    return grads, grad


def forward(model: ViewModel, X) -> ForwardResult:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ValueError(f"expected batch with {model.input_dim} columns, got {X.shape}")
    H, enc_in = _stack_forward(model.encoder, X)
    Hhat, proj_in = _stack_forward(model.projection, H)
    Xrec, dec_in = _stack_forward(model.decoder, H)
    for name, arr in (("H", H), ("Hhat", Hhat), ("Xrec", Xrec)):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError(f"non-finite activations in {name}")
    tape = {"encoder": enc_in, "projection": proj_in, "decoder": dec_in,
            "H": H, "Hhat": Hhat, "Xrec": Xrec}
    return ForwardResult(H, Hhat, Xrec, tape)


def encode(model: ViewModel, X, batch_size: int = 1024) -> tuple[np.ndarray, np.ndarray]:
    """(H, Hhat) for a full matrix, evaluated in chunks."""
    Hs, Hhats = [], []
    X = np.asarray(X, dtype=np.float64)
    for start in range(0, X.shape[0], batch_size):
        H, _ = _stack_forward(model.encoder, X[start:start + batch_size])
        Hhat, _ = _stack_forward(model.projection, H)
        Hs.append(H)
        Hhats.append(Hhat)
    return np.vstack(Hs), np.vstack(Hhats)


def backward(model: ViewModel, tape: dict, grad_Hhat=None, grad_Xrec=None) -> list[np.ndarray]:
    """Parameter gradients, aligned with ``model.parameters()``.

    ``None`` for an output gradient means that output does not enter the loss.
    """
    b = tape["H"].shape[0]
    grad_H = np.zeros_like(tape["H"])
    zero = lambda layers: [(np.zeros_like(l.W), np.zeros_like(l.b)) for l in layers]  # noqa: E731

    if grad_Hhat is not None:
        grad_Hhat = np.asarray(grad_Hhat, dtype=np.float64)
        if grad_Hhat.shape != (b, model.hhat_dim):
            raise ValueError(f"grad_Hhat shape {grad_Hhat.shape} != {(b, model.hhat_dim)}")
        proj_grads, g = _stack_backward(model.projection, tape["projection"], tape["Hhat"], grad_Hhat)
        grad_H += g
    else:
        proj_grads = zero(model.projection)

    if grad_Xrec is not None:
        grad_Xrec = np.asarray(grad_Xrec, dtype=np.float64)
        if grad_Xrec.shape != (b, model.input_dim):
            raise ValueError(f"grad_Xrec shape {grad_Xrec.shape} != {(b, model.input_dim)}")
        dec_grads, g = _stack_backward(model.decoder, tape["decoder"], tape["Xrec"], grad_Xrec)
        grad_H += g
    else:
        dec_grads = zero(model.decoder)

    enc_grads, _ = _stack_backward(model.encoder, tape["encoder"], tape["H"], grad_H)
    flat = []
    for grads in (enc_grads, proj_grads, dec_grads):
        for gW, gb in grads:
            flat.extend((gW, gb))
    return flat


def adam_step(model: ViewModel, gradients: list[np.ndarray], config: AdamConfig) -> ViewModel:
    """In-place bias-corrected Adam update; returns ``model`` for chaining."""
    params = model.parameters()
    if len(gradients) != len(params):
        raise ValueError("gradients are not aligned with parameters")
    for g in gradients:
        if not np.all(np.isfinite(g)):
            raise NonFiniteError("non-finite gradient")
    model.step += 1
    t = model.step
    b1, b2, lr, eps = config.beta1, config.beta2, config.learning_rate, config.epsilon
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    for p, g, m, v in zip(params, gradients, model.adam_m, model.adam_v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return model


# -- checkpoints ------------------------------------------------------------

def _model_meta(model: ViewModel) -> dict:
    return {
        name: [[l.spec.in_dim, l.spec.out_dim, l.spec.activation] for l in layers]
        for name, layers in model.stacks().items()
    } | {"step": model.step}


def save_checkpoint(path, models: list[ViewModel], config: dict | None = None) -> None:
    """Write all view models (parameters + Adam state) and a config snapshot to ``.npz``."""
    arrays = {}
    for v, model in enumerate(models):
        names = model.parameter_names()
        for name, p, m, s in zip(names, model.parameters(), model.adam_m, model.adam_v):
            arrays[f"v{v}/{name}"] = p
            arrays[f"v{v}/{name}/adam_m"] = m
            arrays[f"v{v}/{name}/adam_v"] = s
    meta = {"format": "dwcl-checkpoint-1", "views": [_model_meta(m) for m in models],
            "config": config or {}}
    arrays["__meta__"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path) -> tuple[list[ViewModel], dict]:
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode())
        models = []
        for v, vmeta in enumerate(meta["views"]):
            stacks = {}
            for name in SECTIONS:
                layers = []
                for i, (din, dout, act) in enumerate(vmeta[name]):
                    layers.append(Layer(LayerSpec(din, dout, act),
                                        data[f"v{v}/{name}.{i}.W"].copy(),
                                        data[f"v{v}/{name}.{i}.b"].copy()))
                stacks[name] = layers
            model = ViewModel(**stacks, step=vmeta["step"])
            model.adam_m = [data[f"v{v}/{n}/adam_m"].copy() for n in model.parameter_names()]
            model.adam_v = [data[f"v{v}/{n}/adam_v"].copy() for n in model.parameter_names()]
            models.append(model)
    return models, meta["config"]
