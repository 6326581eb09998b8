"""Dense feed-forward binary classifiers with exact analytic gradients.

Everything is plain float64 numpy. A network maps a feature row to two
logits (one per class); reverse mode gives gradients with respect to both
parameters and inputs, which downstream code needs for distance-to-boundary
terms. Adam and JSON serialization live here too so a trained model is a
single self-contained artifact.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "NetworkError",
    "NonFiniteGradientError",
    "NetworkConfig",
    "Network",
    "ForwardTrace",
    "ParamGrads",
    "AdamState",
    "init_network",
    "forward",
    "softmax2",
    "backward",
    "predict",
    "predict_from_logits",
    "init_adam",
    "optimizer_step",
    "network_to_dict",
    "network_from_dict",
    "save_network",
    "load_network",
]

SERIAL_FORMAT = "fairmargin-network-v1"


class NetworkError(ValueError):
    """Invalid configuration, mismatched shapes, or non-finite values."""


class NonFiniteGradientError(RuntimeError):
    """A gradient contained NaN or inf; the update was refused."""


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture and optimizer hyperparameters.

    ``layer_widths`` runs input -> hidden ... -> output. At least one hidden
    layer is required and the output width is always 2 (one logit per class).
    """

    layer_widths: tuple[int, ...]
    activation: str = "relu"
    seed: int = 0
    learning_rate: float = 0.001

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 3:
            raise NetworkError(
                f"layer_widths must be [input, hidden..., 2] with at least one "
                f"hidden layer, got {widths}"
            )
        if any(w <= 0 for w in widths):
            raise NetworkError(f"layer widths must be positive, got {widths}")
        if widths[-1] != 2:
            raise NetworkError(f"output width must be 2, got {widths[-1]}")
        if self.activation != "relu":
            raise NetworkError(f"unsupported activation {self.activation!r}")
        lr = float(self.learning_rate)
        object.__setattr__(self, "learning_rate", lr)
        if not (math.isfinite(lr) and lr > 0):
            raise NetworkError(f"learning_rate must be positive and finite, got {lr}")
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class Network:
    """Immutable parameter set; optimizer steps return a new instance."""

    config: NetworkConfig
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        widths = self.config.layer_widths
        if len(self.weights) != len(widths) - 1 or len(self.biases) != len(widths) - 1:
            raise NetworkError("one weight matrix and bias vector per layer expected")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[k], widths[k + 1]) or b.shape != (widths[k + 1],):
                raise NetworkError(
                    f"layer {k}: expected shapes {(widths[k], widths[k + 1])} / "
                    f"{(widths[k + 1],)}, got {w.shape} / {b.shape}"
                )
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise NetworkError(f"layer {k} contains non-finite parameters")

    @property
    def input_width(self) -> int:
        return self.config.layer_widths[0]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class ForwardTrace:
    """Intermediate values of one forward pass, kept for reverse mode.

    ``pre_activations[k]`` is the input to the k-th relu; ``hidden[k]`` is its
    output. ``logits`` has one row per input row, two columns.
    """

    inputs: np.ndarray
    pre_activations: tuple[np.ndarray, ...]
    hidden: tuple[np.ndarray, ...]
    logits: np.ndarray


@dataclass(frozen=True)
class ParamGrads:
    """Gradient arrays matching a network's weights and biases."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


def init_network(config: NetworkConfig) -> Network:
    """Draw He-uniform weights (limit sqrt(6/fan_in)) and zero biases.

    The draw order is fixed, so equal configs give identical parameters.
    """
    rng = np.random.default_rng(config.seed)
    widths = config.layer_widths
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return Network(config=config, weights=tuple(weights), biases=tuple(biases))


def _as_batch(net: Network, batch) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_width:
        raise NetworkError(
            f"batch must be (n, {net.input_width}), got shape {x.shape}"
        )
    if not np.isfinite(x).all():
        raise NetworkError("batch contains non-finite values")
    return x


def forward(net: Network, batch) -> ForwardTrace:
    """Run the network on a batch of rows, keeping intermediates."""
    x = _as_batch(net, batch)
    a = x
    pre = []
    hid = []
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ w + b
        pre.append(z)
        a = np.maximum(z, 0.0)
        hid.append(a)
    logits = a @ net.weights[-1] + net.biases[-1]
    if not np.isfinite(logits).all():
        raise NetworkError("forward pass produced non-finite logits")
    return ForwardTrace(
        inputs=x, pre_activations=tuple(pre), hidden=tuple(hid), logits=logits
    )


def softmax2(g0, g1):
    """Two-way softmax with max subtraction; safe for logits up to +-1e308.

    Accepts scalars or equal-shaped arrays, returns (f0, f1) of matching
    shape with f0 + f1 == 1 up to rounding.
    """
    a0 = np.asarray(g0, dtype=np.float64)
    a1 = np.asarray(g1, dtype=np.float64)
    if not (np.isfinite(a0).all() and np.isfinite(a1).all()):
        raise NetworkError("softmax2 requires finite logits")
    m = np.maximum(a0, a1)
    e0 = np.exp(a0 - m)
    e1 = np.exp(a1 - m)
    s = e0 + e1
    f0, f1 = e0 / s, e1 / s
    if np.isscalar(g0) and np.isscalar(g1):
        return float(f0), float(f1)
    return f0, f1


def backward(net: Network, trace: ForwardTrace, logit_grads) -> tuple[ParamGrads, np.ndarray]:
    """Reverse mode from upstream logit gradients.

    Returns gradients for every parameter plus the gradient with respect to
    the input rows. relu contributes subgradient 0 at exactly 0.
    """
    g = np.asarray(logit_grads, dtype=np.float64)
    if g.shape != trace.logits.shape:
        raise NetworkError(
            f"logit_grads shape {g.shape} does not match logits {trace.logits.shape}"
        )
    acts = (trace.inputs,) + trace.hidden
    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    d = g
    for k in range(len(net.weights) - 1, -1, -1):
        grads_w[k] = acts[k].T @ d
        grads_b[k] = d.sum(axis=0)
        d = d @ net.weights[k].T
        if k > 0:
            d = d * (trace.pre_activations[k - 1] > 0)
    return ParamGrads(weights=tuple(grads_w), biases=tuple(grads_b)), d


def predict_from_logits(logits) -> np.ndarray:
    """Argmax over the two columns; exact ties resolve to class 0."""
    g = np.asarray(logits, dtype=np.float64)
    return (g[:, 1] > g[:, 0]).astype(np.int64)


def predict(net: Network, batch) -> np.ndarray:
    return predict_from_logits(forward(net, batch).logits)


@dataclass(frozen=True)
class AdamState:
    """First/second moment accumulators; step counts completed updates."""

    step: int
    m_weights: tuple[np.ndarray, ...]
    v_weights: tuple[np.ndarray, ...]
    m_biases: tuple[np.ndarray, ...]
    v_biases: tuple[np.ndarray, ...]


def init_adam(net: Network) -> AdamState:
    zw = tuple(np.zeros_like(w) for w in net.weights)
    zb = tuple(np.zeros_like(b) for b in net.biases)
    return AdamState(
        step=0,
        m_weights=zw,
        v_weights=tuple(np.zeros_like(w) for w in net.weights),
        m_biases=zb,
        v_biases=tuple(np.zeros_like(b) for b in net.biases),
    )


def optimizer_step(
    net: Network,
    grads: ParamGrads,
    state: AdamState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Network, AdamState]:
    """One Adam update; returns the new network and state, inputs untouched.

    Refuses non-finite gradients rather than poisoning the parameters.
    Zero gradients leave the parameters bit-identical.
    """
    for arr in (*grads.weights, *grads.biases):
        if not np.isfinite(arr).all():
            raise NonFiniteGradientError("gradient contains NaN or inf")

    t = state.step + 1
    lr = net.config.learning_rate
    corr1 = 1.0 - beta1**t
    corr2 = 1.0 - beta2**t

    def update(params, gs, ms, vs):
        new_p, new_m, new_v = [], [], []
        for p, g, m, v in zip(params, gs, ms, vs):
            m = beta1 * m + (1.0 - beta1) * g
            v = beta2 * v + (1.0 - beta2) * g * g
            step_val = lr * (m / corr1) / (np.sqrt(v / corr2) + eps)
            new_p.append(p - step_val)
            new_m.append(m)
            new_v.append(v)
        return tuple(new_p), tuple(new_m), tuple(new_v)

    w, mw, vw = update(net.weights, grads.weights, state.m_weights, state.v_weights)
    b, mb, vb = update(net.biases, grads.biases, state.m_biases, state.v_biases)
    new_net = replace(net, weights=w, biases=b)
    new_state = AdamState(step=t, m_weights=mw, v_weights=vw, m_biases=mb, v_biases=vb)
    return new_net, new_state


def network_to_dict(net: Network, optimizer_step_count: int = 0) -> dict:
    """Versioned JSON-ready document: config, row-major layers, step count."""
    return {
        "format": SERIAL_FORMAT,
        "config": {
            "layer_widths": list(net.config.layer_widths),
            "activation": net.config.activation,
            "seed": net.config.seed,
            "learning_rate": net.config.learning_rate,
        },
        "layers": [
            {"weights": w.tolist(), "bias": b.tolist()}
            for w, b in zip(net.weights, net.biases)
        ],
        "optimizer_step": int(optimizer_step_count),
    }


def network_from_dict(doc: dict) -> tuple[Network, int]:
    if doc.get("format") != SERIAL_FORMAT:
        raise NetworkError(
            f"unrecognized serialization format {doc.get('format')!r}; "
            f"expected {SERIAL_FORMAT!r}"
        )
    cfg = doc["config"]
    config = NetworkConfig(
        layer_widths=tuple(cfg["layer_widths"]),
        activation=cfg["activation"],
        seed=cfg["seed"],
        learning_rate=cfg["learning_rate"],
    )
    weights = tuple(np.asarray(layer["weights"], dtype=np.float64) for layer in doc["layers"])
    biases = tuple(np.asarray(layer["bias"], dtype=np.float64) for layer in doc["layers"])
    return Network(config=config, weights=weights, biases=biases), int(doc["optimizer_step"])


def save_network(net: Network, path, optimizer_step_count: int = 0) -> Path:
    path = Path(path)
    path.write_text(json.dumps(network_to_dict(net, optimizer_step_count)))
    return path


def load_network(path) -> tuple[Network, int]:
    return network_from_dict(json.loads(Path(path).read_text()))
