"""
Dense feed-forward networks with exact reverse-mode gradients, built on numpy.

A ``DenseNet`` is a list of affine layers, each followed by an activation,
plus an optional terminal transform (softmax over three classes or a
sigmoid). ``logits`` stops before the terminal transform; losses are computed
from logits for numerical stability.
"""

import copy
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, softmax

from forge.exceptions import WidthMismatchError

logger = logging.getLogger("forge.neural")


class Activation(str, Enum):
    RELU = "relu"
    ARCTAN = "arctan"
    IDENTITY = "identity"

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        if self is Activation.ARCTAN:
            return np.arctan(z)
        return z

    def derivative(self, z: np.ndarray) -> np.ndarray:
        if self is Activation.RELU:
            return (z > 0).astype(z.dtype)
        if self is Activation.ARCTAN:
            return 1.0 / (1.0 + z * z)
        return np.ones_like(z)


class Terminal(str, Enum):
    NONE = "none"
    SOFTMAX3 = "softmax3"
    SIGMOID = "sigmoid"

    def apply(self, z: np.ndarray) -> np.ndarray:
        if self is Terminal.SOFTMAX3:
            return softmax(z, axis=-1)
        if self is Terminal.SIGMOID:
            return expit(z)
        return z


@dataclass
class Layer:
    weight: np.ndarray  # (out, in)
    bias: Optional[np.ndarray]
    activation: Activation = Activation.IDENTITY

    @property
    def in_width(self) -> int:
        return self.weight.shape[1]

    @property
    def out_width(self) -> int:
        return self.weight.shape[0]

    def affine(self, x: np.ndarray) -> np.ndarray:
        z = x @ self.weight.T
        return z + self.bias if self.bias is not None else z


@dataclass
class ForwardCache:
    inputs: List[np.ndarray] = field(default_factory=list)
    pre: List[np.ndarray] = field(default_factory=list)


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


class DenseNet:
    """Stack of affine layers with activations and an optional terminal transform."""

    def __init__(self, layers: List[Layer], terminal: Terminal = Terminal.NONE) -> None:
        if not layers:
            raise ValueError("a network needs at least one layer")
        for before, after in zip(layers, layers[1:]):
            if before.out_width != after.in_width:
                raise WidthMismatchError(
                    "consecutive layer widths differ",
                    {"out": before.out_width, "in": after.in_width},
                )
        self.layers = layers
        self.terminal = Terminal(terminal)

    @classmethod
    def build(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        hidden: Activation = Activation.RELU,
        output: Activation = Activation.IDENTITY,
        bias: bool = True,
        terminal: Terminal = Terminal.NONE,
    ) -> "DenseNet":
        """Glorot-uniform weights, zero biases; ``sizes`` lists every width from input to output."""
        if len(sizes) < 2:
            raise ValueError("sizes needs an input and an output width")
        layers = []
        for position, (fan_in, fan_out) in enumerate(zip(sizes, sizes[1:])):
            last = position == len(sizes) - 2
            layers.append(
                Layer(
                    weight=glorot_uniform(fan_in, fan_out, rng),
                    bias=np.zeros(fan_out) if bias else None,
                    activation=output if last else hidden,
                )
            )
        return cls(layers, terminal)

    @classmethod
    def odd(cls, sizes: Sequence[int], rng: np.random.Generator) -> "DenseNet":
        """Bias-free arctan network with a linear last layer and sigmoid terminal; odd before the sigmoid."""
        return cls.build(
            sizes, rng, hidden=Activation.ARCTAN, output=Activation.IDENTITY, bias=False, terminal=Terminal.SIGMOID
        )

    @property
    def is_odd(self) -> bool:
        return (
            all(layer.bias is None for layer in self.layers)
            and all(layer.activation == Activation.ARCTAN for layer in self.layers[:-1])
            and self.layers[-1].activation == Activation.IDENTITY
        )

    @property
    def input_width(self) -> int:
        return self.layers[0].in_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].out_width

    def _as_batch(self, x: np.ndarray) -> Tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        batch = x[None, :] if single else x
        if batch.shape[-1] != self.input_width:
            raise WidthMismatchError(
                "input width does not match the network",
                {"expected": self.input_width, "got": batch.shape[-1]},
            )
        return batch, single

    def logits(self, x: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
        "Output before the terminal transform, plus what ``backward`` needs."
        h, single = self._as_batch(x)
        cache = ForwardCache()
        for layer in self.layers:
            cache.inputs.append(h)
            z = layer.affine(h)
            cache.pre.append(z)
            h = layer.activation.apply(z)
        return (h[0] if single else h), cache

    def forward(self, x: np.ndarray) -> np.ndarray:
        out, _ = self.logits(x)
        return self.terminal.apply(out)

    __call__ = forward

    def backward(
        self, cache: ForwardCache, grad_out: np.ndarray
    ) -> Tuple[List[Tuple[np.ndarray, Optional[np.ndarray]]], np.ndarray]:
        """
        Gradients of a scalar loss given its gradient w.r.t. ``logits`` output.

        Returns per-layer (dW, db) pairs and the gradient w.r.t. the input batch.
        """
        grad = np.asarray(grad_out, dtype=np.float64)
        single = grad.ndim == 1
        if single:
            grad = grad[None, :]
        grads: List[Tuple[np.ndarray, Optional[np.ndarray]]] = [None] * len(self.layers)  # type: ignore[list-item]
        for index in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[index]
            grad_z = grad * layer.activation.derivative(cache.pre[index])
            d_weight = grad_z.T @ cache.inputs[index]
            d_bias = grad_z.sum(axis=0) if layer.bias is not None else None
            grads[index] = (d_weight, d_bias)
            grad = grad_z @ layer.weight
        return grads, (grad[0] if single else grad)

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for layer in self.layers:
            params.append(layer.weight)
            if layer.bias is not None:
                params.append(layer.bias)
        return params

    @staticmethod
    def flatten_grads(grads: List[Tuple[np.ndarray, Optional[np.ndarray]]]) -> List[np.ndarray]:
        "Gradients in the same order as ``parameters()``."
        flat: List[np.ndarray] = []
        for d_weight, d_bias in grads:
            flat.append(d_weight)
            if d_bias is not None:
                flat.append(d_bias)
        return flat

    def copy(self) -> "DenseNet":
        return copy.deepcopy(self)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "terminal": self.terminal.value,
            "layers": [
                {
                    "shape": list(layer.weight.shape),
                    "weights": layer.weight.ravel().tolist(),
                    "bias": None if layer.bias is None else layer.bias.tolist(),
                    "activation": layer.activation.value,
                }
                for layer in self.layers
            ],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DenseNet":
        layers = []
        for entry in data["layers"]:
            rows, cols = entry["shape"]
            layers.append(
                Layer(
                    weight=np.asarray(entry["weights"], dtype=np.float64).reshape(rows, cols),
                    bias=None if entry["bias"] is None else np.asarray(entry["bias"], dtype=np.float64),
                    activation=Activation(entry["activation"]),
                )
            )
        return cls(layers, Terminal(data.get("terminal", "none")))

    def __repr__(self) -> str:
        widths = [self.input_width] + [layer.out_width for layer in self.layers]
        return f"DenseNet(widths={widths}, terminal={self.terminal.value})"


def extract_nfp(net: DenseNet) -> DenseNet:
    """Drop the final affine layer of a trained network, keeping the hidden representation."""
    if len(net.layers) < 2:
        raise ValueError("feature extraction needs a network with at least two layers")
    return DenseNet(copy.deepcopy(net.layers[:-1]), Terminal.NONE)


class Adam:
    """Adam optimiser updating parameter arrays in place."""

    def __init__(
        self,
        params: List[np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ) -> None:
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = [np.zeros_like(p) for p in params]
        self._v = [np.zeros_like(p) for p in params]

    def step(self, grads: Sequence[np.ndarray], lr: Optional[float] = None) -> None:
        rate = self.lr if lr is None else lr
        self.step_count += 1
        correction1 = 1.0 - self.beta1**self.step_count
        correction2 = 1.0 - self.beta2**self.step_count
        for param, grad, m, v in zip(self.params, grads, self._m, self._v):
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            param -= rate * (m / correction1) / (np.sqrt(v / correction2) + self.eps)


def epoch_learning_rate(base: float, decay: float, floor: float, epoch: int) -> float:
    "Exponential decay per epoch, never below ``floor``."
    return max(base * decay**epoch, floor)
