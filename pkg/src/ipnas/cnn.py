"""Small self-contained CNN: forward/backward passes, Xavier init, SGD.

Tensors are plain numpy arrays shaped (batch, height, width, channels) for
image data and (batch, features) after flattening.  Convolution and pooling
use same-padding: the output spatial size is ceil(input / stride), achieved
by zero-padding split evenly (extra cell on the bottom/right).  Average
pooling divides by the number of in-bounds cells per window, and max
pooling ignores padding cells, so padding never leaks into the statistics.

Gradients are computed by reverse accumulation layer by layer; each layer
caches what its backward pass needs during forward.  A rectified linear
unit follows every convolution and every hidden fully-connected layer, and
none follows the output layer.
"""

import math

import numpy as np
from numpy.lib.stride_tricks import as_strided

from .codec import Architecture, ConvSpec, FcSpec, PoolSpec, PoolType
from .errors import NumericError, RangeError, ShapeError


def _same_pad(size: int, window: int, stride: int) -> tuple[int, int]:
    """Output length and total padding for one spatial axis."""
    out = math.ceil(size / stride)
    total = max((out - 1) * stride + window - size, 0)
    return out, total


def _pad_spatial(x: np.ndarray, window: int, stride: int, value: float):
    b, h, w, c = x.shape
    out_h, pad_h = _same_pad(h, window, stride)
    out_w, pad_w = _same_pad(w, window, stride)
    top, left = pad_h // 2, pad_w // 2
    padded = np.pad(
        x,
        ((0, 0), (top, pad_h - top), (left, pad_w - left), (0, 0)),
        constant_values=value,
    )
    return padded, out_h, out_w, top, left


def _windows(padded: np.ndarray, window: int, stride: int, out_h: int, out_w: int):
    """Strided view (b, out_h, out_w, window, window, c); no copy."""
    b, _, _, c = padded.shape
    s0, s1, s2, s3 = padded.strides
    return as_strided(
        padded,
        (b, out_h, out_w, window, window, c),
        (s0, s1 * stride, s2 * stride, s1, s2, s3),
    )


def _require_4d(x: np.ndarray, who: str):
    if x.ndim != 4:
        raise ShapeError(f"{who} expects a 4-D input, got shape {x.shape}")


class ConvLayer:
    """Same-padding convolution; weights shaped (f, f, c_in, c_out)."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray, stride: int):
        if weights.ndim != 4 or weights.shape[0] != weights.shape[1]:
            raise ShapeError(f"conv weights must be (f, f, c_in, c_out), got {weights.shape}")
        if bias.shape != (weights.shape[3],):
            raise ShapeError(f"conv bias must be ({weights.shape[3]},), got {bias.shape}")
        if not 1 <= stride <= 4:
            raise RangeError(f"conv stride must be in [1, 4], got {stride}")
        self.weights = weights
        self.bias = bias
        self.stride = stride
        self.grad_weights = None
        self.grad_bias = None
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _require_4d(x, "conv")
        f = self.weights.shape[0]
        if x.shape[3] != self.weights.shape[2]:
            raise ShapeError(
                f"conv expects {self.weights.shape[2]} input channels, got {x.shape[3]}"
            )
        padded, out_h, out_w, top, left = _pad_spatial(x, f, self.stride, 0.0)
        win = _windows(padded, f, self.stride, out_h, out_w)
        out = np.tensordot(win, self.weights, axes=([3, 4, 5], [0, 1, 2]))
        out += self.bias
        self._cache = (x.shape, padded, out_h, out_w, top, left)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_shape, padded, out_h, out_w, top, left = self._cache
        f = self.weights.shape[0]
        stride = self.stride
        win = _windows(padded, f, stride, out_h, out_w)
        self.grad_weights = np.tensordot(win, dout, axes=([0, 1, 2], [0, 1, 2]))
        self.grad_bias = dout.sum(axis=(0, 1, 2))
        dpadded = np.zeros_like(padded)
        for kh in range(f):
            for kw in range(f):
                dpadded[
                    :, kh : kh + out_h * stride : stride, kw : kw + out_w * stride : stride, :
                ] += dout @ self.weights[kh, kw].T
        _, h, w, _ = x_shape
        return dpadded[:, top : top + h, left : left + w, :]

    def params(self):
        return [self.weights, self.bias]

    def grads(self):
        return [self.grad_weights, self.grad_bias]


class PoolLayer:
    """Same-padding max or average pooling over square windows."""

    def __init__(self, kernel: int, stride: int, pool_type: PoolType):
        if not 1 <= kernel <= 4:
            raise RangeError(f"pool kernel must be in [1, 4], got {kernel}")
        if not 1 <= stride <= 4:
            raise RangeError(f"pool stride must be in [1, 4], got {stride}")
        self.kernel = kernel
        self.stride = stride
        self.pool_type = pool_type
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        _require_4d(x, "pool")
        k, stride = self.kernel, self.stride
        if self.pool_type is PoolType.MAX:
            padded, out_h, out_w, top, left = _pad_spatial(x, k, stride, -np.inf)
            win = _windows(padded, k, stride, out_h, out_w)
            flat = win.reshape(win.shape[:3] + (k * k, win.shape[5]))
            argmax = flat.argmax(axis=3)
            out = np.take_along_axis(flat, argmax[:, :, :, None, :], axis=3)[
                :, :, :, 0, :
            ]
            self._cache = (x.shape, padded.shape, out_h, out_w, top, left, argmax)
            return out
        padded, out_h, out_w, top, left = _pad_spatial(x, k, stride, 0.0)
        win = _windows(padded, k, stride, out_h, out_w)
        counts = self._inbounds_counts(x.shape, x.dtype)
        out = win.sum(axis=(3, 4)) / counts
        self._cache = (x.shape, padded.shape, out_h, out_w, top, left, counts)
        return out

    def _inbounds_counts(self, x_shape, dtype):
        """Valid-cell count per window position, shaped (1, out_h, out_w, 1)."""
        ones = np.ones((1, x_shape[1], x_shape[2], 1), dtype=dtype)
        padded, oh, ow, _, _ = _pad_spatial(ones, self.kernel, self.stride, 0.0)
        win = _windows(padded, self.kernel, self.stride, oh, ow)
        return win.sum(axis=(3, 4))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        k, stride = self.kernel, self.stride
        if self.pool_type is PoolType.MAX:
            x_shape, padded_shape, out_h, out_w, top, left, argmax = self._cache
            dpadded = np.zeros(padded_shape, dtype=dout.dtype)
            for t in range(k * k):
                kh, kw = divmod(t, k)
                dpadded[
                    :, kh : kh + out_h * stride : stride, kw : kw + out_w * stride : stride, :
                ] += dout * (argmax == t)
        else:
            x_shape, padded_shape, out_h, out_w, top, left, counts = self._cache
            spread = dout / counts
            dpadded = np.zeros(padded_shape, dtype=dout.dtype)
            for kh in range(k):
                for kw in range(k):
                    dpadded[
                        :, kh : kh + out_h * stride : stride, kw : kw + out_w * stride : stride, :
                    ] += spread
        _, h, w, _ = x_shape
        return dpadded[:, top : top + h, left : left + w, :]

    def params(self):
        return []

    def grads(self):
        return []


class FlattenLayer:
    """(b, h, w, c) -> (b, h*w*c); inserted before the first FC layer."""

    def __init__(self):
        self._shape = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout.reshape(self._shape)

    def params(self):
        return []

    def grads(self):
        return []


class FcLayer:
    """Affine map; weights shaped (n_in, n_out)."""

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        if weights.ndim != 2 or bias.shape != (weights.shape[1],):
            raise ShapeError(
                f"fc expects weights (n_in, n_out) and bias (n_out,),"
                f" got {weights.shape} and {bias.shape}"
            )
        self.weights = weights
        self.bias = bias
        self.grad_weights = None
        self.grad_bias = None
        self._x = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2:
            raise ShapeError(f"fc expects a 2-D input, got shape {x.shape}")
        if x.shape[1] != self.weights.shape[0]:
            raise ShapeError(
                f"fc expects width {self.weights.shape[0]}, got {x.shape[1]}"
            )
        self._x = x
        return x @ self.weights + self.bias

    def backward(self, dout: np.ndarray) -> np.ndarray:
        self.grad_weights = self._x.T @ dout
        self.grad_bias = dout.sum(axis=0)
        return dout @ self.weights.T

    def params(self):
        return [self.weights, self.bias]

    def grads(self):
        return [self.grad_weights, self.grad_bias]


class ReluLayer:
    def __init__(self):
        self._mask = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask

    def params(self):
        return []

    def grads(self):
        return []


def conv_forward(x, weights, bias, stride) -> np.ndarray:
    """Pure convolution forward (no cache kept)."""
    return ConvLayer(weights, bias, stride).forward(x)


def pool_forward(x, kernel, stride, pool_type: PoolType) -> np.ndarray:
    """Pure pooling forward (no cache kept)."""
    return PoolLayer(kernel, stride, pool_type).forward(x)


def fc_forward(x, weights, bias) -> np.ndarray:
    """Pure affine forward (no cache kept)."""
    return FcLayer(weights, bias).forward(x)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy and its gradient with respect to the logits."""
    batch = logits.shape[0]
    probs = softmax(logits)
    loss = float(-np.log(probs[np.arange(batch), labels]).mean())
    dlogits = probs.copy()
    dlogits[np.arange(batch), labels] -= 1.0
    return loss, dlogits / batch


def xavier_uniform(shape, fan_in, fan_out, rng, dtype):
    bound = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


class Model:
    """An ordered stack of layers trained with softmax cross-entropy."""

    def __init__(self, layers: list, num_classes: int):
        self.layers = layers
        self.num_classes = num_classes
        self._velocities = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x)
        return x

    def backward(self, dlogits: np.ndarray) -> np.ndarray:
        d = dlogits
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return d

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x).argmax(axis=1)

    def params(self):
        return [p for layer in self.layers for p in layer.params()]

    def grads(self):
        return [g for layer in self.layers for g in layer.grads()]

    def sgd_step(self, lr: float, momentum: float):
        params = self.params()
        if self._velocities is None:
            self._velocities = [np.zeros_like(p) for p in params]
        for param, grad, vel in zip(params, self.grads(), self._velocities):
            vel *= momentum
            vel += grad
            param -= lr * vel


def backward_and_step(model: Model, batch, labels, lr: float, momentum: float) -> float:
    """One training step: forward, loss, reverse accumulation, SGD update."""
    labels = np.asarray(labels)
    if labels.min() < 0 or labels.max() >= model.num_classes:
        raise RangeError(
            f"labels must be in [0, {model.num_classes}), got"
            f" [{labels.min()}, {labels.max()}]"
        )
    logits = model.forward(batch)
    loss, dlogits = softmax_cross_entropy(logits, labels)
    if not math.isfinite(loss):
        raise NumericError(f"non-finite training loss: {loss}")
    model.backward(dlogits)
    if lr != 0.0:
        model.sgd_step(lr, momentum)
    return loss


def build_model(
    architecture: Architecture,
    input_height: int,
    input_width: int,
    input_channels: int = 1,
    rng: np.random.Generator | None = None,
    dtype=np.float64,
) -> Model:
    """Instantiate a model for an architecture with Xavier-initialized weights.

    Same-padding keeps every decoded architecture trainable: spatial sizes
    follow ceil(size / stride) and never collapse to zero.
    """
    rng = rng if rng is not None else np.random.default_rng()
    layers = []
    h, w, c = input_height, input_width, input_channels
    features = None
    for index, spec in enumerate(architecture.layers):
        is_last = index == len(architecture.layers) - 1
        if isinstance(spec, ConvSpec):
            f = spec.filter_size
            fan_in = f * f * c
            fan_out = f * f * spec.feature_maps
            weights = xavier_uniform((f, f, c, spec.feature_maps), fan_in, fan_out, rng, dtype)
            bias = np.zeros(spec.feature_maps, dtype=dtype)
            layers.append(ConvLayer(weights, bias, spec.stride))
            layers.append(ReluLayer())
            h = math.ceil(h / spec.stride)
            w = math.ceil(w / spec.stride)
            c = spec.feature_maps
        elif isinstance(spec, PoolSpec):
            layers.append(PoolLayer(spec.kernel, spec.stride, spec.pool_type))
            h = math.ceil(h / spec.stride)
            w = math.ceil(w / spec.stride)
        elif isinstance(spec, FcSpec):
            if features is None:
                layers.append(FlattenLayer())
                features = h * w * c
            weights = xavier_uniform((features, spec.neurons), features, spec.neurons, rng, dtype)
            bias = np.zeros(spec.neurons, dtype=dtype)
            layers.append(FcLayer(weights, bias))
            if not is_last:
                layers.append(ReluLayer())
            features = spec.neurons
        else:
            raise ShapeError(f"cannot build a layer for {spec!r}")
    return Model(layers, architecture.num_classes)
