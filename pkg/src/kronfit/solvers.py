"""Fitting the linear model and the small MLP baseline.

The complex-encoding linear model is fit either in closed form (one
regularized least-squares solve per axis, chained as mode products) or
by full-batch gradient descent through `kron_predict`.  The simple
encoding baseline is a ReLU MLP with hand-written backpropagation; a
depth of 0 degenerates to a plain linear layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .encoding import BlendingMatrix, SeparableEncoding, kron_predict
from .exceptions import DivergenceError, ParameterError, RankDeficiencyError
from . import tensorfile

# opt-in pseudo-inverse cutoff and the rank-deficiency detector operate on
# singular values of the per-axis encoding, relative to the largest
PINV_RCOND = 1e-10


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ParameterError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


# --- linear model on complex encodings -----------------------------------------


@dataclass
class WeightTensor:
    """Weights of the linear model: one K_1 x ... x K_D tensor per channel.

    ``weights`` has shape ``(channels, K_1, ..., K_D)``; ``bias`` has
    shape ``(channels,)`` and stays zero unless the fit asked for it.
    """

    weights: np.ndarray
    bias: np.ndarray
    fit_bias: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.bias.shape != (self.weights.shape[0],):
            raise ParameterError("need exactly one bias per channel")
        if not np.all(np.isfinite(self.weights)) or not np.all(np.isfinite(self.bias)):
            raise ParameterError("weights must be finite")

    @property
    def channels(self) -> int:
        return self.weights.shape[0]

    @property
    def tensor_shape(self) -> tuple[int, ...]:
        return self.weights.shape[1:]

    @property
    def parameter_count(self) -> int:
        count = self.weights.size
        if self.fit_bias:
            count += self.bias.size
        return count

    def save(self, path) -> None:
        tensorfile.write_tensors(path, [self.weights, self.bias])

    @classmethod
    def load(cls, path) -> "WeightTensor":
        arrays = tensorfile.read_tensors(path)
        if len(arrays) != 2:
            raise ValueError("weight files hold two records: weights then bias")
        return cls(weights=arrays[0], bias=arrays[1])


def _as_channel_grids(targets, grid_shape: tuple[int, ...]) -> np.ndarray:
    """Normalize targets to shape (channels, *grid_shape)."""
    values = np.asarray(getattr(targets, "values", targets), dtype=np.float64)
    if values.shape == grid_shape:
        return values[None]
    if values.shape[:-1] == grid_shape and values.ndim == len(grid_shape) + 1:
        return np.moveaxis(values, -1, 0)
    raise ParameterError(
        f"target shape {values.shape} does not match grid {grid_shape} (plus optional channels)"
    )


def _axis_solve_operators(enc: SeparableEncoding, ridge: float, pinv: bool) -> list[np.ndarray]:
    ops = []
    for axis, mat in enumerate(enc.per_axis):
        rows = mat.T  # (N, K) point-per-row encoding
        if pinv:
            ops.append(np.linalg.pinv(rows, rcond=PINV_RCOND))
            continue
        gram = mat @ rows
        if ridge == 0.0:
            sv = np.linalg.svd(rows, compute_uv=False)
            if rows.shape[0] < rows.shape[1] or sv[-1] <= PINV_RCOND * sv[0]:
                raise RankDeficiencyError(
                    axis, f"singular value ratio {sv[-1] / sv[0]:.3e} at ridge 0"
                )
        else:
            gram = gram + ridge * np.eye(gram.shape[0])
        try:
            factor = scipy.linalg.cho_factor(gram)
        except scipy.linalg.LinAlgError as exc:
            raise RankDeficiencyError(axis, str(exc)) from exc
        ops.append(scipy.linalg.cho_solve(factor, mat))
    return ops


def _mode_chain(tensor: np.ndarray, mats) -> np.ndarray:
    # contract the leading axis with each matrix's second axis in turn
    out = tensor
    for mat in mats:
        out = np.tensordot(out, mat, axes=([0], [1]))
    return out


def closed_form_fit(enc: SeparableEncoding, targets, ridge: float = 1e-8,
                    pinv: bool = False) -> WeightTensor:
    """Analytic least-squares fit of the linear model on a separable grid.

    Applies ``(Psi Psi^T + ridge I)^{-1} Psi`` along every mode of the
    target grid.  At ``ridge == 0`` this is the exact least-squares
    optimum; a numerically singular axis raises `RankDeficiencyError`
    naming the axis.  Pass ``pinv=True`` to fall back to the min-norm
    pseudo-inverse solution with cutoff ``1e-10 * s1`` (the ridge is not
    applied on that path).
    """
    if ridge < 0:
        raise ParameterError("ridge must be nonnegative")
    grids = _as_channel_grids(targets, enc.grid_shape)
    ops = _axis_solve_operators(enc, ridge, pinv)
    weights = np.stack([_mode_chain(grid, ops) for grid in grids])
    return WeightTensor(weights=weights, bias=np.zeros(weights.shape[0]))


def _grid_adjoint(resid: np.ndarray, enc: SeparableEncoding) -> np.ndarray:
    return _mode_chain(resid, enc.per_axis)


def _default_linear_lr(enc: SeparableEncoding, blend, n_train: int, fit_bias: bool) -> float:
    if blend is None:
        lam = 1.0
        for mat in enc.per_axis:
            lam *= float(np.linalg.eigvalsh(mat @ mat.T)[-1])
    else:
        rng = np.random.default_rng(0)
        w = rng.standard_normal(enc.feature_shape)
        w /= np.linalg.norm(w)
        lam = 0.0
        for _ in range(60):
            grid = kron_predict(w, enc)
            pred = blend.matrix @ grid.ravel(order="F")
            back = (blend.matrix.T @ pred).reshape(enc.grid_shape, order="F")
            w_next = _grid_adjoint(back, enc)
            lam = float(np.linalg.norm(w_next))
            if lam == 0.0:
                break
            w = w_next / lam
    if fit_bias:
        lam += n_train  # ||[Phi 1]||^2 <= ||Phi||^2 + n
    lipschitz = 2.0 * lam / n_train
    return 1.0 / lipschitz if lipschitz > 0 else 1.0


def gd_fit_linear(enc: SeparableEncoding, targets, lr: float | None = None,
                  epochs: int = 1000, seed: int = 0, blend: BlendingMatrix | None = None,
                  fit_bias: bool = False, init: str = "zeros"):
    """Full-batch gradient descent on the complex-encoding linear model.

    Separable targets are a grid; pass ``blend`` to fit scattered samples
    through the blending matrix.  The default learning rate is set from
    the exact Lipschitz constant of the quadratic loss, which makes the
    loss non-increasing; a non-finite or increasing loss aborts with
    `DivergenceError`.

    Returns ``(WeightTensor, losses)`` with one loss entry per epoch.
    """
    if lr is not None and lr <= 0:
        raise ParameterError("lr must be positive")
    if epochs < 1:
        raise ParameterError("epochs must be at least 1")
    if blend is None:
        targets_c = _as_channel_grids(targets, enc.grid_shape)
    else:
        values = np.asarray(getattr(targets, "values", targets), dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != blend.shape[0]:
            raise ParameterError("targets must have one row per blended query")
        targets_c = values.T
    channels = targets_c.shape[0]
    n_train = targets_c[0].size

    if lr is None:
        lr = _default_linear_lr(enc, blend, n_train, fit_bias)

    rng = np.random.default_rng(seed)
    if init == "zeros":
        weights = np.zeros((channels,) + enc.feature_shape)
    elif init == "normal":
        weights = 1e-3 * rng.standard_normal((channels,) + enc.feature_shape)
    else:
        raise ParameterError("init must be 'zeros' or 'normal'")
    bias = np.zeros(channels)

    losses = np.empty(epochs)
    prev = math.inf
    for epoch in range(epochs):
        total = 0.0
        for ch in range(channels):
            grid = kron_predict(weights[ch], enc)
            if blend is None:
                resid = grid + bias[ch] - targets_c[ch]
                grad_w = (2.0 / n_train) * _grid_adjoint(resid, enc)
            else:
                pred = blend.matrix @ grid.ravel(order="F") + bias[ch]
                resid = pred - targets_c[ch]
                back = (blend.matrix.T @ resid).reshape(enc.grid_shape, order="F")
                grad_w = (2.0 / n_train) * _grid_adjoint(back, enc)
            total += float(np.mean(resid**2))
            weights[ch] -= lr * grad_w
            if fit_bias:
                bias[ch] -= lr * 2.0 * float(np.mean(resid))
        loss = total / channels
        if not math.isfinite(loss):
            raise DivergenceError(epoch, "non-finite loss")
        if loss > prev * (1.0 + 1e-9):
            raise DivergenceError(epoch, "loss increased; lower the learning rate")
        losses[epoch] = loss
        prev = loss
    return WeightTensor(weights=weights, bias=bias, fit_bias=fit_bias), losses


def predict_grid(model: WeightTensor, enc: SeparableEncoding) -> np.ndarray:
    """Linear-model predictions on the whole grid, shape (*grid, channels)."""
    grids = [kron_predict(w, enc) + b for w, b in zip(model.weights, model.bias)]
    return np.stack(grids, axis=-1)


def predict_samples(model: WeightTensor, enc: SeparableEncoding,
                    blend: BlendingMatrix) -> np.ndarray:
    """Linear-model predictions at blended query points, shape (P, channels)."""
    cols = []
    for w, b in zip(model.weights, model.bias):
        grid = kron_predict(w, enc)
        cols.append(blend.matrix @ grid.ravel(order="F") + b)
    return np.stack(cols, axis=-1)


# --- small MLP with manual backpropagation --------------------------------------


@dataclass
class MlpModel:
    """Fully connected ReLU network; ``depth`` counts hidden layers."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    depth: int
    width: int
    seed: int
    optimizer: str = "gd"
    loss_curve: np.ndarray | None = field(default=None, repr=False)

    @property
    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def predict(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.weights[0].shape[0]:
            raise ParameterError(
                f"features must be (n, {self.weights[0].shape[0]}), got {features.shape}"
            )
        act = features
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            act = np.maximum(act @ w + b, 0.0)
        return act @ self.weights[-1] + self.biases[-1]


def _init_mlp(n_in: int, n_out: int, depth: int, width: int, seed: int) -> MlpModel:
    rng = np.random.default_rng(seed)
    sizes = [n_in] + [width] * depth + [n_out]
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights=weights, biases=biases, depth=depth, width=width, seed=seed)


def _mlp_forward_cached(model: MlpModel, features: np.ndarray):
    acts = [features]
    for w, b in zip(model.weights[:-1], model.biases[:-1]):
        acts.append(np.maximum(acts[-1] @ w + b, 0.0))
    out = acts[-1] @ model.weights[-1] + model.biases[-1]
    return out, acts


def _mlp_backward(model: MlpModel, acts, grad_out: np.ndarray):
    grads_w = [None] * len(model.weights)
    grads_b = [None] * len(model.biases)
    delta = grad_out
    for layer in range(len(model.weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (acts[layer] > 0.0)
    return grads_w, grads_b


def mlp_loss_and_grads(model: MlpModel, features: np.ndarray, targets: np.ndarray):
    """Mean-squared-error loss and its exact gradients for every parameter."""
    out, acts = _mlp_forward_cached(model, features)
    resid = out - targets
    loss = float(np.mean(resid**2))
    grad_out = (2.0 / resid.size) * resid
    grads_w, grads_b = _mlp_backward(model, acts, grad_out)
    return loss, grads_w, grads_b


def mlp_train(features: np.ndarray, targets: np.ndarray, depth: int, width: int,
              lr: float, epochs: int, seed: int = 0, optimizer: str = "gd") -> MlpModel:
    """Train a ReLU MLP by full-batch gradient descent with manual backprop.

    ``depth`` is the hidden-layer count (0 trains a plain linear layer).
    Initialization is He-style uniform from ``seed``, so runs are
    bit-reproducible.  ``optimizer`` is plain ``gd`` by default; ``adam``
    applies the usual per-parameter moment scaling.  A non-finite loss
    raises `DivergenceError` with the epoch index.
    """
    if depth < 0:
        raise ParameterError("depth must be nonnegative")
    if width < 1 and depth > 0:
        raise ParameterError("width must be positive")
    if lr <= 0:
        raise ParameterError("lr must be positive")
    if epochs < 1:
        raise ParameterError("epochs must be at least 1")
    if optimizer not in ("gd", "adam"):
        raise ParameterError("optimizer must be 'gd' or 'adam'")

    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    if features.ndim != 2 or features.shape[0] != targets.shape[0]:
        raise ParameterError("features and targets must agree on the sample count")

    model = _init_mlp(features.shape[1], targets.shape[1], depth, max(width, 1), seed)
    if optimizer == "adam":
        m_w = [np.zeros_like(w) for w in model.weights]
        v_w = [np.zeros_like(w) for w in model.weights]
        m_b = [np.zeros_like(b) for b in model.biases]
        v_b = [np.zeros_like(b) for b in model.biases]
        beta1, beta2, eps = 0.9, 0.999, 1e-8

    losses = np.empty(epochs)
    for epoch in range(epochs):
        loss, grads_w, grads_b = mlp_loss_and_grads(model, features, targets)
        if not math.isfinite(loss):
            raise DivergenceError(epoch, "non-finite loss")
        losses[epoch] = loss
        if optimizer == "gd":
            for layer in range(len(model.weights)):
                model.weights[layer] -= lr * grads_w[layer]
                model.biases[layer] -= lr * grads_b[layer]
        else:
            t = epoch + 1
            for layer in range(len(model.weights)):
                for param, grad, m, v in (
                    (model.weights[layer], grads_w[layer], m_w[layer], v_w[layer]),
                    (model.biases[layer], grads_b[layer], m_b[layer], v_b[layer]),
                ):
                    m *= beta1
                    m += (1 - beta1) * grad
                    v *= beta2
                    v += (1 - beta2) * grad**2
                    m_hat = m / (1 - beta1**t)
                    v_hat = v / (1 - beta2**t)
                    param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    model.loss_curve = losses
    return model


def mlp_gradient_check(model: MlpModel, features: np.ndarray, targets: np.ndarray,
                       h: float = 1e-5) -> float:
    """Worst relative error between backprop and central finite differences.

    The error of one parameter tensor is
    ``||analytic - numeric|| / max(||analytic||, ||numeric||)``.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 1:
        targets = targets[:, None]
    _, grads_w, grads_b = mlp_loss_and_grads(model, features, targets)

    def loss_at() -> float:
        out = model.predict(features)
        return float(np.mean((out - targets) ** 2))

    worst = 0.0
    for params, grads in ((model.weights, grads_w), (model.biases, grads_b)):
        for param, grad in zip(params, grads):
            numeric = np.empty_like(param)
            flat = param.ravel()
            num_flat = numeric.ravel()
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + h
                up = loss_at()
                flat[i] = keep - h
                down = loss_at()
                flat[i] = keep
                num_flat[i] = (up - down) / (2.0 * h)
            denom = max(np.linalg.norm(grad), np.linalg.norm(numeric), 1e-12)
            worst = max(worst, float(np.linalg.norm(grad - numeric) / denom))
    return worst


def predict(model, features=None, *, enc=None, blend=None):
    """Forward evaluation for either model family.

    MLPs take a feature matrix; weight tensors take an encoding (grid
    predictions) or an encoding plus a blending matrix (scattered
    predictions).
    """
    if isinstance(model, MlpModel):
        if features is None:
            raise ParameterError("MLP prediction requires features")
        return model.predict(features)
    if isinstance(model, WeightTensor):
        if enc is None:
            raise ParameterError("linear-model prediction requires an encoding")
        if blend is None:
            return predict_grid(model, enc)
        return predict_samples(model, enc, blend)
    raise ParameterError(f"cannot predict with {type(model).__name__}")
