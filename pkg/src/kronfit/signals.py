"""Target signals, train/test splits, image and tensor I/O, scoring.

A `GridSignal` lives on a separable grid with axis coordinates
normalized to [0, 1] (inclusive endpoints, ``i / (N - 1)``); a
`SampleSet` is a bag of scattered (coordinate, value) pairs.  Values are
kept in [0, 1] throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import ParameterError
from . import tensorfile

PSNR_CAP_DB = 99.0


def _unit_coords(n: int) -> np.ndarray:
    if n == 1:
        return np.zeros(1)
    return np.arange(n, dtype=np.float64) / (n - 1)


@dataclass(frozen=True)
class GridSignal:
    """Signal sampled on a separable grid; values shaped (*grid, channels)."""

    values: np.ndarray
    axes: tuple[np.ndarray, ...]

    def __post_init__(self):
        values = self.values
        if values.ndim != len(self.axes) + 1:
            raise ParameterError("values must carry a trailing channel axis")
        for axis, coords in enumerate(self.axes):
            if coords.size != values.shape[axis]:
                raise ParameterError(f"axis {axis} coordinate count mismatch")
            if np.any(np.diff(coords) <= 0):
                raise ParameterError(f"axis {axis} coordinates must be strictly increasing")
            if coords[0] < -1e-12 or coords[-1] > 1.0 + 1e-12:
                raise ParameterError("coordinates must lie in [0, 1]")
        if values.size and (values.min() < -1e-9 or values.max() > 1.0 + 1e-9):
            raise ParameterError("signal values must lie in [0, 1]")

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.values.shape[:-1]

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def ndim(self) -> int:
        return len(self.axes)


def make_grid_signal(values: np.ndarray, channels_last: bool = False) -> GridSignal:
    """Wrap a dense array as a grid signal with unit coordinates per axis.

    By default every array axis is spatial and a singleton channel axis
    is appended; pass ``channels_last=True`` when the input already
    carries channels in its final axis.
    """
    values = np.asarray(values, dtype=np.float64)
    if not channels_last:
        values = values[..., None]
    axes = tuple(_unit_coords(n) for n in values.shape[:-1])
    return GridSignal(values=np.clip(values, 0.0, 1.0), axes=axes)


@dataclass(frozen=True)
class SampleSet:
    """Scattered samples: coords (P, D) in [0, 1]^D, values (P, channels)."""

    coords: np.ndarray
    values: np.ndarray
    split: str = "train"

    def __post_init__(self):
        if self.coords.ndim != 2 or self.values.ndim != 2:
            raise ParameterError("coords and values must be 2D arrays")
        if self.coords.shape[0] != self.values.shape[0]:
            raise ParameterError("coords and values must have matching row counts")
        if self.coords.size and (self.coords.min() < -1e-12 or self.coords.max() > 1.0 + 1e-12):
            raise ParameterError("sample coordinates must lie in [0, 1]")

    def __len__(self) -> int:
        return self.coords.shape[0]


# --- image and raw-tensor ingest -------------------------------------------------


def load_image(path) -> GridSignal:
    """Load an 8- or 16-bit PNG (grayscale or RGB) scaled to [0, 1]."""
    try:
        img = Image.open(path)
        img.load()
    except Exception as exc:
        raise ParameterError(f"cannot read image {path}: {exc}") from exc
    arr = np.asarray(img)
    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype in (np.uint16, np.int32):
        if arr.min() < 0 or arr.max() > 65535:
            raise ParameterError(f"unsupported sample range in {path}")
        scale = 65535.0
    else:
        raise ParameterError(f"unsupported bit depth {arr.dtype} in {path}")
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ParameterError(f"expected grayscale or RGB image, got shape {arr.shape}")
    return make_grid_signal(arr.astype(np.float64) / scale, channels_last=True)


def save_image(values: np.ndarray, path) -> None:
    """Write values as an 8-bit PNG, clipped to [0, 1]."""
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if values.ndim == 2:
        values = values[:, :, None]
    if values.ndim != 3 or values.shape[2] not in (1, 3):
        raise ParameterError(f"expected (H, W) or (H, W, 1|3) values, got {values.shape}")
    raw = np.clip(values, 0.0, 1.0)
    data = np.round(raw * 255.0).astype(np.uint8)
    if data.shape[2] == 1:
        Image.fromarray(data[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")


def load_grid_tensor(path) -> GridSignal:
    """Load a raw KFT1 tensor file as a single-channel grid signal."""
    arr = tensorfile.read_tensor(path)
    return make_grid_signal(arr)


def save_grid_tensor(values: np.ndarray, path) -> None:
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    tensorfile.write_tensor(path, values)


def load_image_stack(directory) -> GridSignal:
    """Stack the PNG frames of a directory (sorted by name) into a 3D signal."""
    frames = sorted(Path(directory).glob("*.png"))
    if not frames:
        raise ParameterError(f"no PNG frames found in {directory}")
    loaded = [load_image(f) for f in frames]
    shapes = {sig.values.shape for sig in loaded}
    if len(shapes) != 1:
        raise ParameterError("all frames must share one shape")
    values = np.stack([sig.values for sig in loaded], axis=0)
    return make_grid_signal(values, channels_last=True)


# --- splits ----------------------------------------------------------------------


def grid_split(sig: GridSignal, stride: int) -> tuple[GridSignal, SampleSet]:
    """Keep every stride-th grid point per axis for training; rest is test.

    ``stride`` must be at least 2, strictly smaller than every axis
    length, and divide each axis evenly.
    """
    if stride < 2:
        raise ParameterError("stride must be at least 2")
    for axis, n in enumerate(sig.grid_shape):
        if stride >= n:
            raise ParameterError(f"stride {stride} too large for axis {axis} of size {n}")
        if n % stride != 0:
            raise ParameterError(f"stride {stride} does not divide axis {axis} of size {n}")

    keep = [np.arange(0, n, stride) for n in sig.grid_shape]
    train_values = sig.values[np.ix_(*keep)]
    train_axes = tuple(sig.axes[i][keep[i]] for i in range(sig.ndim))
    train = GridSignal(values=train_values, axes=train_axes)

    in_train = np.zeros(sig.grid_shape, dtype=bool)
    in_train[np.ix_(*keep)] = True
    test_idx = np.argwhere(~in_train)
    coords = np.stack(
        [sig.axes[d][test_idx[:, d]] for d in range(sig.ndim)], axis=1
    )
    values = sig.values[tuple(test_idx.T)]
    test = SampleSet(coords=coords, values=values, split="test")
    return train, test


def random_split(sig: GridSignal, fraction: float, seed: int) -> tuple[SampleSet, SampleSet]:
    """Seeded uniform split of the grid points into disjoint train/test sets."""
    if not 0.0 < fraction < 1.0:
        raise ParameterError("fraction must lie strictly between 0 and 1")
    total = int(np.prod(sig.grid_shape))
    n_train = int(round(fraction * total))
    n_train = min(max(n_train, 1), total - 1)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(total, size=n_train, replace=False))
    mask = np.zeros(total, dtype=bool)
    mask[chosen] = True

    all_idx = np.argwhere(np.ones(sig.grid_shape, dtype=bool))
    coords = np.stack([sig.axes[d][all_idx[:, d]] for d in range(sig.ndim)], axis=1)
    values = sig.values.reshape(total, sig.channels)

    train = SampleSet(coords=coords[mask], values=values[mask], split="train")
    test = SampleSet(coords=coords[~mask], values=values[~mask], split="test")
    return train, test


# --- scoring ---------------------------------------------------------------------


def psnr(pred: np.ndarray, target: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB with peak 1, capped at 99 dB."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ParameterError(f"shape mismatch: {pred.shape} vs {target.shape}")
    err = float(np.mean((pred - target) ** 2))
    if err == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, float(10.0 * np.log10(1.0 / err)))
