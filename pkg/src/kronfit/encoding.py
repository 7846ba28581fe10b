"""Simple and complex multi-dimensional encodings.

A point in D dimensions is encoded either by concatenating the per-axis
1D encodings (*simple*) or by their Kronecker/outer product (*complex*).
On a separable grid the complex encoding never needs to be materialized:
a chain of mode products evaluates the linear model directly.  Scattered
query points are connected to a virtual grid through a sparse blending
matrix whose weights generalize linear interpolation to the encoder's
own similarity function.

vec ordering convention: tensors are flattened column-major with axis 0
fastest, so ``vec(outer(u, v)) == kron(v, u)`` and grid predictions
raveled with ``order="F"`` line up with the blending matrix columns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .embedders import Embedder, embed_batch, embed_scalar
from .exceptions import DegenerateSpacingError, OutOfDomainError, ParameterError
from .spectral import theoretical_distance

# complex_encode refuses to materialize vectors longer than this
MAX_DENSE_PRODUCT = 2**26

_DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class SeparableEncoding:
    """Per-axis embedding matrices over a separable coordinate grid.

    ``per_axis[i]`` has shape ``(K_i, N_i)`` with one column per grid
    coordinate in ``axis_grids[i]``.
    """

    embedders: tuple[Embedder, ...]
    per_axis: tuple[np.ndarray, ...]
    axis_grids: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.embedders) == len(self.per_axis) == len(self.axis_grids)) or not self.per_axis:
            raise ParameterError("encoding needs one embedder, matrix and grid per axis")
        for mat, grid in zip(self.per_axis, self.axis_grids):
            if mat.shape[1] != grid.size:
                raise ParameterError("embedding matrix columns must match grid length")

    @property
    def ndim(self) -> int:
        return len(self.per_axis)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return tuple(g.size for g in self.axis_grids)

    @property
    def feature_shape(self) -> tuple[int, ...]:
        return tuple(m.shape[0] for m in self.per_axis)


def encode_grid(embedders, axis_grids) -> SeparableEncoding:
    """Embed every axis of a separable grid."""
    embedders = tuple(embedders)
    grids = tuple(np.asarray(g, dtype=np.float64) for g in axis_grids)
    if len(embedders) != len(grids):
        raise ParameterError("need exactly one embedder per grid axis")
    mats = tuple(embed_batch(e, g) for e, g in zip(embedders, grids))
    return SeparableEncoding(embedders=embedders, per_axis=mats, axis_grids=grids)


def grid_points(axis_grids) -> np.ndarray:
    """All grid coordinates as a ``(prod N_i, D)`` array, axis 0 fastest."""
    grids = [np.asarray(g, dtype=np.float64) for g in axis_grids]
    mesh = np.meshgrid(*grids, indexing="ij")
    return np.stack([m.ravel(order="F") for m in mesh], axis=1)


def simple_encode(embedders, point) -> np.ndarray:
    """Concatenation of the per-axis encodings of one point."""
    point = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if len(embedders) != point.size:
        raise ParameterError("point dimension must match the number of embedders")
    return np.concatenate([embed_scalar(e, x) for e, x in zip(embedders, point)])


def simple_features(embedders, points) -> np.ndarray:
    """Simple encoding of many points, one row per point."""
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if points.shape[1] != len(embedders):
        raise ParameterError("points must have one column per embedder")
    blocks = [embed_batch(e, points[:, i]).T for i, e in enumerate(embedders)]
    return np.concatenate(blocks, axis=1)


def complex_encode(embedders, point) -> np.ndarray:
    """Kronecker-product encoding of one point, flattened axis-0-fastest.

    Intended for spot checks and scattered queries; grid evaluation
    should go through `kron_predict`, which never materializes the
    product.  Refuses products longer than ``2**26``.
    """
    point = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if len(embedders) != point.size:
        raise ParameterError("point dimension must match the number of embedders")
    total = math.prod(e.output_length for e in embedders)
    if total > MAX_DENSE_PRODUCT:
        raise ParameterError(
            f"dense product of length {total} exceeds 2**26; "
            "use the separable grid path instead"
        )
    out = np.ones(1, dtype=np.float64)
    for e, x in zip(embedders, point):
        # kron(new, old): earlier axes stay fastest
        out = np.multiply.outer(embed_scalar(e, x), out).ravel()
    return out


def kron_predict(weights: np.ndarray, enc: SeparableEncoding) -> np.ndarray:
    """Evaluate the linear model on the whole grid by successive mode products.

    ``weights`` has shape ``(K_1, ..., K_D)``; the result has the grid
    shape ``(N_1, ..., N_D)``.  Equivalent to multiplying the flattened
    weights with the full Kronecker matrix, up to rounding.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != enc.feature_shape:
        raise ParameterError(
            f"weight shape {weights.shape} does not match encoding features {enc.feature_shape}"
        )
    out = weights
    for mat in enc.per_axis:
        # contract the leading K axis, append the new N axis at the back
        out = np.tensordot(out, mat, axes=([0], [0]))
    return out


def _gauss_wrap_distance(delta: float, sigma: float, length: float) -> float:
    # periodized closed form; wrap-mode inner products see every image
    total = 0.0
    for k in range(-3, 4):
        total += theoretical_distance_gauss(delta + k * length, sigma)
    return total


def theoretical_distance_gauss(delta: float, sigma: float) -> float:
    return math.sqrt(math.pi) * sigma * math.exp(-(delta * delta) / (4.0 * sigma * sigma))


def interp_weights(e: Embedder, x0: float, x1: float, x: float) -> tuple[float, float]:
    """Least-squares coefficients expressing ``Psi(x)`` by its two neighbors.

    Solves the 2x2 normal equations of ``min ||Psi(x) - a0 Psi(x0) -
    a1 Psi(x1)||``.  For wrap-mode Gaussian encoders the Gram entries
    come from the (periodized) closed-form distance; every other kind
    uses the sampled vectors directly, which keeps the result the exact
    least-squares minimizer regardless of kind.
    """
    if not x0 < x1:
        raise ParameterError("x0 must be strictly less than x1")
    if not x0 <= x <= x1:
        raise ParameterError("x must lie in [x0, x1]")

    if e.kind == "gauss" and e.boundary == "wrap":
        d = x1 - x0
        beta = (x - x0) / d
        d00 = _gauss_wrap_distance(0.0, e.width_sigma, e.domain_length)
        d01 = _gauss_wrap_distance(d, e.width_sigma, e.domain_length)
        rhs = np.array(
            [
                _gauss_wrap_distance(beta * d, e.width_sigma, e.domain_length),
                _gauss_wrap_distance((1.0 - beta) * d, e.width_sigma, e.domain_length),
            ]
        )
        gram = np.array([[d00, d01], [d01, d00]])
    else:
        v0 = embed_scalar(e, x0)
        v1 = embed_scalar(e, x1)
        vx = embed_scalar(e, x)
        gram = np.array([[v0 @ v0, v0 @ v1], [v1 @ v0, v1 @ v1]])
        rhs = np.array([v0 @ vx, v1 @ vx])

    det = gram[0, 0] * gram[1, 1] - gram[0, 1] * gram[1, 0]
    scale = max(gram[0, 0] * gram[1, 1], gram[0, 1] * gram[1, 0])
    if abs(det) <= _DEGENERATE_RTOL * scale:
        raise DegenerateSpacingError(
            f"interpolation system is singular for spacing {x1 - x0!r} (D(0) = +-D(d))"
        )
    a0 = (gram[1, 1] * rhs[0] - gram[0, 1] * rhs[1]) / det
    a1 = (gram[0, 0] * rhs[1] - gram[1, 0] * rhs[0]) / det
    return float(a0), float(a1)


@dataclass(frozen=True)
class BlendingMatrix:
    """Sparse interpolation operator from a virtual grid to query points.

    Rows are queries, columns enumerate the grid flattened axis-0-fastest
    (matching ``kron_predict(...).ravel(order="F")``).  At most ``2**D``
    entries per row.
    """

    matrix: sp.csr_matrix
    grid_shape: tuple[int, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def max_nonzeros_per_row(self) -> int:
        counts = np.diff(self.matrix.indptr)
        return int(counts.max()) if counts.size else 0

    def apply(self, grid_values: np.ndarray) -> np.ndarray:
        """Interpolate grid values (grid shape or flat, trailing axes kept)."""
        flat = np.asarray(grid_values, dtype=np.float64)
        if flat.ndim >= len(self.grid_shape) and flat.shape[: len(self.grid_shape)] == self.grid_shape:
            flat = flat.reshape(self.matrix.shape[1], -1, order="F")
            out = self.matrix @ flat
            return out[:, 0] if out.shape[1] == 1 else out
        return self.matrix @ flat

    def triples(self) -> np.ndarray:
        """Entries as (row, col, weight) rows, sorted by row then column."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.stack(
            [coo.row[order].astype(np.float64), coo.col[order].astype(np.float64), coo.data[order]],
            axis=1,
        )

    def to_csv(self, path) -> None:
        np.savetxt(path, self.triples(), fmt=["%d", "%d", "%.17g"], delimiter=",",
                   header="row,col,weight", comments="")


def build_blending(enc: SeparableEncoding, queries: np.ndarray) -> BlendingMatrix:
    """Assemble the sparse blending matrix for scattered query points.

    Each query is located in its enclosing grid cell; per-axis weights
    come from `interp_weights` and are tensor-multiplied over the
    ``2**D`` cell corners.  Queries on the final grid line are assigned
    to the last cell with offset 1; queries outside the grid raise
    `OutOfDomainError`.
    """
    queries = np.asarray(queries, dtype=np.float64)
    if queries.ndim == 1:
        queries = queries[:, None]
    ndim = enc.ndim
    if queries.shape[1] != ndim:
        raise ParameterError(f"queries must have {ndim} columns")
    grids = enc.axis_grids
    for axis, grid in enumerate(grids):
        lo, hi = grid[0], grid[-1]
        bad = (queries[:, axis] < lo) | (queries[:, axis] > hi)
        if np.any(bad):
            raise OutOfDomainError(
                f"{int(bad.sum())} queries outside [{lo}, {hi}] on axis {axis}; no extrapolation"
            )

    n_corners = 1 << ndim
    rows = np.empty(queries.shape[0] * n_corners, dtype=np.int64)
    cols = np.empty_like(rows)
    vals = np.empty(rows.shape, dtype=np.float64)
    dims = enc.grid_shape

    pos = 0
    for p, q in enumerate(queries):
        lower_idx = np.empty(ndim, dtype=np.int64)
        axis_w = np.empty((ndim, 2), dtype=np.float64)
        for axis, grid in enumerate(grids):
            j = int(np.searchsorted(grid, q[axis], side="right")) - 1
            j = min(max(j, 0), grid.size - 2)
            lower_idx[axis] = j
            a0, a1 = interp_weights(enc.embedders[axis], grid[j], grid[j + 1], q[axis])
            axis_w[axis] = (a0, a1)
        for corner in range(n_corners):
            bits = [(corner >> axis) & 1 for axis in range(ndim)]
            w = 1.0
            for axis, bit in enumerate(bits):
                w *= axis_w[axis, bit]
            idx = lower_idx + np.asarray(bits)
            rows[pos] = p
            cols[pos] = int(np.ravel_multi_index(tuple(idx), dims, order="F"))
            vals[pos] = w
            pos += 1

    matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(queries.shape[0], int(np.prod(dims)))
    )
    matrix.eliminate_zeros()
    matrix.sort_indices()
    return BlendingMatrix(matrix=matrix, grid_shape=dims)
