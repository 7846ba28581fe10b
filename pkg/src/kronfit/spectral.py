"""Stable rank and distance preservation, measured and in closed form.

The two quantities that govern an encoder are the stable rank of its
embedding matrix (memorization capacity) and the decay of the inner
product between embedded coordinates with their separation
(generalization).  This module measures both from matrices and evaluates
the known closed forms for the Gaussian, rectangle, triangle, sine and
random-Fourier encoders.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .embedders import Embedder, embed_batch, embed_scalar
from .exceptions import ParameterError

# singular values below RANK_RTOL * s1 count as zero
RANK_RTOL = 1e-8

# base positions averaged by empirical_distance in wrap mode
_WRAP_BASE_POSITIONS = 32


@dataclass(frozen=True)
class SpectralReport:
    """Spectrum summary of one embedding matrix."""

    stable_rank: float
    numerical_rank: int
    singular_values: np.ndarray
    gram: np.ndarray

    def __post_init__(self):
        s = self.singular_values
        if np.any(np.diff(s) > 0):
            raise ValueError("singular values must be sorted descending")
        if self.stable_rank > self.numerical_rank + 1e-9:
            raise ValueError("stable rank cannot exceed numerical rank")
        if not np.allclose(self.gram, self.gram.T, atol=1e-10):
            raise ValueError("gram matrix must be symmetric")


def singular_values(matrix: np.ndarray) -> np.ndarray:
    return np.linalg.svd(np.asarray(matrix, dtype=np.float64), compute_uv=False)


def stable_rank_from_singular_values(s: np.ndarray) -> float:
    s2 = s * s
    top = s2[0]
    if top == 0.0:
        raise ParameterError("stable rank of an all-zero matrix is undefined")
    return float(np.sum(s2) / top)


def numerical_rank_from_singular_values(s: np.ndarray, rtol: float = RANK_RTOL) -> int:
    if s.size == 0 or s[0] == 0.0:
        raise ParameterError("numerical rank of an all-zero matrix is undefined")
    return int(np.count_nonzero(s > rtol * s[0]))


def stable_rank(matrix: np.ndarray) -> float:
    """Squared Frobenius norm over squared spectral norm, via the spectrum."""
    return stable_rank_from_singular_values(singular_values(matrix))


def spectral_report(matrix: np.ndarray, scale: float = 1.0) -> SpectralReport:
    """Full spectrum summary; ``scale`` is applied to the Gram entries.

    For an embedding matrix pass ``scale=embedder.sampling_interval`` so
    the Gram entries approximate the continuous inner products.
    """
    m = np.asarray(matrix, dtype=np.float64)
    s = singular_values(m)
    gram = scale * (m.T @ m)
    gram = 0.5 * (gram + gram.T)  # exact symmetry despite BLAS rounding
    return SpectralReport(
        stable_rank=stable_rank_from_singular_values(s),
        numerical_rank=numerical_rank_from_singular_values(s),
        singular_values=s,
        gram=gram,
    )


def circulant_spectrum(first_row: np.ndarray) -> np.ndarray:
    """Singular values of the circulant matrix with the given first row.

    They are the magnitudes of the discrete Fourier transform of the row,
    returned descending.  For wrap-mode shifted encoders on an aligned
    coordinate grid this reproduces the SVD spectrum without an SVD.
    """
    row = np.asarray(first_row, dtype=np.float64)
    if row.ndim != 1 or row.size == 0:
        raise ParameterError("first_row must be a nonempty 1D array")
    mags = np.abs(np.fft.fft(row))
    return np.sort(mags)[::-1]


def empirical_distance(e: Embedder, delta: float, d: int | None = None) -> float:
    """Riemann-sum estimate of the embedded inner product at separation ``delta``.

    Computes ``s * <Psi(x), Psi(x + delta)>`` with sampling interval
    ``s``.  In wrap mode the result is averaged over 32 base positions
    (coordinates wrap around the domain); in clip mode the pair is
    centered in the domain and evaluated once.
    """
    if not 0.0 <= delta <= e.domain_length:
        raise ParameterError("delta must lie in [0, domain_length]")
    if d is not None:
        e = e.with_num_features(d if e.is_shifted else d // 2)
    length = e.domain_length
    if e.boundary == "wrap":
        base = np.linspace(0.0, length, _WRAP_BASE_POSITIONS, endpoint=False)
        left = embed_batch(e, base)
        right = embed_batch(e, (base + delta) % length)
        dots = np.sum(left * right, axis=0)
        return float(e.sampling_interval * np.mean(dots))
    x = 0.5 * (length - delta)
    dot = float(embed_scalar(e, x) @ embed_scalar(e, x + delta))
    return e.sampling_interval * dot


def theoretical_stable_rank(e: Embedder, n: int) -> float:
    """Closed-form stable rank of an embedding matrix over ``n`` coordinates.

    gauss ``1/(2 sqrt(pi) sigma)``, rff ``sqrt(2 pi) sigma``, rect
    ``1/sigma``, tri ``4/(3 sigma)``, sine ``2``; each capped at ``n``.
    The rff value is additionally floored at 1 since the stable rank of
    any nonzero matrix is at least 1 (the formula assumes a frequency
    spread much wider than the unit observation window).
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if e.kind == "gauss":
        value = 1.0 / (2.0 * math.sqrt(math.pi) * e.width_sigma)
    elif e.kind == "rff":
        value = max(1.0, math.sqrt(2.0 * math.pi) * e.freq_sigma)
    elif e.kind == "rect":
        value = 1.0 / e.width_sigma
    elif e.kind == "tri":
        value = 4.0 / (3.0 * e.width_sigma)
    elif e.kind == "sine":
        value = 2.0
    else:
        raise ParameterError(f"no closed-form stable rank for kind {e.kind!r}")
    return min(float(n), value)


def theoretical_distance(e: Embedder, delta: float) -> float:
    """Closed-form embedded distance ``D(delta)`` for the supported kinds.

    gauss ``sqrt(pi) sigma exp(-delta^2 / (4 sigma^2))``;
    rect ``sigma max(1 - delta/sigma, 0)``;
    tri ``sigma^2/4 max(1 - delta/sigma, 0)^2``;
    rff ``sqrt(2 pi) sigma exp(-2 pi^2 sigma^2 delta^2)`` (expectation
    over the frequency distribution, not the frozen draw).
    """
    if delta < 0:
        raise ParameterError("delta must be nonnegative")
    if e.kind == "gauss":
        s = e.width_sigma
        return math.sqrt(math.pi) * s * math.exp(-(delta * delta) / (4.0 * s * s))
    if e.kind == "rect":
        s = e.width_sigma
        return s * max(1.0 - delta / s, 0.0)
    if e.kind == "tri":
        s = e.width_sigma
        return 0.25 * s * s * max(1.0 - delta / s, 0.0) ** 2
    if e.kind == "rff":
        s = e.freq_sigma
        return math.sqrt(2.0 * math.pi) * s * math.exp(-2.0 * (math.pi * s * delta) ** 2)
    raise ParameterError(f"no closed-form distance for kind {e.kind!r}")
