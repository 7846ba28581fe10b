"""One-dimensional positional encoders.

Two families are supported.  *Shifted* encoders sample a pulse or wave
``psi(t - x)`` at the equidistant grid ``t_i = i * s`` with sampling
interval ``s = domain_length / num_features``; the coordinate ``x`` only
shifts the pulse.  *Frequency* encoders map ``x`` through cosine/sine
pairs whose frequencies form a linear ladder (``linf``), a geometric
ladder (``logf``), or are drawn once from a Gaussian and frozen (``rff``).

All evaluation is pure and in float64; an `Embedder` is immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ParameterError

SHIFTED_KINDS = ("impulse", "rect", "tri", "sine", "square", "gauss")
FOURIER_KINDS = ("linf", "logf", "rff")
ALL_KINDS = SHIFTED_KINDS + FOURIER_KINDS

BOUNDARY_MODES = ("wrap", "clip")

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class Embedder:
    """Frozen description of a 1D positional encoder.

    Attributes
    ----------
    kind : str
        One of ``impulse, rect, tri, sine, square, gauss, linf, logf, rff``.
    width_sigma : float
        Pulse width / standard deviation for the shifted kinds (total
        support for ``rect``/``tri``, std-dev for ``gauss``).  Unused by
        ``sine``/``square`` and the frequency kinds.
    freq_sigma : float
        For ``linf``/``logf`` the maximum frequency exponent (ladder runs
        from ``2**0`` toward ``2**freq_sigma``); for ``rff`` the std-dev
        of the sampled frequencies.
    num_features : int
        Number of ``t`` samples for shifted kinds; number of frequency
        pairs for the Fourier kinds (output length is doubled there).
    domain_length : float
        Length ``C`` of the coordinate domain ``[0, C]``.
    boundary : str
        ``wrap`` evaluates shifted pulses on the circle of circumference
        ``C`` (matches the circulant analysis); ``clip`` evaluates them on
        the line so pulses attenuate at the edges.
    wave_freq : float
        Angular frequency of the ``sine``/``square`` waves; the default
        ``2*pi`` gives one period per unit length.
    rff_frequencies : ndarray or None
        Frequencies frozen at construction for ``rff`` (sorted ascending).
    rng_seed : int
        Seed used to draw ``rff_frequencies``.
    """

    kind: str
    width_sigma: float = 0.0
    freq_sigma: float = 0.0
    num_features: int = 1
    domain_length: float = 1.0
    boundary: str = "wrap"
    wave_freq: float = TWO_PI
    rff_frequencies: np.ndarray | None = field(default=None, repr=False)
    rng_seed: int = 0

    @property
    def is_shifted(self) -> bool:
        return self.kind in SHIFTED_KINDS

    @property
    def output_length(self) -> int:
        """Length of one embedded vector: d for shifted kinds, 2K for Fourier pairs."""
        return self.num_features if self.is_shifted else 2 * self.num_features

    @property
    def sampling_interval(self) -> float:
        """Spacing of the t-grid (also used as the Riemann weight of inner products)."""
        if self.is_shifted:
            return self.domain_length / self.num_features
        return self.domain_length / self.output_length

    @property
    def pulse_width(self) -> float:
        """Effective pulse width: one sampling interval for the impulse kind."""
        if self.kind == "impulse":
            return self.sampling_interval
        return self.width_sigma

    def frequencies(self) -> np.ndarray:
        """Frequency ladder (cycles per unit coordinate) of a Fourier-kind embedder."""
        k = self.num_features
        i = np.arange(k, dtype=np.float64)
        if self.kind == "linf":
            return 1.0 + (i / k) * (2.0 ** self.freq_sigma - 1.0)
        if self.kind == "logf":
            return 2.0 ** (self.freq_sigma * i / k)
        if self.kind == "rff":
            return self.rff_frequencies
        raise ParameterError(f"{self.kind} embedder has no frequency ladder")

    def with_num_features(self, num_features: int) -> "Embedder":
        """Same embedder re-sampled with a different feature count."""
        return make_embedder(
            self.kind,
            width_sigma=self.width_sigma,
            freq_sigma=self.freq_sigma,
            num_features=num_features,
            domain_length=self.domain_length,
            boundary=self.boundary,
            wave_freq=self.wave_freq,
            seed=self.rng_seed,
        )


def make_embedder(
    kind: str,
    *,
    width_sigma: float = 0.0,
    freq_sigma: float = 0.0,
    num_features: int,
    domain_length: float = 1.0,
    boundary: str = "wrap",
    wave_freq: float = TWO_PI,
    seed: int = 0,
) -> Embedder:
    """Validate parameters and build a frozen `Embedder`.

    For ``rff``, ``num_features`` frequencies are drawn from
    ``Normal(0, freq_sigma**2)`` using ``seed`` and sorted ascending, so
    repeated construction with the same arguments is bit-identical.
    """
    if kind not in ALL_KINDS:
        raise ParameterError(f"unknown embedder kind {kind!r}; expected one of {ALL_KINDS}")
    if num_features < 1:
        raise ParameterError("num_features must be a positive integer")
    if domain_length <= 0:
        raise ParameterError("domain_length must be positive")
    if boundary not in BOUNDARY_MODES:
        raise ParameterError(f"boundary must be one of {BOUNDARY_MODES}")

    if kind in ("rect", "tri", "gauss") and width_sigma <= 0:
        raise ParameterError(f"{kind} embedder requires width_sigma > 0")
    if kind in ("sine", "square") and wave_freq <= 0:
        raise ParameterError(f"{kind} embedder requires wave_freq > 0")
    if kind in FOURIER_KINDS and freq_sigma <= 0:
        raise ParameterError(f"{kind} embedder requires freq_sigma > 0")

    frequencies = None
    if kind == "rff":
        rng = np.random.default_rng(seed)
        frequencies = np.sort(rng.normal(0.0, freq_sigma, size=num_features))
        frequencies.setflags(write=False)

    return Embedder(
        kind=kind,
        width_sigma=float(width_sigma),
        freq_sigma=float(freq_sigma),
        num_features=int(num_features),
        domain_length=float(domain_length),
        boundary=boundary,
        wave_freq=float(wave_freq),
        rff_frequencies=frequencies,
        rng_seed=int(seed),
    )


def _wrap_offsets(delta: np.ndarray, length: float) -> np.ndarray:
    # nearest periodic image; result lies in [-length/2, length/2]
    return delta - length * np.round(delta / length)


def _shifted_values(e: Embedder, delta: np.ndarray) -> np.ndarray:
    if e.kind == "gauss":
        return np.exp(-0.5 * (delta / e.width_sigma) ** 2)
    if e.kind == "tri":
        return np.maximum(1.0 - np.abs(delta) / (0.5 * e.width_sigma), 0.0)
    if e.kind in ("rect", "impulse"):
        w = e.pulse_width
        # half-open support keeps the impulse a true one-hot for every x
        return np.where((delta >= -0.5 * w) & (delta < 0.5 * w), 1.0, 0.0)
    if e.kind == "sine":
        return np.sin(e.wave_freq * delta)
    if e.kind == "square":
        # phase arithmetic instead of sign(sin(.)) so half-period shifts
        # negate exactly even where the sine would round to +-0
        cycles = delta * (e.wave_freq / TWO_PI)
        frac = cycles - np.floor(cycles)
        return np.where(frac < 0.5, 1.0, -1.0)
    raise ParameterError(f"not a shifted kind: {e.kind}")


def embed_batch(e: Embedder, xs: np.ndarray) -> np.ndarray:
    """Embed many coordinates at once.

    Parameters
    ----------
    e : Embedder
    xs : array_like
        1D array of coordinates.  Values outside ``[0, domain_length]``
        are accepted with a `UserWarning`; NaN/inf are rejected.

    Returns
    -------
    ndarray
        Matrix of shape ``(output_length, len(xs))`` whose column ``j``
        is the embedding of ``xs[j]``.
    """
    xs = np.asarray(xs, dtype=np.float64)
    if xs.ndim != 1:
        raise ParameterError("xs must be one-dimensional")
    if xs.size == 0:
        raise ParameterError("xs must not be empty")
    if not np.all(np.isfinite(xs)):
        raise ParameterError("coordinates must be finite")
    if np.any(xs < 0.0) or np.any(xs > e.domain_length):
        warnings.warn(
            f"coordinates outside [0, {e.domain_length}] embedded without wrapping/clipping",
            stacklevel=2,
        )

    if e.is_shifted:
        t = np.arange(e.num_features, dtype=np.float64) * e.sampling_interval
        delta = t[:, None] - xs[None, :]
        if e.boundary == "wrap":
            delta = _wrap_offsets(delta, e.domain_length)
        return _shifted_values(e, delta)

    freqs = e.frequencies()
    phase = TWO_PI * freqs[:, None] * xs[None, :]
    cos, sin = np.cos(phase), np.sin(phase)
    out = np.empty((2 * e.num_features, xs.size), dtype=np.float64)
    if e.kind == "rff":
        out[: e.num_features] = cos
        out[e.num_features :] = sin
    else:
        out[0::2] = cos
        out[1::2] = sin
    return out


def embed_scalar(e: Embedder, x: float) -> np.ndarray:
    """Embed one coordinate; equals the corresponding `embed_batch` column exactly."""
    return embed_batch(e, np.asarray([x], dtype=np.float64))[:, 0]


# --- plain-text configuration -------------------------------------------------

_CONFIG_FIELDS = (
    "kind",
    "width_sigma",
    "freq_sigma",
    "num_features",
    "domain_length",
    "boundary",
    "wave_freq",
    "seed",
)


def embedder_to_config(e: Embedder) -> dict[str, str]:
    """Key-value form of an embedder (frequencies are regenerated from the seed)."""
    return {
        "kind": e.kind,
        "width_sigma": repr(e.width_sigma),
        "freq_sigma": repr(e.freq_sigma),
        "num_features": str(e.num_features),
        "domain_length": repr(e.domain_length),
        "boundary": e.boundary,
        "wave_freq": repr(e.wave_freq),
        "seed": str(e.rng_seed),
    }


def embedder_from_config(cfg) -> Embedder:
    """Build an embedder from a string key-value mapping (e.g. a configparser section)."""
    unknown = set(cfg) - set(_CONFIG_FIELDS)
    if unknown:
        raise ParameterError(f"unknown embedder config keys: {sorted(unknown)}")
    if "kind" not in cfg:
        raise ParameterError("embedder config requires a 'kind' entry")
    try:
        return make_embedder(
            cfg["kind"].strip().lower(),
            width_sigma=float(cfg.get("width_sigma", 0.0)),
            freq_sigma=float(cfg.get("freq_sigma", 0.0)),
            num_features=int(cfg.get("num_features", 1)),
            domain_length=float(cfg.get("domain_length", 1.0)),
            boundary=cfg.get("boundary", "wrap").strip().lower(),
            wave_freq=float(cfg.get("wave_freq", TWO_PI)),
            seed=int(cfg.get("seed", 0)),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParameterError):
            raise
        raise ParameterError(f"malformed embedder config value: {exc}") from exc
