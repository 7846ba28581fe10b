import numpy as np
import pytest


def power_law_signal_1d(n: int, seed: int, slope: float = 1.0) -> np.ndarray:
    """1/f-spectrum noise rescaled to [0.05, 0.95]; a stand-in for a photo scanline."""
    rng = np.random.default_rng(seed)
    freqs = np.fft.rfftfreq(n, 1.0 / n)
    amp = np.where(freqs > 0, 1.0 / np.maximum(freqs, 1.0) ** slope, 0.0)
    spec = amp * (rng.standard_normal(freqs.size) + 1j * rng.standard_normal(freqs.size))
    sig = np.fft.irfft(spec, n)
    sig = (sig - sig.min()) / (sig.max() - sig.min())
    return 0.05 + 0.9 * sig


def power_law_image(n: int, seed: int, slope: float = 1.5) -> np.ndarray:
    """Isotropic 1/f^slope random field in [0.05, 0.95], shape (n, n)."""
    rng = np.random.default_rng(seed)
    fy = np.fft.fftfreq(n, 1.0 / n)[:, None]
    fx = np.fft.rfftfreq(n, 1.0 / n)[None, :]
    rad = np.sqrt(fy**2 + fx**2)
    amp = np.where(rad > 0, 1.0 / np.maximum(rad, 1.0) ** slope, 0.0)
    spec = amp * (rng.standard_normal((n, fx.size)) + 1j * rng.standard_normal((n, fx.size)))
    img = np.fft.irfft2(spec, s=(n, n))
    img = (img - img.min()) / (img.max() - img.min())
    return 0.05 + 0.9 * img


@pytest.fixture
def rng():
    return np.random.default_rng(0)
