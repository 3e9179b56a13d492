"""Pulse-shaping filters and their autocorrelation functions.

The filter ACF is the deterministic part ("the iceberg") of the expected
squared ACF of a pulse-shaped random frame: the data-independent mainlobe
and near sidelobes come from the filter alone, while payload randomness
only adds a variance floor.  Time is measured in symbol periods (T = 1);
`oversampling` samples per symbol, `span` symbols of filter support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("sinc", "gaussian", "raised_cosine", "root_raised_cosine")


@dataclass(frozen=True)
class PulseFilter:
    """Truncated pulse-shaping filter, unit-energy normalized.

    beta is the RC/RRC roll-off in [0, 1]; bt the Gaussian bandwidth-time
    product.  The impulse response has span*oversampling + 1 taps, even
    symmetric about its center.
    """

    kind: str
    beta: float = 0.35
    bt: float = 0.3
    span: int = 16
    oversampling: int = 8

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown pulse kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.bt <= 0:
            raise ValueError(f"bt must be positive, got {self.bt}")
        if self.span < 4:
            raise ValueError(f"span must be >= 4 symbols, got {self.span}")
        if self.oversampling < 4:
            raise ValueError(f"oversampling must be >= 4, got {self.oversampling}")

    @property
    def ntaps(self) -> int:
        return self.span * self.oversampling + 1


def _sinc(t: np.ndarray) -> np.ndarray:
    return np.sinc(t)


def _raised_cosine(t: np.ndarray, beta: float) -> np.ndarray:
    if beta == 0.0:
        return np.sinc(t)
    den = 1.0 - (2.0 * beta * t) ** 2
    sing = np.abs(den) < 1e-10
    out = np.sinc(t) * np.cos(np.pi * beta * t) / np.where(sing, 1.0, den)
    # removable singularity at |t| = 1/(2 beta)
    return np.where(sing, (np.pi / 4.0) * np.sinc(1.0 / (2.0 * beta)), out)


def _root_raised_cosine(t: np.ndarray, beta: float) -> np.ndarray:
    if beta == 0.0:
        return np.sinc(t)
    out = np.zeros_like(t)
    at0 = np.abs(t) < 1e-10
    at_edge = np.abs(np.abs(t) - 1.0 / (4.0 * beta)) < 1e-10
    plain = ~(at0 | at_edge)
    tp = t[plain]
    num = np.sin(np.pi * tp * (1 - beta)) + 4 * beta * tp * np.cos(np.pi * tp * (1 + beta))
    out[plain] = num / (np.pi * tp * (1.0 - (4.0 * beta * tp) ** 2))
    out[at0] = 1.0 - beta + 4.0 * beta / np.pi
    out[at_edge] = (beta / np.sqrt(2.0)) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * beta))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * beta))
    )
    return out


def _gaussian(t: np.ndarray, bt: float) -> np.ndarray:
    # 3 dB (half-power) bandwidth bt/T in the frequency response
    sigma = np.sqrt(np.log(2.0)) / (2.0 * np.pi * bt)
    return np.exp(-t * t / (2.0 * sigma * sigma))


def impulse_response(p: PulseFilter) -> np.ndarray:
    """Unit-energy impulse response on the lag grid t = k/oversampling.

    Even symmetric with its peak at the center tap; the energy convention
    is sum(h^2) / oversampling = 1 (continuous-time energy with dt = T/L).
    """
    half = p.span * p.oversampling // 2
    t = (np.arange(p.ntaps) - half) / p.oversampling
    if p.kind == "sinc":
        h = _sinc(t)
    elif p.kind == "raised_cosine":
        h = _raised_cosine(t, p.beta)
    elif p.kind == "root_raised_cosine":
        h = _root_raised_cosine(t, p.beta)
    else:
        h = _gaussian(t, p.bt)
    return h / np.sqrt(np.sum(h * h) / p.oversampling)


def shape(p: PulseFilter, samples: np.ndarray) -> np.ndarray:
    """Zero-stuff by the oversampling factor and convolve with the filter.

    Input (..., N) discrete samples produce (..., N*L + span*L) waveform
    samples at L per symbol.  Batched along leading axes via FFT.
    """
    x = np.asarray(samples, dtype=np.complex128)
    if x.shape[-1] == 0:
        raise ValueError("cannot shape an empty sample vector")
    n = x.shape[-1]
    m = p.oversampling
    h = impulse_response(p)
    up = np.zeros(x.shape[:-1] + (n * m,), dtype=np.complex128)
    up[..., ::m] = x
    out_len = n * m + p.span * m
    nfft = 1 << int(np.ceil(np.log2(out_len)))
    y = np.fft.ifft(np.fft.fft(up, nfft, axis=-1) * np.fft.fft(h, nfft), axis=-1)
    return y[..., :out_len]


def pulse_acf(p: PulseFilter) -> np.ndarray:
    """Autocorrelation of the impulse response over lags in 1/L symbol steps.

    Length 2*span*L + 1, even symmetric, normalized so the zero-lag value
    is 1.  For a root-raised-cosine filter this reproduces the raised-cosine
    pulse shape up to truncation error.
    """
    h = impulse_response(p)
    r = np.correlate(h, h, mode="full")
    return r / r[len(r) // 2]


def acf_lags(p: PulseFilter) -> np.ndarray:
    """Lag axis of :func:`pulse_acf`, in symbol periods."""
    half = p.span * p.oversampling
    return np.arange(-half, half + 1) / p.oversampling


def from_config(cfg: dict) -> PulseFilter:
    """Build a filter from config keys {kind, beta, bt, span, oversampling}."""
    return PulseFilter(
        kind=cfg["kind"].lower(),
        beta=float(cfg.get("beta", 0.35)),
        bt=float(cfg.get("bt", 0.3)),
        span=int(cfg.get("span", 16)),
        oversampling=int(cfg.get("oversampling", 8)),
    )
