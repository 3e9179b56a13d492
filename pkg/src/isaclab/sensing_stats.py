"""Autocorrelation and ambiguity statistics of random signaling frames.

The central quantity is the ensemble-averaged squared ACF of i.i.d. data
frames.  Its expectation splits exactly into

    E|R|^2 = |E R|^2 + Var(R)

a deterministic "iceberg" fixed by the waveform (delta-like for bare
bases, the squared filter ACF for pulse-shaped frames) plus a "sea level"
variance floor contributed by payload randomness.  Coherent integration
(complex-averaging the ACF over K frames before squaring) divides the sea
level by K and leaves the iceberg untouched.  For an OFDM frame the
variance floor at nonzero lag is (kurtosis - 1) / N, which is the lowest
achievable among unitary bases with sub-Gaussian constellations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation
from .modulation import ModulationBasis, modulate
from .pulse import PulseFilter, shape

DB_FLOOR = -300.0


class BudgetError(RuntimeError):
    """Requested Monte-Carlo volume exceeds the configured sample budget."""


def to_db(x) -> np.ndarray:
    """10*log10 with a -300 dB floor for zero/negative power values."""
    x = np.asarray(x, dtype=float)
    out = np.full(x.shape, DB_FLOOR)
    ok = x > 10.0 ** (DB_FLOOR / 10.0)
    out[ok] = 10.0 * np.log10(x[ok])
    if out.ndim == 0:
        return float(out)
    return out


def pacf(samples: np.ndarray) -> np.ndarray:
    """Periodic autocorrelation R[l] = (1/N) sum_n s[n] conj(s[(n+l) mod N]).

    Applied along the last axis; a unit-average-power frame has R[0] ~ 1.
    """
    s = np.asarray(samples, dtype=np.complex128)
    n = s.shape[-1]
    if n < 2:
        raise ValueError("pacf needs at least 2 samples")
    spectrum = np.abs(np.fft.fft(s, axis=-1)) ** 2
    return np.fft.fft(spectrum, axis=-1) / (n * n)


def aperiodic_acf(waveform: np.ndarray, normalize: bool = True) -> np.ndarray:
    """Linear autocorrelation over lags -(len-1) .. (len-1), batched.

    r[d] = sum_n y[n] conj(y[n+d]); normalize=True scales the zero lag
    to 1.  Output length is 2*len - 1 with lag 0 at the center.
    """
    y = np.asarray(waveform, dtype=np.complex128)
    n = y.shape[-1]
    nfft = 1 << int(np.ceil(np.log2(2 * n - 1)))
    c = np.fft.ifft(np.abs(np.fft.fft(y, nfft, axis=-1)) ** 2, axis=-1)
    pos = np.conj(c[..., :n])              # lags 0 .. n-1
    neg = np.conj(c[..., nfft - (n - 1):])  # lags -(n-1) .. -1
    full = np.concatenate([neg, pos], axis=-1)
    if normalize:
        full = full / full[..., n - 1: n]
    return full


def ambiguity_function(samples: np.ndarray, doppler_bins: int) -> np.ndarray:
    """Periodic ambiguity surface |A[l, v]|^2, peak-normalized.

    A[l, v] = sum_n s[n] conj(s[(n+l) mod N]) e^{-j 2 pi v n / N} for integer
    Doppler shifts v = -(doppler_bins//2) .. ; returns a (N, doppler_bins)
    real array (delay along axis 0).  The zero-Doppler column is the squared
    periodic ACF.
    """
    if doppler_bins < 1:
        raise ValueError("doppler_bins must be >= 1")
    s = np.asarray(samples, dtype=np.complex128)
    if s.ndim != 1:
        raise ValueError("ambiguity_function expects a single frame")
    n = len(s)
    shifts = np.arange(doppler_bins) - doppler_bins // 2
    phase = np.exp(-2j * np.pi * shifts[:, None] * np.arange(n)[None, :] / n)
    a = s[None, :] * phase
    # circular cross-correlation of a with conj(s): N * ifft(fft(conj(s)) * ifft(a))
    rows = n * np.fft.ifft(np.fft.fft(np.conj(s))[None, :] * np.fft.ifft(a, axis=-1), axis=-1)
    surf = np.abs(rows.T) ** 2
    return surf / surf[0, doppler_bins // 2]


def doppler_shifts(doppler_bins: int) -> np.ndarray:
    """Integer Doppler-shift axis matching :func:`ambiguity_function` columns."""
    return np.arange(doppler_bins) - doppler_bins // 2


@dataclass
class AcfStats:
    """Monte-Carlo average of the squared (K-integrated) ACF."""

    lags: np.ndarray          # lag axis in symbol periods, 0 at the center
    mean_sq_acf: np.ndarray   # linear power, normalized to 1 at lag 0
    var_acf: np.ndarray       # across-trial variance of the K-averaged ACF
    psl_db: float
    isl_db: float
    trials: int
    integrations: int


@dataclass
class IcebergDecomposition:
    """Split of the averaged squared ACF into mean-power and variance parts."""

    iceberg: np.ndarray    # |E[ACF]|^2, same normalization as total
    sea_level: np.ndarray  # variance of the K-averaged ACF
    total: np.ndarray      # iceberg + sea_level (exactly, by construction)


@dataclass
class BasisRanking:
    basis: ModulationBasis
    isl_db: float
    isl_linear: float
    ci3_linear: float      # 3-sigma half-width of the ISL estimate (linear)
    psl_db: float


class _AcfAccumulator:
    """Order-independent accumulation of K-averaged frame ACFs."""

    def __init__(self, nlags: int, center: int, sidelobe_mask: np.ndarray):
        self.s1 = np.zeros(nlags, dtype=np.complex128)
        self.s2 = np.zeros(nlags, dtype=np.float64)
        self.center = center
        self.sidelobe_mask = sidelobe_mask
        self.trial_sl: list[np.ndarray] = []
        self.trials = 0

    def add(self, acf_chunk: np.ndarray) -> None:
        self.s1 += acf_chunk.sum(axis=0)
        sq = np.abs(acf_chunk) ** 2
        self.s2 += sq.sum(axis=0)
        self.trial_sl.append(sq[:, self.sidelobe_mask].sum(axis=1))
        self.trials += acf_chunk.shape[0]

    def finalize(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        t = self.trials
        total = self.s2 / t
        mean = self.s1 / t
        iceberg = np.abs(mean) ** 2
        sea = total - iceberg
        return total, iceberg, sea, np.concatenate(self.trial_sl)


def _draw_symbols(constellation: Constellation, trial_indices, k: int, n: int,
                  seed: int) -> np.ndarray:
    """(len(trials), k, n) i.i.d. symbols; trial t always sees the same draw."""
    out = np.empty((len(trial_indices), k, n), dtype=np.complex128)
    for row, t in enumerate(trial_indices):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(int(t),)))
        idx = rng.choice(constellation.order, size=(k, n), p=constellation.probs)
        out[row] = constellation.points[idx]
    return out


def _frame_acfs(symbols: np.ndarray, basis: ModulationBasis,
                pulse: PulseFilter | None) -> np.ndarray:
    """K-averaged centered complex ACFs for a (ct, k, n) symbol block."""
    frames = modulate(basis, symbols)
    if pulse is None:
        acf = np.fft.fftshift(pacf(frames), axes=-1)
    else:
        acf = aperiodic_acf(shape(pulse, frames), normalize=False)
    return acf.mean(axis=1)


def _lag_axis(n: int, pulse: PulseFilter | None) -> tuple[np.ndarray, int]:
    if pulse is None:
        lags = np.arange(-(n // 2), n - n // 2, dtype=float)
        return lags, n // 2
    wav = n * pulse.oversampling + pulse.span * pulse.oversampling
    lags = np.arange(-(wav - 1), wav) / pulse.oversampling
    return lags, wav - 1


def sidelobe_mask(lags: np.ndarray, exclude_symbols: float) -> np.ndarray:
    """Boolean mask of sidelobe lags: |lag| strictly beyond the exclusion."""
    if exclude_symbols < 0:
        raise ValueError("exclusion window must be >= 0 symbols")
    mask = np.abs(lags) > exclude_symbols + 1e-12
    if not mask.any():
        raise ValueError("mainlobe exclusion window covers every lag")
    return mask


def avg_squared_acf(
    constellation: Constellation,
    basis: ModulationBasis,
    pulse: PulseFilter | None = None,
    *,
    trials: int,
    integrations: int = 1,
    seed: int = 0,
    exclude_mainlobe_symbols: float = 1.0,
    max_budget: int = 2 ** 31,
    chunk_frames: int = 2048,
) -> tuple[AcfStats, IcebergDecomposition]:
    """Monte-Carlo averaged squared ACF with coherent integration.

    Draws trials*integrations i.i.d. frames; within each trial the complex
    ACF (periodic for bare bases, aperiodic for pulse-shaped waveforms) is
    averaged over the K = integrations frames, squared, and the square is
    averaged over trials.  The running complex mean and variance give the
    iceberg / sea-level decomposition; everything is normalized so the
    total equals 1 at lag zero.  Per-trial seeds are derived from
    (seed, trial index), so adding trials never perturbs earlier ones.
    """
    if trials < 1 or integrations < 1:
        raise ValueError("trials and integrations must be >= 1")
    n = basis.n
    volume = trials * integrations * n * (pulse.oversampling if pulse else 1)
    if volume > max_budget:
        raise BudgetError(
            f"trials*K*N{'*L' if pulse else ''} = {volume} exceeds budget {max_budget}"
        )

    lags, center = _lag_axis(n, pulse)
    sl_mask = sidelobe_mask(lags, exclude_mainlobe_symbols)
    acc = _AcfAccumulator(len(lags), center, sl_mask)
    step = max(1, chunk_frames // integrations)
    for start in range(0, trials, step):
        idx = range(start, min(start + step, trials))
        sym = _draw_symbols(constellation, idx, integrations, n, seed)
        acc.add(_frame_acfs(sym, basis, pulse))
    return _finalize_stats(acc, lags, trials, integrations)


def _finalize_stats(acc: _AcfAccumulator, lags, trials, integrations):
    total, iceberg, sea, _ = acc.finalize()
    c = total[acc.center]
    total, iceberg, sea = total / c, iceberg / c, sea / c
    psl, isl = _psl_isl(total, acc.sidelobe_mask)
    stats = AcfStats(lags=lags, mean_sq_acf=total, var_acf=sea, psl_db=psl,
                     isl_db=isl, trials=trials, integrations=integrations)
    return stats, IcebergDecomposition(iceberg=iceberg, sea_level=sea, total=total)


def _psl_isl(mean_sq: np.ndarray, mask: np.ndarray) -> tuple[float, float]:
    side = mean_sq[mask]
    return float(to_db(side.max())), float(to_db(side.sum()))


def sidelobe_metrics(stats: AcfStats, exclude_mainlobe_symbols: float = 1.0) -> dict:
    """PSL and ISL of the averaged squared ACF outside the mainlobe window."""
    mask = sidelobe_mask(stats.lags, exclude_mainlobe_symbols)
    psl, isl = _psl_isl(stats.mean_sq_acf, mask)
    return {"psl_db": psl, "isl_db": isl}


def mean_floor_db(lags: np.ndarray, curve: np.ndarray, beyond_symbols: float) -> float:
    """Mean linear level of `curve` over |lag| > beyond_symbols, in dB."""
    mask = np.abs(lags) > beyond_symbols + 1e-12
    if not mask.any():
        raise ValueError("no lags beyond the requested region")
    return float(to_db(np.mean(curve[mask])))


def rank_bases(
    constellation: Constellation,
    bases: list[ModulationBasis],
    *,
    trials: int,
    seed: int = 0,
    integrations: int = 1,
    exclude_mainlobe_symbols: float = 1.0,
    chunk_frames: int = 2048,
) -> list[BasisRanking]:
    """Rank bases by ISL under a shared sampling budget, ascending.

    The same per-trial symbol draws feed every basis (common random
    numbers), and each ranking carries the 3-sigma half-width of its ISL
    estimate so non-overlap can be checked against each competitor.
    """
    if len(bases) < 1:
        raise ValueError("rank_bases needs at least one basis")
    n = bases[0].n
    if any(b.n != n for b in bases):
        raise ValueError("all ranked bases must share the same size")

    per_basis = []
    for b in bases:
        lags, center = _lag_axis(n, None)
        per_basis.append(_AcfAccumulator(len(lags), center,
                                         sidelobe_mask(lags, exclude_mainlobe_symbols)))
    step = max(1, chunk_frames // integrations)
    for start in range(0, trials, step):
        idx = range(start, min(start + step, trials))
        sym = _draw_symbols(constellation, idx, integrations, n, seed)
        for b, acc in zip(bases, per_basis):
            acc.add(_frame_acfs(sym, b, None))

    out = []
    for b, acc in zip(bases, per_basis):
        total, _, _, trial_sl = acc.finalize()
        c = total[acc.center]
        total = total / c
        trial_sl = trial_sl / c
        psl, isl = _psl_isl(total, acc.sidelobe_mask)
        isl_lin = float(trial_sl.mean())
        ci3 = 3.0 * float(trial_sl.std(ddof=1)) / np.sqrt(trials) if trials > 1 else 0.0
        out.append(BasisRanking(basis=b, isl_db=isl, isl_linear=isl_lin,
                                ci3_linear=ci3, psl_db=psl))
    out.sort(key=lambda r: r.isl_linear)
    return out
