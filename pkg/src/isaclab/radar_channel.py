"""Point-target echo channels over OFDM grids and periodogram estimation.

A monostatic receiver that knows its own transmit grid X divides the echo
Y element-wise and reads delay and Doppler off a 2-D Fourier transform of
the quotient.  Restricting the division to a pilot mask models pilot-only
sensing; the full frame buys a processing gain of 1/rho over a mask of
fraction rho, which is the quantitative payoff of payload-based sensing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nr_grid import PILOT_LABELS, ResourceGrid


@dataclass(frozen=True)
class CarrierConfig:
    """OFDM carrier geometry used for delay/Doppler scaling."""

    scs_khz: float
    n_subcarriers: int
    n_symbols: int
    symbol_duration_s: float | None = None

    @property
    def delta_f(self) -> float:
        return self.scs_khz * 1e3

    @property
    def t_symbol(self) -> float:
        if self.symbol_duration_s is not None:
            return self.symbol_duration_s
        return 1.0 / self.delta_f

    @property
    def delay_bin_s(self) -> float:
        return 1.0 / (self.n_subcarriers * self.delta_f)

    @property
    def doppler_bin_hz(self) -> float:
        return 1.0 / (self.n_symbols * self.t_symbol)

    @property
    def max_delay_s(self) -> float:
        return 1.0 / self.delta_f

    @property
    def max_doppler_hz(self) -> float:
        return 0.5 / self.t_symbol


@dataclass(frozen=True)
class Target:
    delay_s: float
    doppler_hz: float
    amplitude: complex = 1.0 + 0.0j


@dataclass(frozen=True)
class TargetScene:
    """Targets plus noise over a given carrier; validated against ambiguity."""

    carrier: CarrierConfig
    targets: tuple[Target, ...] = ()
    noise_power: float = 0.0

    def __post_init__(self):
        targets = tuple(self.targets if isinstance(self.targets, (tuple, list))
                        else [self.targets])
        for t in targets:
            if not 0.0 <= t.delay_s < self.carrier.max_delay_s:
                raise ValueError(
                    f"delay {t.delay_s} s outside unambiguous range "
                    f"[0, {self.carrier.max_delay_s})"
                )
            if abs(t.doppler_hz) >= self.carrier.max_doppler_hz:
                raise ValueError(
                    f"Doppler {t.doppler_hz} Hz outside unambiguous range "
                    f"(+-{self.carrier.max_doppler_hz})"
                )
        if self.noise_power < 0:
            raise ValueError("noise power must be >= 0")
        object.__setattr__(self, "targets", targets)


@dataclass
class SensingReport:
    """Peak list (descending power) with the estimator's native resolution."""

    estimates: list[dict]
    delay_bin_s: float
    doppler_bin_hz: float
    used_re_fraction: float


def _grid_values(grid) -> np.ndarray:
    if isinstance(grid, ResourceGrid):
        return grid.values
    return np.asarray(grid, dtype=np.complex128)


def apply_scene(grid, scene: TargetScene, seed: int = 0) -> np.ndarray:
    """Echo of `grid` through the scene: phase ramps per target plus AWGN.

    Y[k, m] = sum_t b_t exp(j 2 pi (m T_sym nu_t - k df tau_t)) X[k, m] + W.
    """
    x = _grid_values(grid)
    cc = scene.carrier
    if x.shape != (cc.n_subcarriers, cc.n_symbols):
        raise ValueError(
            f"grid shape {x.shape} does not match carrier "
            f"({cc.n_subcarriers}, {cc.n_symbols})"
        )
    k = np.arange(cc.n_subcarriers)[:, None]
    m = np.arange(cc.n_symbols)[None, :]
    y = np.zeros_like(x)
    for t in scene.targets:
        ramp = np.exp(2j * np.pi * (m * cc.t_symbol * t.doppler_hz
                                    - k * cc.delta_f * t.delay_s))
        y = y + t.amplitude * ramp * x
    if scene.noise_power > 0:
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape)
        y = y + np.sqrt(scene.noise_power / 2.0) * w
    return y


def _resolve_mask(mask, grid) -> np.ndarray:
    if mask is None:
        return np.ones(_grid_values(grid).shape, dtype=bool)
    if callable(mask):
        if not isinstance(grid, ResourceGrid):
            raise ValueError("label-predicate masks need a ResourceGrid")
        return np.vectorize(mask)(grid.labels)
    return np.asarray(mask, dtype=bool)


def pilot_mask(grid: ResourceGrid) -> np.ndarray:
    """Mask selecting the pilot-labeled REs of a grid."""
    return grid.mask(PILOT_LABELS)


def random_mask(shape: tuple[int, int], fraction: float, seed: int = 0) -> np.ndarray:
    """Pseudo-random RE mask hitting `fraction` of the grid exactly."""
    total = shape[0] * shape[1]
    count = int(round(fraction * total))
    if count < 1:
        raise ValueError("mask fraction selects no REs")
    rng = np.random.default_rng(seed)
    flat = np.zeros(total, dtype=bool)
    flat[rng.choice(total, size=count, replace=False)] = True
    return flat.reshape(shape)


def delay_doppler_map(x, y, mask, carrier: CarrierConfig) -> np.ndarray:
    """|2-D transform of the masked element-wise quotient Y/X|^2.

    IDFT along subcarriers resolves delay (axis 0), DFT along symbols
    resolves Doppler (axis 1, fftshifted so 0 Hz sits at the center bin).
    """
    xv, yv = _grid_values(x), _grid_values(y)
    m = _resolve_mask(mask, x)
    if not m.any():
        raise ValueError("mask selects no resource elements")
    if np.any(np.abs(xv[m]) == 0):
        raise ValueError("mask selects zero-valued transmit REs (cannot divide)")
    quot = np.zeros_like(xv)
    quot[m] = yv[m] / xv[m]
    prof = np.fft.ifft(quot, axis=0)             # delay axis
    prof = np.fft.fft(prof, axis=1)              # Doppler axis
    return np.abs(np.fft.fftshift(prof, axes=1)) ** 2


def _interp_peak(p: np.ndarray, i: int) -> float:
    """3-point quadratic interpolation offset around index i (circular)."""
    n = len(p)
    a, b, c = p[(i - 1) % n], p[i], p[(i + 1) % n]
    den = a - 2 * b + c
    if den == 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / den, -0.5, 0.5))


def periodogram_estimate(x, y, mask, n_targets: int,
                         carrier: CarrierConfig) -> SensingReport:
    """Pick the n_targets strongest delay-Doppler peaks of the masked map.

    Peaks are greedily extracted with a +-1 bin guard, refined by 3-point
    quadratic interpolation per axis, and reported in seconds / Hz.
    """
    if n_targets < 1:
        raise ValueError("n_targets must be >= 1")
    surf = delay_doppler_map(x, y, mask, carrier)
    m = _resolve_mask(mask, x)
    nd, nv = surf.shape
    work = surf.copy()
    estimates = []
    for _ in range(n_targets):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        peak = float(surf[i, j])
        di = _interp_peak(surf[:, j], i)
        dj = _interp_peak(surf[i, :], j)
        delay_bins = (i + di) % nd
        doppler_bins = (j + dj) - nv // 2
        estimates.append({
            "delay_s": delay_bins * carrier.delay_bin_s,
            "doppler_hz": doppler_bins * carrier.doppler_bin_hz,
            "peak_power": peak,
        })
        for a in (-1, 0, 1):
            for b in (-1, 0, 1):
                work[(i + a) % nd, (j + b) % nv] = -np.inf
    estimates.sort(key=lambda e: -e["peak_power"])
    return SensingReport(
        estimates=estimates,
        delay_bin_s=carrier.delay_bin_s,
        doppler_bin_hz=carrier.doppler_bin_hz,
        used_re_fraction=float(m.mean()),
    )


def peak_to_floor_db(x, y, mask, carrier: CarrierConfig, guard: int = 2) -> float:
    """Peak power over the median off-peak level of the delay-Doppler map, dB."""
    surf = delay_doppler_map(x, y, mask, carrier)
    i, j = np.unravel_index(np.argmax(surf), surf.shape)
    nd, nv = surf.shape
    keep = np.ones_like(surf, dtype=bool)
    ii = (np.arange(-guard, guard + 1) + i) % nd
    jj = (np.arange(-guard, guard + 1) + j) % nv
    keep[np.ix_(ii, jj)] = False
    floor = float(np.median(surf[keep]))
    return 10.0 * np.log10(surf[i, j] / floor)


def detection_rate(scene: TargetScene, grid, mask, snr_sweep_db,
                   trials: int = 100, threshold_factor: float = 13.0,
                   seed: int = 0) -> list[dict]:
    """Pd versus per-RE SNR at a fixed median-CFAR threshold.

    For each SNR point the scene's noise power is set to |b|^2 / snr, and a
    detection requires the strongest peak to clear threshold_factor (dB)
    over the median floor within +-1 bin of the true target position.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if len(scene.targets) != 1:
        raise ValueError("detection_rate expects a single-target scene")
    target = scene.targets[0]
    cc = scene.carrier
    x = _grid_values(grid)
    m = _resolve_mask(mask, grid)
    true_d = target.delay_s / cc.delay_bin_s
    true_v = target.doppler_hz / cc.doppler_bin_hz
    amp2 = abs(target.amplitude) ** 2
    curve = []
    for s_db in np.atleast_1d(snr_sweep_db):
        noise = amp2 / (10.0 ** (s_db / 10.0)) if np.isfinite(s_db) else 0.0
        sc = TargetScene(cc, scene.targets, noise_power=noise)
        hits = 0
        for t in range(trials):
            trial_seed = np.random.SeedSequence(seed, spawn_key=(int(t),))
            y = apply_scene(x, sc, seed=trial_seed.generate_state(1)[0])
            surf = delay_doppler_map(x, y, m, cc)
            i, j = np.unravel_index(np.argmax(surf), surf.shape)
            floor = float(np.median(surf))
            if surf[i, j] < floor * 10.0 ** (threshold_factor / 10.0):
                continue
            derr = min(abs(i - true_d), surf.shape[0] - abs(i - true_d))
            verr = abs((j - surf.shape[1] // 2) - true_v)
            if derr <= 1.0 and verr <= 1.0:
                hits += 1
        curve.append({"snr_db": float(s_db), "pd": hits / trials})
    return curve
