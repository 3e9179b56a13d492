"""Unitary modulation bases: SC, OFDM, CDMA, OTFS, AFDM.

Each basis is an N x N unitary transform from a symbol vector to a
discrete-time baseband frame.  Transforms are applied with fast operations
(FFT, Walsh-Hadamard butterflies, chirp multiplies) along the last axis, so
Monte-Carlo batches of frames modulate in one call; the dense matrix is
only materialized on request for unitarity checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("sc", "ofdm", "cdma", "otfs", "afdm")


@dataclass(frozen=True)
class ModulationBasis:
    """Parameterized unitary signaling basis of size n.

    kind        one of sc | ofdm | cdma | otfs | afdm
    n           transform size (frame length in symbols)
    m_delay     OTFS delay bins (n = m_delay * n_doppler)
    n_doppler   OTFS Doppler bins
    c1, c2      AFDM chirp rates (c1 = c2 = 0 reduces AFDM to OFDM)
    scramble_seed  seed of the CDMA +-1 scrambling diagonal
    """

    kind: str
    n: int
    m_delay: int = 0
    n_doppler: int = 0
    c1: float = 0.0
    c2: float = 0.0
    scramble_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}; expected one of {KINDS}")
        if self.n < 1:
            raise ValueError("basis size must be positive")
        if self.kind == "cdma" and (self.n & (self.n - 1)) != 0:
            raise ValueError(f"CDMA size must be a power of two, got {self.n}")
        if self.kind == "otfs":
            if self.m_delay < 1 or self.n_doppler < 1:
                raise ValueError("OTFS needs positive m_delay and n_doppler")
            if self.m_delay * self.n_doppler != self.n:
                raise ValueError(
                    f"OTFS size mismatch: m_delay*n_doppler = "
                    f"{self.m_delay * self.n_doppler} != n = {self.n}"
                )

    @property
    def label(self) -> str:
        return self.kind.upper()


def single_carrier(n: int) -> ModulationBasis:
    return ModulationBasis("sc", n)


def ofdm(n: int) -> ModulationBasis:
    return ModulationBasis("ofdm", n)


def cdma(n: int, scramble_seed: int = 0) -> ModulationBasis:
    return ModulationBasis("cdma", n, scramble_seed=scramble_seed)


def otfs(m_delay: int, n_doppler: int) -> ModulationBasis:
    return ModulationBasis("otfs", m_delay * n_doppler, m_delay=m_delay, n_doppler=n_doppler)


def afdm(n: int, c1: float | None = None, c2: float = 0.0) -> ModulationBasis:
    """AFDM basis; default c1 = (2*1 + 1) / (2n) (integer guard alpha = 1)."""
    if c1 is None:
        c1 = 3.0 / (2.0 * n)
    return ModulationBasis("afdm", n, c1=c1, c2=c2)


def from_config(cfg: dict) -> ModulationBasis:
    """Build a basis from config keys {kind, n, m_delay, n_doppler, c1, c2, scramble_seed}."""
    kind = cfg["kind"].lower()
    n = int(cfg["n"])
    if kind == "otfs":
        return otfs(int(cfg["m_delay"]), int(cfg["n_doppler"]))
    if kind == "afdm":
        return ModulationBasis("afdm", n, c1=float(cfg.get("c1", 3.0 / (2.0 * n))),
                               c2=float(cfg.get("c2", 0.0)))
    if kind == "cdma":
        return cdma(n, int(cfg.get("scramble_seed", 0)))
    return ModulationBasis(kind, n)


@dataclass(frozen=True)
class BasebandFrame:
    """A modulated frame: samples = U @ symbols, energy preserved."""

    symbols: np.ndarray
    samples: np.ndarray
    basis: ModulationBasis


def _fwht(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform (Sylvester order) along the last axis."""
    n = x.shape[-1]
    out = np.array(x, dtype=np.complex128, copy=True)
    h = 1
    while h < n:
        out = out.reshape(x.shape[:-1] + (n // (2 * h), 2, h))
        top = out[..., 0, :] + out[..., 1, :]
        bot = out[..., 0, :] - out[..., 1, :]
        out = np.stack([top, bot], axis=-2).reshape(x.shape[:-1] + (n,))
        h *= 2
    return out


def _scrambler(basis: ModulationBasis) -> np.ndarray:
    rng = np.random.default_rng(basis.scramble_seed)
    return (2.0 * rng.integers(0, 2, basis.n) - 1.0)


def _afdm_chirps(basis: ModulationBasis) -> tuple[np.ndarray, np.ndarray]:
    n = np.arange(basis.n)
    lam1 = np.exp(-2j * np.pi * basis.c1 * n * n)
    lam2 = np.exp(-2j * np.pi * basis.c2 * n * n)
    return lam1, lam2


def modulate(basis: ModulationBasis, symbols: np.ndarray) -> np.ndarray:
    """Apply the unitary transform along the last axis of `symbols`.

    Returns the time-domain samples; shape is preserved, so a batch of
    frames (trials, n) maps to (trials, n) in one call.
    """
    x = np.asarray(symbols, dtype=np.complex128)
    n = basis.n
    if x.shape[-1] != n:
        raise ValueError(f"symbol vector length {x.shape[-1]} != basis size {n}")

    if basis.kind == "sc":
        return x.copy()
    if basis.kind == "ofdm":
        return np.fft.ifft(x, axis=-1) * np.sqrt(n)
    if basis.kind == "cdma":
        return _scrambler(basis) * _fwht(x) / np.sqrt(n)
    if basis.kind == "afdm":
        lam1, lam2 = _afdm_chirps(basis)
        # U = conj(Lam1) . F^H . conj(Lam2)
        return np.conj(lam1) * (np.fft.ifft(np.conj(lam2) * x, axis=-1) * np.sqrt(n))
    # OTFS: delay-Doppler grid -> ISFFT -> per-time-symbol IDFT, rectangular
    # pulses, no CP.  With rectangular pulses the subcarrier DFT/IDFT pair
    # cancels and the chain reduces to a unitary IDFT along the Doppler axis.
    m, nd = basis.m_delay, basis.n_doppler
    grid = x.reshape(x.shape[:-1] + (m, nd))
    sig = np.fft.ifft(grid, axis=-1) * np.sqrt(nd)
    # serialize time symbol by time symbol: sample index = t*m + delay bin
    return np.swapaxes(sig, -1, -2).reshape(x.shape[:-1] + (n,))


def demodulate(basis: ModulationBasis, samples: np.ndarray) -> np.ndarray:
    """Exact inverse of :func:`modulate` (applies U^H along the last axis)."""
    y = np.asarray(samples, dtype=np.complex128)
    n = basis.n
    if y.shape[-1] != n:
        raise ValueError(f"sample vector length {y.shape[-1]} != basis size {n}")

    if basis.kind == "sc":
        return y.copy()
    if basis.kind == "ofdm":
        return np.fft.fft(y, axis=-1) / np.sqrt(n)
    if basis.kind == "cdma":
        return _fwht(_scrambler(basis) * y) / np.sqrt(n)
    if basis.kind == "afdm":
        lam1, lam2 = _afdm_chirps(basis)
        return lam2 * (np.fft.fft(lam1 * y, axis=-1) / np.sqrt(n))
    m, nd = basis.m_delay, basis.n_doppler
    sig = np.swapaxes(y.reshape(y.shape[:-1] + (nd, m)), -1, -2)
    grid = np.fft.fft(sig, axis=-1) / np.sqrt(nd)
    return grid.reshape(y.shape[:-1] + (n,))


def make_frame(basis: ModulationBasis, symbols: np.ndarray) -> BasebandFrame:
    """Modulate a single symbol vector and package it with its basis."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim != 1:
        raise ValueError("make_frame expects a single frame (1-D symbol vector)")
    return BasebandFrame(symbols, modulate(basis, symbols), basis)


def basis_matrix(basis: ModulationBasis) -> np.ndarray:
    """Materialize the dense N x N unitary matrix U (columns U e_i)."""
    return modulate(basis, np.eye(basis.n, dtype=np.complex128)).T


def unitarity_residual(basis: ModulationBasis) -> float:
    """max |U^H U - I|; < 1e-10 for every valid basis."""
    u = basis_matrix(basis)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(basis.n))))
