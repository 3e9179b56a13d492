"""Constellation construction, shaping, and fourth-moment statistics.

Constellations are immutable point sets with a probability mass function,
normalized to unit average power.  The kurtosis E|x|^4 / (E|x|^2)^2 of the
symbol distribution is the figure of merit carried downstream to the
autocorrelation sidelobe analysis: complex Gaussian symbols sit at 2.0,
constant-modulus (PSK) symbols at exactly 1.0, and QAM/APSK in between.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

POWER_TOL = 1e-12


class KurtosisRangeError(ValueError):
    """Requested kurtosis lies outside what the shaping family can reach."""

    def __init__(self, target: float, lo: float, hi: float):
        super().__init__(
            f"target kurtosis {target:.6g} unreachable; "
            f"achievable interval is [{lo:.6g}, {hi:.6g}]"
        )
        self.target = target
        self.achievable = (lo, hi)


@dataclass(frozen=True)
class Constellation:
    """A finite symbol alphabet with transmit probabilities.

    Invariants (enforced at construction): probabilities are non-negative
    and sum to 1, average power sum(p_i * |c_i|^2) equals 1, and all points
    are distinct.  Use :func:`from_points` to build one from an arbitrary
    (unnormalized) point set.
    """

    name: str
    points: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.complex128)
        probs = np.asarray(self.probs, dtype=np.float64)
        if points.ndim != 1 or probs.shape != points.shape:
            raise ValueError("points and probs must be 1-D arrays of equal length")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if abs(probs.sum() - 1.0) > POWER_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
        power = float(np.sum(probs * np.abs(points) ** 2))
        if abs(power - 1.0) > POWER_TOL:
            raise ValueError(f"average power is {power!r}, expected 1 (unit-power)")
        if len(np.unique(points)) != len(points):
            raise ValueError("constellation points must be distinct")
        points.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "probs", probs)

    @property
    def order(self) -> int:
        return len(self.points)

    def to_json_dict(self) -> dict:
        """Serialize as {name, points: [[re, im], ...], probs: [...]}."""
        return {
            "name": self.name,
            "points": [[p.real, p.imag] for p in self.points],
            "probs": [float(q) for q in self.probs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @staticmethod
    def from_json_dict(obj: dict) -> "Constellation":
        pts = np.array([complex(re, im) for re, im in obj["points"]])
        return Constellation(obj["name"], pts, np.asarray(obj["probs"], float))

    @staticmethod
    def from_json(text: str) -> "Constellation":
        return Constellation.from_json_dict(json.loads(text))


def from_points(name: str, points, probs=None) -> Constellation:
    """Build a unit-power constellation from an arbitrary point set.

    Points are rescaled so that sum(p_i |c_i|^2) = 1; probabilities default
    to uniform.  This is the geometric-shaping entry point: any custom
    geometry becomes a valid constellation here.
    """
    points = np.asarray(points, dtype=np.complex128)
    if probs is None:
        probs = np.full(len(points), 1.0 / len(points))
    else:
        probs = np.asarray(probs, dtype=np.float64)
        probs = probs / probs.sum()
    power = np.sum(probs * np.abs(points) ** 2)
    if power <= 0:
        raise ValueError("point set has zero average power")
    return Constellation(name, points / np.sqrt(power), probs)


def make_psk(order: int) -> Constellation:
    """M-ary PSK: `order` points uniformly spaced on the unit circle.

    First point at angle 0, uniform probabilities.  Kurtosis is exactly 1
    for every order (constant modulus).
    """
    if order < 2:
        raise ValueError(f"PSK order must be >= 2, got {order}")
    points = np.exp(2j * np.pi * np.arange(order) / order)
    return from_points(f"{order}-PSK", points)


def make_qam(order: int) -> Constellation:
    """Square QAM with levels {+-1, +-3, ...}, scaled to unit average power.

    Supported orders: 4, 16, 64, 256.
    """
    if order not in (4, 16, 64, 256):
        raise ValueError(f"unsupported QAM order {order}; expected 4/16/64/256")
    m = int(round(np.sqrt(order)))
    levels = 2 * np.arange(m) - (m - 1)
    re, im = np.meshgrid(levels, levels)
    return from_points(f"{order}-QAM", (re + 1j * im).ravel())


def make_apsk(rings: list[tuple[int, float]]) -> Constellation:
    """APSK on concentric rings given as (count, radius) pairs.

    Ring radii must be strictly increasing.  Points on ring r are offset
    by pi/count_r so that rings never collide in phase.
    """
    if not rings:
        raise ValueError("APSK needs at least one ring")
    radii = [r for _, r in rings]
    if any(c < 1 for c, _ in rings):
        raise ValueError("ring point counts must be >= 1")
    if any(r <= 0 for r in radii):
        raise ValueError("ring radii must be positive")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("ring radii must be strictly increasing (no duplicates)")
    pts = []
    for count, radius in rings:
        ang = 2 * np.pi * np.arange(count) / count + np.pi / count
        pts.append(radius * np.exp(1j * ang))
    label = "+".join(str(c) for c, _ in rings)
    return from_points(f"APSK-{label}", np.concatenate(pts))


@dataclass(frozen=True)
class ShapingSpec:
    """Probability-shaping recipe applied on top of a base point set.

    kind "maxwell_boltzmann" weights point i by exp(-lam * |c_i|^2) using
    the base constellation's point coordinates, then re-normalizes the
    shaped set back to unit power.  kind "custom" supplies probabilities
    directly; "uniform" resets to equal probabilities.
    """

    kind: str = "uniform"
    lam: float = 0.0
    probs: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("uniform", "maxwell_boltzmann", "custom"):
            raise ValueError(f"unknown shaping kind {self.kind!r}")
        if self.kind == "maxwell_boltzmann" and self.lam < 0:
            raise ValueError("maxwell_boltzmann rate lambda must be >= 0")
        if self.kind == "custom" and self.probs is None:
            raise ValueError("custom shaping requires probs")


def apply_shaping(base: Constellation, spec: ShapingSpec) -> Constellation:
    """Re-weight `base` per `spec` and return a new unit-power constellation."""
    if spec.kind == "uniform":
        probs = np.full(base.order, 1.0 / base.order)
    elif spec.kind == "maxwell_boltzmann":
        w = np.exp(-spec.lam * np.abs(base.points) ** 2)
        probs = w / w.sum()
    else:
        probs = np.asarray(spec.probs, float)
        if probs.shape != base.points.shape:
            raise ValueError("custom probs length must match base order")
    return from_points(f"{base.name}/{spec.kind}", base.points, probs)


def kurtosis(c: Constellation) -> float:
    """Fourth-moment ratio E|x|^4 / (E|x|^2)^2 of the symbol distribution.

    Below 2 is sub-Gaussian, above 2 super-Gaussian; the complex Gaussian
    reference sits exactly at 2.
    """
    p2 = np.abs(c.points) ** 2
    e2 = float(np.sum(c.probs * p2))
    e4 = float(np.sum(c.probs * p2 * p2))
    return e4 / (e2 * e2)


def sample_kurtosis(x: np.ndarray) -> float:
    """Empirical E|x|^4 / (E|x|^2)^2 of a sample vector."""
    p2 = np.abs(np.asarray(x)) ** 2
    return float(np.mean(p2 * p2) / np.mean(p2) ** 2)


def _mb_kurtosis(base: Constellation, lam: float) -> float:
    return kurtosis(apply_shaping(base, ShapingSpec("maxwell_boltzmann", lam)))


def shape_for_kurtosis(
    base: Constellation,
    target: float,
    tol: float = 1e-6,
    lam_max: float = 64.0,
    grid: int = 256,
) -> ShapingSpec:
    """Find a Maxwell-Boltzmann rate whose shaped kurtosis hits `target`.

    The MB family over a finite point set is not monotone in general (on
    16-QAM the kurtosis first rises from 1.32 toward ~1.889 before decaying
    to 1), so the reachable range is probed on a lambda grid first and the
    bisection runs inside the bracketing segment with the smallest lambda.
    Raises KurtosisRangeError when the target lies outside the probed range.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lams = np.concatenate([[0.0], np.geomspace(1e-3, lam_max, grid - 1)])
    kappas = np.array([_mb_kurtosis(base, l) for l in lams])
    lo, hi = float(kappas.min()), float(kappas.max())
    if not (lo - tol <= target <= hi + tol):
        raise KurtosisRangeError(target, lo, hi)
    if abs(kappas[0] - target) <= tol:
        return ShapingSpec("maxwell_boltzmann", 0.0)

    bracket = None
    for i in range(len(lams) - 1):
        ka, kb = kappas[i], kappas[i + 1]
        if min(ka, kb) - tol <= target <= max(ka, kb) + tol:
            bracket = (lams[i], lams[i + 1], ka, kb)
            break
    if bracket is None:
        raise KurtosisRangeError(target, lo, hi)

    la, lb, ka, kb = bracket
    for _ in range(200):
        lm = 0.5 * (la + lb)
        km = _mb_kurtosis(base, lm)
        if abs(km - target) <= tol:
            return ShapingSpec("maxwell_boltzmann", lm)
        # keep the sub-interval whose endpoint values still bracket the target
        if (ka - target) * (km - target) <= 0:
            lb, kb = lm, km
        else:
            la, ka = lm, km
    raise KurtosisRangeError(target, lo, hi)


def sample_symbols(c: Constellation, n: int, seed: int) -> np.ndarray:
    """Draw n i.i.d. symbols from (points, probs); deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(c.order, size=n, p=c.probs)
    return c.points[idx]


def map_bits(c: Constellation, bits: np.ndarray) -> np.ndarray:
    """Gray-map a bit array onto PSK or square-QAM symbols.

    PSK uses a circular Gray code over the ring; square QAM Gray-codes each
    axis independently.  The bit count must be a multiple of log2(order).
    """
    bits = np.asarray(bits).astype(int).ravel()
    m = c.order
    k = int(np.log2(m))
    if 2 ** k != m:
        raise ValueError("bit mapping needs a power-of-two constellation order")
    if len(bits) % k:
        raise ValueError(f"bit count must be a multiple of {k}")
    words = bits.reshape(-1, k)
    vals = words @ (1 << np.arange(k - 1, -1, -1))
    if c.name.endswith("PSK"):
        idx = _gray_to_index(vals)
    elif c.name.endswith("QAM"):
        side = 1 << (k // 2)
        row = _gray_to_index(vals >> (k // 2))
        col = _gray_to_index(vals & (side - 1))
        idx = row * side + col
    else:
        raise ValueError("gray mapping is defined for PSK and square QAM only")
    return c.points[idx]


def _gray_to_index(g: np.ndarray) -> np.ndarray:
    out = np.asarray(g).copy()
    mask = out >> 1
    while np.any(mask):
        out ^= mask
        mask >>= 1
    return out
