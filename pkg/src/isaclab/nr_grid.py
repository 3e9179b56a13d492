"""NR-like time-frequency resource grids with standardized pilot sequences.

Implements the 3GPP TS 38.211 sequence generators needed for sensing
studies (length-31 Gold scrambler per 5.2.1, PSS/SSS m-sequences per
7.4.2, Zadoff-Chu) and places SSB bursts, DMRS, CSI-RS, and SRS onto a
labeled grid so that pilot resource fractions and pilot-only sensing
masks can be measured exactly.  PBCH payload bits are random Gold QPSK
fill (no Polar coding); guard entries inside an SSB block count as PBCH
so a block footprint is exactly 240 subcarriers x 4 symbols.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

SYMBOLS_PER_SLOT = 14
SSB_SUBCARRIERS = 240
SSB_SYMBOLS = 4
PSS_LENGTH = 127
# PSS/SSS occupy subcarriers 56..182 of the 240-wide block
PSS_FIRST_SUBCARRIER = 56

VALID_SCS = (15, 30, 60, 120)


class Label(IntEnum):
    EMPTY = 0
    PSS = 1
    SSS = 2
    PBCH = 3
    DMRS = 4
    CSIRS = 5
    SRS = 6
    DATA = 7


PILOT_LABELS = (Label.PSS, Label.SSS, Label.PBCH, Label.DMRS, Label.CSIRS, Label.SRS)


class CollisionError(ValueError):
    """A placement would overwrite an already-occupied resource element."""


def slot_duration_ms(scs_khz: int) -> float:
    """Slot length in ms for a given subcarrier spacing (14-symbol slots)."""
    if scs_khz not in VALID_SCS:
        raise ValueError(f"unsupported subcarrier spacing {scs_khz} kHz")
    return 15.0 / scs_khz


class ResourceGrid:
    """Labeled (subcarriers x ofdm_symbols) grid of complex resource elements.

    Build with the place_* helpers (single writer), then treat as read-only.
    """

    def __init__(self, subcarriers: int, ofdm_symbols: int, scs_khz: int = 30):
        if subcarriers < 1 or ofdm_symbols < 1:
            raise ValueError("grid dimensions must be positive")
        if scs_khz not in VALID_SCS:
            raise ValueError(f"unsupported subcarrier spacing {scs_khz} kHz")
        self.subcarriers = subcarriers
        self.ofdm_symbols = ofdm_symbols
        self.scs_khz = scs_khz
        self.values = np.zeros((subcarriers, ofdm_symbols), dtype=np.complex128)
        self.labels = np.zeros((subcarriers, ofdm_symbols), dtype=np.uint8)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def label_counts(self) -> dict[str, int]:
        return {lab.name: int(np.count_nonzero(self.labels == lab)) for lab in Label}

    def mask(self, labels) -> np.ndarray:
        """Boolean mask of REs whose label is in `labels`."""
        want = {int(l) for l in labels}
        return np.isin(self.labels, list(want))

    def _assign(self, sc_idx, sym_idx, values, label: Label) -> None:
        if np.any(self.labels[sc_idx, sym_idx] != Label.EMPTY):
            raise CollisionError(
                f"{label.name} placement collides with occupied REs at symbol(s) {sym_idx}"
            )
        self.values[sc_idx, sym_idx] = values
        self.labels[sc_idx, sym_idx] = label


# ---------------------------------------------------------------------------
# sequence generators
# ---------------------------------------------------------------------------

def gold_bits(c_init: int, length: int) -> np.ndarray:
    """Length-31 Gold scrambling bits per TS 38.211 5.2.1 (Nc = 1600 discard)."""
    if length < 1:
        raise ValueError("length must be >= 1")
    nc = 1600
    total = length + nc
    x1 = np.zeros(total + 31, dtype=np.uint8)
    x2 = np.zeros(total + 31, dtype=np.uint8)
    x1[0] = 1
    for i in range(31):
        x2[i] = (c_init >> i) & 1
    for n in range(total):
        x1[n + 31] = (x1[n + 3] + x1[n]) & 1
        x2[n + 31] = (x2[n + 3] + x2[n + 2] + x2[n + 1] + x2[n]) & 1
    return ((x1[nc:nc + length] + x2[nc:nc + length]) & 1).astype(np.int8)


def gold_sequence(c_init: int, length: int) -> np.ndarray:
    """Gold sequence mapped to +-1 (bit b -> 1 - 2b)."""
    return 1.0 - 2.0 * gold_bits(c_init, length)


def gold_qpsk(c_init: int, length: int) -> np.ndarray:
    """Gold bits mapped to unit-magnitude QPSK, (1-2c(2n) + j(1-2c(2n+1)))/sqrt(2)."""
    b = gold_bits(c_init, 2 * length).astype(float)
    return ((1 - 2 * b[0::2]) + 1j * (1 - 2 * b[1::2])) / np.sqrt(2.0)


def zadoff_chu(u: int, nzc: int) -> np.ndarray:
    """Zadoff-Chu root sequence x[n] = exp(-j pi u n (n+1) / Nzc).

    Requires odd Nzc coprime with u; the periodic autocorrelation is an
    exact delta.
    """
    if nzc < 3 or nzc % 2 == 0:
        raise ValueError(f"Nzc must be odd and >= 3, got {nzc}")
    if math.gcd(u, nzc) != 1:
        raise ValueError(f"root u = {u} must be coprime with Nzc = {nzc}")
    n = np.arange(nzc)
    return np.exp(-1j * np.pi * u * n * (n + 1) / nzc)


def _msequence(taps, init, length=127) -> np.ndarray:
    x = np.zeros(length + 7, dtype=np.uint8)
    x[:7] = init
    for i in range(length):
        x[i + 7] = sum(x[i + t] for t in taps) & 1
    return x[:length]


def pss_sequence(n_id2: int) -> np.ndarray:
    """127-element BPSK PSS per TS 38.211 7.4.2.2."""
    if n_id2 not in (0, 1, 2):
        raise ValueError("n_id2 must be 0, 1, or 2")
    x = _msequence((4, 0), (0, 1, 1, 0, 1, 1, 1))
    m = (np.arange(127) + 43 * n_id2) % 127
    return 1.0 - 2.0 * x[m].astype(float)


def sss_sequence(n_id1: int, n_id2: int) -> np.ndarray:
    """127-element BPSK SSS per TS 38.211 7.4.2.3 (product of two m-sequences)."""
    if not 0 <= n_id1 <= 335:
        raise ValueError("n_id1 must be in 0..335")
    if n_id2 not in (0, 1, 2):
        raise ValueError("n_id2 must be 0, 1, or 2")
    x0 = _msequence((4, 0), (1, 0, 0, 0, 0, 0, 0))
    x1 = _msequence((1, 0), (1, 0, 0, 0, 0, 0, 0))
    m0 = 15 * (n_id1 // 112) + 5 * n_id2
    m1 = n_id1 % 112
    n = np.arange(127)
    return (1.0 - 2.0 * x0[(n + m0) % 127].astype(float)) * \
           (1.0 - 2.0 * x1[(n + m1) % 127].astype(float))


def pbch_dmrs_c_init(cell_id: int, ssb_index: int) -> int:
    """c_init of the PBCH DMRS scrambler per TS 38.211 7.4.1.4.1."""
    ibar = ssb_index & 0x7
    return ((1 << 11) * (ibar + 1) * ((cell_id // 4) + 1)
            + (1 << 6) * (ibar + 1) + (cell_id % 4)) % (1 << 31)


def pdsch_dmrs_c_init(cell_id: int, slot: int, symbol: int, n_scid: int = 0) -> int:
    """c_init of the PDSCH DMRS scrambler per TS 38.211 7.4.1.1.1."""
    return ((1 << 17) * (SYMBOLS_PER_SLOT * slot + symbol + 1) * (2 * cell_id + 1)
            + 2 * cell_id + n_scid) % (1 << 31)


# ---------------------------------------------------------------------------
# burst / pilot placement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BurstConfig:
    """SS-burst parameters: n_ssb blocks per window, window inside the period."""

    n_ssb: int
    period_ms: float = 20.0
    window_ms: float = 5.0
    scs_khz: int = 120
    cell_id: int = 0

    def __post_init__(self):
        if not 0 <= self.n_ssb <= 64:
            raise ValueError(f"n_ssb must be in 0..64, got {self.n_ssb}")
        if self.window_ms > self.period_ms:
            raise ValueError("burst window cannot exceed the burst period")
        if self.scs_khz not in VALID_SCS:
            raise ValueError(f"unsupported subcarrier spacing {self.scs_khz} kHz")


def ssb_start_symbols(cfg: BurstConfig) -> np.ndarray:
    """First-symbol index of each SSB inside the burst window.

    15/30 kHz use the {2, 8} + 14 n pattern, 60/120 kHz the FR2-style
    {4, 8, 16, 20} + 28 n pattern; all n_ssb blocks must end inside the
    window.
    """
    if cfg.scs_khz in (15, 30):
        base = np.array([2, 8])
        stride, group = 14, 2
    else:
        base = np.array([4, 8, 16, 20])
        stride, group = 28, 4
    n_groups = (cfg.n_ssb + group - 1) // group
    starts = (base[None, :] + stride * np.arange(max(n_groups, 1))[:, None]).ravel()
    starts = starts[:cfg.n_ssb]
    window_symbols = window_symbol_count(cfg)
    if len(starts) and starts[-1] + SSB_SYMBOLS > window_symbols:
        raise ValueError(
            f"{cfg.n_ssb} SSBs do not fit a {cfg.window_ms} ms window at "
            f"{cfg.scs_khz} kHz ({window_symbols} symbols)"
        )
    return starts


def window_symbol_count(cfg: BurstConfig) -> int:
    slots = cfg.window_ms / slot_duration_ms(cfg.scs_khz)
    return int(round(slots * SYMBOLS_PER_SLOT))


def build_ssb_burst(cfg: BurstConfig, subcarriers: int = SSB_SUBCARRIERS,
                    ofdm_symbols: int | None = None,
                    subcarrier_offset: int = 0) -> ResourceGrid:
    """Place an SS burst on a fresh grid spanning the burst window.

    Every RE of each 240 x 4 block is labeled: 127 PSS on symbol 0, 127 SSS
    on symbol 2, everything else PBCH (Gold-QPSK fill).  REs outside the
    blocks stay EMPTY.
    """
    if ofdm_symbols is None:
        ofdm_symbols = window_symbol_count(cfg)
    grid = ResourceGrid(subcarriers, ofdm_symbols, cfg.scs_khz)
    if subcarrier_offset + SSB_SUBCARRIERS > subcarriers and cfg.n_ssb > 0:
        raise ValueError("grid too narrow for a 240-subcarrier SSB")
    starts = ssb_start_symbols(cfg)
    if len(starts) and starts[-1] + SSB_SYMBOLS > ofdm_symbols:
        raise ValueError("grid too short for the configured burst window")

    n_id2 = cfg.cell_id % 3
    n_id1 = cfg.cell_id // 3
    pss = pss_sequence(n_id2)
    sss = sss_sequence(n_id1, n_id2)
    band = np.arange(SSB_SUBCARRIERS) + subcarrier_offset
    pss_rows = band[PSS_FIRST_SUBCARRIER:PSS_FIRST_SUBCARRIER + PSS_LENGTH]

    for idx, start in enumerate(starts):
        grid._assign(pss_rows, start, pss, Label.PSS)
        grid._assign(pss_rows, start + 2, sss, Label.SSS)
        pbch_mask = np.zeros((SSB_SUBCARRIERS, SSB_SYMBOLS), dtype=bool)
        pbch_mask[:, :] = True
        pss_local = np.arange(PSS_FIRST_SUBCARRIER, PSS_FIRST_SUBCARRIER + PSS_LENGTH)
        pbch_mask[pss_local, 0] = False
        pbch_mask[pss_local, 2] = False
        fill = gold_qpsk(pbch_dmrs_c_init(cfg.cell_id, idx), int(pbch_mask.sum()))
        sub = grid.values[band[0]:band[0] + SSB_SUBCARRIERS, start:start + SSB_SYMBOLS]
        lab = grid.labels[band[0]:band[0] + SSB_SUBCARRIERS, start:start + SSB_SYMBOLS]
        if np.any(lab[pbch_mask] != Label.EMPTY):
            raise CollisionError(f"SSB block {idx} overlaps existing content")
        sub[pbch_mask] = fill
        lab[pbch_mask] = Label.PBCH
    return grid


def place_dmrs(grid: ResourceGrid, positions, additional=(), comb: int = 2,
               cell_id: int = 0, slot: int = 0,
               band: tuple[int, int] | None = None) -> ResourceGrid:
    """Comb-type DMRS on the given symbols (type-1 comb-2 by default).

    `positions` are the front-loaded symbols, `additional` the extra ones
    for high mobility; both carry Gold-QPSK values over every comb-th
    subcarrier of the band.
    """
    lo, hi = band if band is not None else (0, grid.subcarriers)
    sc = np.arange(lo, hi, comb)
    for sym in list(positions) + list(additional):
        if not 0 <= sym < grid.ofdm_symbols:
            raise ValueError(f"DMRS symbol {sym} outside the grid")
        seq = gold_qpsk(pdsch_dmrs_c_init(cell_id, slot, sym), len(sc))
        grid._assign(sc, sym, seq, Label.DMRS)
    return grid


def place_csirs(grid: ResourceGrid, density: int = 1, periodicity_slots: int = 1,
                symbol: int = 5, cell_id: int = 0) -> ResourceGrid:
    """CSI-RS: `density` REs per PRB on one symbol of each occasion slot."""
    if density < 1 or 12 % density:
        raise ValueError("density must divide 12 (REs per PRB)")
    if periodicity_slots < 1:
        raise ValueError("periodicity must be >= 1 slot")
    n_slots = grid.ofdm_symbols // SYMBOLS_PER_SLOT
    occasions = list(range(0, n_slots, periodicity_slots))
    if not occasions:
        warnings.warn("CSI-RS periodicity exceeds the grid; nothing placed")
        return grid
    prbs = grid.subcarriers // 12
    sc = (np.arange(prbs * density) * (12 // density)).astype(int)
    sc = sc[sc < grid.subcarriers]
    for occ in occasions:
        sym = occ * SYMBOLS_PER_SLOT + symbol
        if sym >= grid.ofdm_symbols:
            continue
        seq = gold_qpsk(pdsch_dmrs_c_init(cell_id, occ, symbol, 1), len(sc))
        grid._assign(sc, sym, seq, Label.CSIRS)
    return grid


def place_srs(grid: ResourceGrid, comb: int = 4, periodicity_slots: int = 1,
              symbol: int = SYMBOLS_PER_SLOT - 1, cell_id: int = 0) -> ResourceGrid:
    """SRS: comb-type pattern over the whole band on one symbol per occasion."""
    if comb not in (2, 4, 8):
        raise ValueError("SRS comb must be 2, 4, or 8")
    n_slots = grid.ofdm_symbols // SYMBOLS_PER_SLOT
    occasions = list(range(0, n_slots, periodicity_slots))
    if not occasions:
        warnings.warn("SRS periodicity exceeds the grid; nothing placed")
        return grid
    sc = np.arange(0, grid.subcarriers, comb)
    seq = _low_papr_sequence(len(sc), root=1 + (cell_id % 24))
    for occ in occasions:
        sym = occ * SYMBOLS_PER_SLOT + symbol
        if sym >= grid.ofdm_symbols:
            continue
        grid._assign(sc, sym, seq, Label.SRS)
    return grid


def _low_papr_sequence(length: int, root: int = 1) -> np.ndarray:
    """Cyclically extended Zadoff-Chu of the largest prime length <= length."""
    if length < 3:
        return np.exp(-1j * np.pi * np.arange(length) ** 2 / max(length, 1))
    nzc = length if length % 2 else length - 1
    while nzc > 2 and any(nzc % d == 0 for d in range(3, int(nzc ** 0.5) + 1, 2)):
        nzc -= 2
    base = zadoff_chu(1 + (root % (nzc - 1)), nzc)
    reps = -(-length // nzc)
    return np.tile(base, reps)[:length]


def fill_payload(grid: ResourceGrid, constellation, seed: int = 0) -> ResourceGrid:
    """Fill every EMPTY RE with an i.i.d. constellation symbol, label DATA."""
    from .constellation import sample_symbols

    empty = grid.labels == Label.EMPTY
    count = int(empty.sum())
    if count:
        grid.values[empty] = sample_symbols(constellation, count, seed)
        grid.labels[empty] = Label.DATA
    return grid


def pilot_fraction(grid: ResourceGrid, include_empty: bool = False) -> float:
    """Fraction of REs carrying pilots (PSS/SSS/PBCH/DMRS/CSI-RS/SRS).

    By convention the denominator counts occupied (non-EMPTY) REs only;
    pass include_empty=True to divide by the full grid instead.  After
    fill_payload the two conventions coincide.
    """
    pilots = int(grid.mask(PILOT_LABELS).sum())
    if include_empty:
        denom = grid.values.size
    else:
        denom = int(np.count_nonzero(grid.labels != Label.EMPTY))
    return pilots / denom if denom else 0.0


def grid_from_config(cfg: dict):
    """Build a grid from a preset dict; returns the ResourceGrid.

    Recognized blocks: ssb {n_ssb, period_ms, window_ms, scs_khz, cell_id},
    dmrs {positions, additional, comb}, csirs {density, periodicity_slots,
    symbol}, srs {comb, periodicity_slots, symbol}, payload {constellation,
    seed}.
    """
    from . import constellation as cst

    if "ssb" in cfg and cfg["ssb"]:
        burst = BurstConfig(
            n_ssb=int(cfg["ssb"]["n_ssb"]),
            period_ms=float(cfg["ssb"].get("period_ms", 20.0)),
            window_ms=float(cfg["ssb"].get("window_ms", 5.0)),
            scs_khz=int(cfg["ssb"].get("scs_khz", cfg.get("scs_khz", 120))),
            cell_id=int(cfg.get("cell_id", 0)),
        )
        grid = build_ssb_burst(burst, int(cfg.get("subcarriers", SSB_SUBCARRIERS)))
    else:
        grid = ResourceGrid(int(cfg["subcarriers"]), int(cfg["ofdm_symbols"]),
                            int(cfg.get("scs_khz", 30)))
    cell_id = int(cfg.get("cell_id", 0))
    if cfg.get("dmrs"):
        d = cfg["dmrs"]
        place_dmrs(grid, d.get("positions", [2]), d.get("additional", []),
                   comb=int(d.get("comb", 2)), cell_id=cell_id)
    if cfg.get("csirs"):
        c = cfg["csirs"]
        place_csirs(grid, int(c.get("density", 1)),
                    int(c.get("periodicity_slots", 1)),
                    int(c.get("symbol", 5)), cell_id)
    if cfg.get("srs"):
        s = cfg["srs"]
        place_srs(grid, int(s.get("comb", 4)), int(s.get("periodicity_slots", 1)),
                  int(s.get("symbol", SYMBOLS_PER_SLOT - 1)), cell_id)
    if cfg.get("payload"):
        p = cfg["payload"]
        name = p.get("constellation", "16-QAM")
        if name.endswith("-QAM"):
            c = cst.make_qam(int(name.split("-")[0]))
        elif name.endswith("-PSK"):
            c = cst.make_psk(int(name.split("-")[0]))
        else:
            raise ValueError(f"unknown payload constellation {name!r}")
        fill_payload(grid, c, int(p.get("seed", 0)))
    return grid


def grid_csv_rows(grid: ResourceGrid):
    """Yield (symbol_index, subcarrier, label, re, im) rows for CSV export."""
    for sym in range(grid.ofdm_symbols):
        for sc in range(grid.subcarriers):
            v = grid.values[sc, sym]
            yield sym, sc, Label(grid.labels[sc, sym]).name, v.real, v.imag
