"""Skin-mode anatomy: eigenbasis decomposition, regions and decay fits.

A rotated-basis eigenstate is split per cell onto the transfer-matrix
eigenvectors, psi(n) = psi_n^+ |r+(n)> + psi_n^- |r-(n)>.  For an increasing
loss profile the '-' component decays like a single exponential through the
bulk (region II) while the '+' component only matters near the edges
(regions I and III), which is the skin-mode structure this module measures.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import StateVector
from .transfer import TransferFlow

__all__ = [
    "ModeDecomposition",
    "decompose",
    "recurrence_check",
    "Segmentation",
    "segment_regions",
    "DecayFit",
    "fit_decay_rate",
    "REGION_RATIO_THRESHOLD",
]

# |psi+|/|psi-| below this ends region I; only "several orders of magnitude"
# is physically fixed, so the constant is overridable per call
REGION_RATIO_THRESHOLD = 1e-3

# cells whose amplitude underflows past this fraction of the mode maximum
# carry no usable information and are masked from fits
AMPLITUDE_FLOOR = 1e-300


@dataclass
class ModeDecomposition:
    """Per-cell components of one eigenstate in the T(n) eigenbasis.

    ``psi_plus``/``psi_minus`` are indexed like the flow (cell n at position
    n-2, n = 2..L).  ``overlaps[n-3]`` holds the 2x2 matrix
    ``[[<l+|r+>, <l+|r->], [<l-|r+>, <l-|r->]]`` between the eigenbases at
    cells n and n-1 (defined for n = 3..L).  Cells skipped because the flow
    flagged T(n) defective are NaN with ``skipped`` set.
    """

    energy: complex
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    overlaps: np.ndarray
    skipped: np.ndarray
    regions: Optional[tuple] = None

    @property
    def ns(self) -> np.ndarray:
        return np.arange(2, len(self.psi_plus) + 2)


def decompose(state: StateVector, flow: TransferFlow) -> ModeDecomposition:
    """Project a rotated-basis eigenstate onto the per-cell T(n) eigenbasis.

    The coefficients are the left-eigenvector contractions
    psi_n^+- = <l+-(n)|psi(n)>; completeness of the biorthogonal 2x2 basis
    makes psi_n^+ |r+(n)> + psi_n^- |r-(n)> reproduce psi(n) exactly.
    Defective cells are skipped with a gap marker.
    """
    if state.basis != "rotated":
        raise ValueError("decompose works on rotated-basis states")
    L = flow.spec.length
    if state.length != L:
        raise ValueError(f"state has {state.length} cells, flow expects {L}")
    cells = state.cells()
    m = L - 1
    pp = np.full(m, np.nan, dtype=complex)
    pm = np.full(m, np.nan, dtype=complex)
    skipped = flow.defective.copy()
    for i in range(m):
        if skipped[i]:
            continue
        c = cells[i + 1]  # cell n = i + 2
        pp[i] = flow.l_plus[i] @ c
        pm[i] = flow.l_minus[i] @ c
    overlaps = np.full((max(m - 1, 0), 2, 2), np.nan, dtype=complex)
    for i in range(1, m):
        if skipped[i] or skipped[i - 1]:
            continue
        overlaps[i - 1, 0, 0] = flow.l_plus[i] @ flow.r_plus[i - 1]
        overlaps[i - 1, 0, 1] = flow.l_plus[i] @ flow.r_minus[i - 1]
        overlaps[i - 1, 1, 0] = flow.l_minus[i] @ flow.r_plus[i - 1]
        overlaps[i - 1, 1, 1] = flow.l_minus[i] @ flow.r_minus[i - 1]
    return ModeDecomposition(energy=flow.energy, psi_plus=pp, psi_minus=pm,
                             overlaps=overlaps, skipped=skipped)


def recurrence_check(dec: ModeDecomposition, flow: TransferFlow) -> float:
    """Worst mismatch of the exact two-term recurrence between adjacent cells.

    Checks psi_n^+- = lambda+-(n) [<l+-(n)|r+-(n-1)> psi_{n-1}^+-
    + <l+-(n)|r-+(n-1)> psi_{n-1}^-+] at every interior cell.  The identity
    is exact, so the returned number only bounds the numerical error of the
    eigensolve; mismatches are measured relative to the largest per-cell
    component magnitude so deeply underflowed cells cannot dominate.
    """
    m = len(dec.psi_plus)
    finite = ~dec.skipped
    scale = 0.0
    if np.any(finite):
        scale = max(np.max(np.abs(dec.psi_plus[finite])),
                    np.max(np.abs(dec.psi_minus[finite])))
    if scale == 0.0:
        return 0.0
    worst = 0.0
    for i in range(1, m):
        if dec.skipped[i] or dec.skipped[i - 1]:
            continue
        o = dec.overlaps[i - 1]
        rhs_p = flow.lambda_plus[i] * (o[0, 0] * dec.psi_plus[i - 1] + o[0, 1] * dec.psi_minus[i - 1])
        rhs_m = flow.lambda_minus[i] * (o[1, 1] * dec.psi_minus[i - 1] + o[1, 0] * dec.psi_plus[i - 1])
        worst = max(worst,
                    abs(dec.psi_plus[i] - rhs_p) / scale,
                    abs(dec.psi_minus[i] - rhs_m) / scale)
    return float(worst)


@dataclass(frozen=True)
class Segmentation:
    """Region boundaries of one mode; degenerate when the mode is not skin-like."""

    i_end: Optional[int]
    iii_start: Optional[int]
    degenerate: bool
    reason: str = ""


def segment_regions(dec: ModeDecomposition, flow: TransferFlow,
                    ratio_threshold: float = REGION_RATIO_THRESHOLD) -> Segmentation:
    """Locate the left-edge / bulk / right-edge regions of a skin mode.

    Region III starts at the first cell with |lambda+(n)| > 1 (the '+'
    component starts growing there); region I ends at the first cell where
    |psi+|/|psi-| has dropped below ``ratio_threshold``.  If either threshold
    is never crossed, or they do not order as I_end < III_start, the mode is
    reported degenerate (not skin-like) instead of being segmented.  On
    success the boundaries are also stored on ``dec.regions``.
    """
    L = flow.spec.length
    iii_start = None
    for i, n in enumerate(range(2, L + 1)):
        if not dec.skipped[i] and abs(flow.lambda_plus[i]) > 1:
            iii_start = n
            break
    i_end = None
    for i, n in enumerate(range(2, L + 1)):
        if dec.skipped[i]:
            continue
        denom = abs(dec.psi_minus[i])
        if denom > 0 and abs(dec.psi_plus[i]) / denom < ratio_threshold:
            i_end = n
            break
    if iii_start is None:
        return Segmentation(i_end, None, True, "|lambda+(n)| never exceeds 1")
    if i_end is None:
        return Segmentation(None, iii_start, True,
                            f"|psi+|/|psi-| never drops below {ratio_threshold:g}")
    if not i_end < iii_start:
        return Segmentation(i_end, iii_start, True,
                            "component suppression only happens after region III opens")
    dec.regions = (i_end, iii_start)
    return Segmentation(i_end, iii_start, False)


@dataclass(frozen=True)
class DecayFit:
    """Log-linear decay fit of a mode over a cell window."""

    beta: float
    fit_range: tuple
    residual: float
    reference: Optional[float] = None  # |lambda0-| when known


def fit_decay_rate(state: StateVector, fit_range: tuple,
                   reference: Optional[float] = None,
                   use_max_sublattice: bool = True) -> DecayFit:
    """Fit a uniform per-cell decay rate beta to a rotated-basis mode.

    Least squares on (n, ln a_n) over cells ``fit_range = (start, end)``
    inclusive, where a_n is the larger of the two sublattice amplitudes
    (guarding against sublattice-parity oscillation) or the A' amplitude
    alone with ``use_max_sublattice=False``.  beta = exp(slope); the residual
    is the RMS deviation of the fit and doubles as an interference metric.
    Cells with underflowed amplitude are dropped with a warning.
    """
    if state.basis != "rotated":
        raise ValueError("decay fits work on rotated-basis states")
    start, end = int(fit_range[0]), int(fit_range[1])
    if not (1 <= start <= end <= state.length):
        raise ValueError(f"fit range {fit_range} outside cells 1..{state.length}")
    cells = state.cells()
    if use_max_sublattice:
        amps = np.maximum(np.abs(cells[start - 1:end, 0]), np.abs(cells[start - 1:end, 1]))
    else:
        amps = np.abs(cells[start - 1:end, 0])
    ns = np.arange(start, end + 1, dtype=float)
    floor = AMPLITUDE_FLOOR * max(np.abs(cells).max(), 1.0)
    keep = amps > floor
    if not np.all(keep):
        warnings.warn(f"dropping {int((~keep).sum())} underflowed cells from the decay fit")
        ns, amps = ns[keep], amps[keep]
    if len(ns) < 4:
        raise ValueError("decay fit needs at least 4 usable cells")
    y = np.log(amps)
    design = np.vstack([ns, np.ones_like(ns)]).T
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = float(np.sqrt(np.mean((design @ coef - y) ** 2)))
    return DecayFit(beta=float(np.exp(coef[0])), fit_range=(start, end),
                    residual=resid, reference=reference)
