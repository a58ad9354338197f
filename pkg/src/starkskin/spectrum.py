"""T-shape classification, decoupled references and perturbative diagnostics.

The complex spectrum of the coupled lattice splits into a horizontal '-'
branch of weakly lossy, chain-A dominated states and a vertical '|' branch
of strongly lossy, chain-B localized states.  With the inter-chain coupling
off, the '-' branch becomes exact standing waves with E = t2 sin(k) on chain
A and the '|' branch a string of loss-localized chain-B modes near -i*gamma_n.
The functions here quantify how far coupling moves the '-' energies and how
the skin-mode decay asymptote behaves with system size.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import transfer
from .eigen import EigenPair, SpectrumSet, eig_dense
from .model import (
    LatticeSpec,
    LossProfile,
    StateVector,
    TableLoss,
    UniformLoss,
    decoupled_hamiltonian,
)

__all__ = [
    "BranchLabel",
    "classify_branches",
    "minus_branch",
    "vertical_branch",
    "DecoupledSpectrum",
    "decoupled_minus_spectrum",
    "DeltaEReport",
    "delta_e",
    "DegeneratePerturbationError",
    "second_order_shift",
    "second_order_shift_from_parts",
    "perturbation_bound_sum",
    "EmptyBranchError",
    "mean_abs_lambda0_minus",
    "avg_lambda0_minus",
]


class DegeneratePerturbationError(ArithmeticError):
    """A second-order denominator vanished; the perturbation series is invalid."""


class EmptyBranchError(ValueError):
    """No eigenstates fell on the requested branch."""


@dataclass(frozen=True)
class BranchLabel:
    """Branch assignment of one eigenstate with its chain weights."""

    label: str  # "minus" or "vertical"
    chain_a_weight: float
    chain_b_weight: float


_ROT_TO_ORIG = np.array([[1.0, -1j], [-1j, 1.0]], dtype=complex) / np.sqrt(2.0)


def _chain_weights(vec: np.ndarray, basis: Optional[str]) -> tuple:
    v = vec
    if basis == "rotated":
        v = (v.reshape(-1, 2) @ _ROT_TO_ORIG.T).reshape(-1)
    p = np.abs(v) ** 2
    tot = p.sum()
    wa = float(p[0::2].sum() / tot)
    return wa, 1.0 - wa


def classify_branches(spectrum: SpectrumSet):
    """Label every eigenstate 'minus' (chain-A weight > 1/2) or 'vertical'.

    Weights are probabilities of the normalized right eigenvector on the two
    chains in the original basis; rotated-basis spectra are rotated back
    first.  Returns ``[(EigenPair, BranchLabel), ...]`` in canonical order.
    """
    out = []
    for pair in spectrum:
        wa, wb = _chain_weights(pair.right, spectrum.basis)
        label = "minus" if wa > 0.5 else "vertical"
        out.append((pair, BranchLabel(label=label, chain_a_weight=wa, chain_b_weight=wb)))
    return out


def minus_branch(spectrum: SpectrumSet):
    return [p for p, lab in classify_branches(spectrum) if lab.label == "minus"]


def vertical_branch(spectrum: SpectrumSet):
    return [p for p, lab in classify_branches(spectrum) if lab.label == "vertical"]


@dataclass
class DecoupledSpectrum:
    """Chain-A standing waves of the decoupled lattice (open boundaries).

    energies[i] = t2 sin(k_i) with k_i = (i/(L+1) - 1/2) pi for i = 1..L.
    Standing waves carry a per-site phase i**n on top of sin((pi/2 - k) n);
    the phase drops out of every modulus but makes each vector an exact
    eigenvector of the chain-A block.
    """

    length: int
    t2: float
    energies: np.ndarray
    wavevectors: np.ndarray
    standingwaves: list


def decoupled_minus_spectrum(length: int, t2: float) -> DecoupledSpectrum:
    """Closed-form '-' branch of the decoupled chain A, unit-normalized."""
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if t2 <= 0:
        raise ValueError(f"t2 must be positive, got {t2}")
    L = length
    idx = np.arange(1, L + 1)
    k = (idx / (L + 1) - 0.5) * np.pi
    energies = t2 * np.sin(k)
    sites = np.arange(1, L + 1)
    waves = []
    for ki in k:
        amp = (1j ** sites) * np.sin((np.pi / 2 - ki) * sites)
        amp = amp / np.linalg.norm(amp)
        full = np.zeros(2 * L, dtype=complex)
        full[0::2] = amp
        waves.append(StateVector(full, basis="original"))
    return DecoupledSpectrum(length=L, t2=t2, energies=energies,
                             wavevectors=k, standingwaves=waves)


@dataclass
class DeltaEReport:
    """Mean distance between the decoupled '-' energies and their coupled partners."""

    length: int
    delta_e: float
    pairing: list           # [(decoupled index, coupled index), ...]
    degenerate_pairing: bool = False


def _energy_array(values) -> np.ndarray:
    out = []
    for v in values:
        out.append(complex(v.value) if isinstance(v, EigenPair) else complex(v))
    return np.array(out, dtype=complex)


def delta_e(decoupled, coupled) -> DeltaEReport:
    """Pair each decoupled '-' energy with a coupled eigenvalue and average the gap.

    Both lists are sorted by Re E; equal-length lists are paired by order
    (the no-crossing picture), otherwise each decoupled energy greedily takes
    the nearest unused coupled value.  A coupled list shorter than the
    decoupled one leaves levels unpaired and marks the report degenerate.

    ``decoupled`` may be a :class:`DecoupledSpectrum` or a sequence of
    energies; ``coupled`` a sequence of EigenPairs or energies (a full
    spectrum is fine, the greedy pass then also performs the '-' selection).
    """
    if isinstance(decoupled, DecoupledSpectrum):
        e0 = np.sort(np.asarray(decoupled.energies, dtype=float)).astype(complex)
        length = decoupled.length
    else:
        e0 = _energy_array(decoupled)
        e0 = e0[np.argsort(e0.real)]
        length = len(e0)
    ec = _energy_array(coupled)
    if len(e0) == 0 or len(ec) == 0:
        raise ValueError("both energy lists must be non-empty")
    order = np.argsort(ec.real)
    ec = ec[order]

    pairing = []
    degenerate = len(ec) < len(e0)
    if degenerate:
        warnings.warn("coupled list shorter than decoupled list; pairing is partial")
    if len(ec) == len(e0):
        dists = np.abs(e0 - ec)
        pairing = [(i, int(order[i])) for i in range(len(e0))]
    else:
        used = np.zeros(len(ec), dtype=bool)
        dists = []
        for i, e in enumerate(e0):
            d = np.abs(ec - e)
            d[used] = np.inf
            j = int(np.argmin(d))
            if not np.isfinite(d[j]):
                break
            used[j] = True
            dists.append(d[j])
            pairing.append((i, int(order[j])))
        dists = np.array(dists)
    return DeltaEReport(length=length, delta_e=float(np.mean(dists)),
                        pairing=pairing, degenerate_pairing=degenerate)


def second_order_shift_from_parts(minus_pairs: Sequence[EigenPair],
                                  vertical_pairs: Sequence[EigenPair],
                                  hprime: np.ndarray, i: int) -> complex:
    """Second-order energy shift of minus_pairs[i] through the vertical states.

    sum_j <L_i|H'|R_j><L_j|H'|R_i> / (E_i - E_j) over the vertical set, with
    biorthogonally normalized left/right vectors.
    """
    if not 0 <= i < len(minus_pairs):
        raise IndexError(f"minus-branch index {i} outside 0..{len(minus_pairs) - 1}")
    pi = minus_pairs[i]
    total = 0.0 + 0.0j
    hp_ri = hprime @ pi.right
    li_hp = pi.left @ hprime
    for pj in vertical_pairs:
        den = pi.value - pj.value
        if abs(den) < 1e-12:
            raise DegeneratePerturbationError(
                f"degenerate denominator between E={pi.value} and E={pj.value}"
            )
        total += (li_hp @ pj.right) * (pj.left @ hp_ri) / den
    return complex(total)


def second_order_shift(spec: LatticeSpec, i: int) -> complex:
    """Second-order shift of the i-th decoupled '-' level from the '|' states.

    The decoupled lattice is diagonalized numerically (its block structure
    makes the chain weights exactly 0 or 1), the inter-chain coupling acts as
    the perturbation, and ``i`` indexes the '-' branch in canonical order.
    """
    h0, hprime = decoupled_hamiltonian(spec)
    spectrum = eig_dense(h0, spec=spec, basis="original")
    labelled = classify_branches(spectrum)
    minus = [p for p, lab in labelled if lab.label == "minus"]
    vert = [p for p, lab in labelled if lab.label == "vertical"]
    return second_order_shift_from_parts(minus, vert, hprime, i)


def perturbation_bound_sum(profile: LossProfile, length: int) -> float:
    """Size scaling factor (1/L) sum_j 1 / (gamma'_j^2 gamma_j) of the shift bound.

    Uses the analytic derivative of the profile's closed form.  Decays with L
    for linear-or-faster polynomial growth and diverges for logarithmic
    profiles; a vanishing derivative makes the sum infinite (returned, not
    raised).
    """
    if isinstance(profile, (UniformLoss, TableLoss)):
        raise ValueError("bound needs a differentiable closed-form profile")
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    total = 0.0
    for j in range(1, length + 1):
        g = profile.value_at(j)
        gp = profile.derivative_at(j)
        if gp == 0.0 or g == 0.0:
            return math.inf
        total += 1.0 / (gp * gp * g)
    return total / length


def mean_abs_lambda0_minus(energies: Sequence[complex], t2: float) -> float:
    """Arithmetic mean of |lambda0-| over a set of energies."""
    vals = [abs(transfer.lambda0_and_kappa(E, t2).minus) for E in energies]
    if not vals:
        raise EmptyBranchError("no energies supplied")
    return float(np.mean(vals))


def avg_lambda0_minus(spec: LatticeSpec) -> float:
    """Mean skin-mode decay asymptote |lambda0-| over the '-' branch of a lattice."""
    from .model import build_hamiltonian

    spectrum = eig_dense(build_hamiltonian(spec, "original"), spec=spec, basis="original")
    minus = minus_branch(spectrum)
    if not minus:
        raise EmptyBranchError("the '-' branch is empty for this lattice")
    return mean_abs_lambda0_minus([p.value for p in minus], spec.hopping.t2)
