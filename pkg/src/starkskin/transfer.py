"""Per-cell transfer matrices, their eigenvalue flow, and convergence rates.

In the rotated basis the bulk eigenequations connect neighbouring cells
through a 2x2 matrix T(n), so ``psi(n) = T(n) psi(n-1)`` for n = 2..L.  Its
eigenvalues lambda+-(n) solve

    lambda^2 + b(n) lambda + c(n) = 0,
    b(n) = (t1^2 + t2^2 - E^2 + gial*t1 - i*giar*E) / (t2 (t1 + gamma_n/2)),
    c(n) = (t1 - gamma_{n-1}/2) / (t1 + gamma_n/2),

with gial = (gamma_n - gamma_{n-1})/2 and giar = (gamma_n + gamma_{n-1})/2.
For a diverging loss profile they approach n-independent asymptotes
lambda0+- = +-exp(+-i kappa) with kappa = arcsin(E/t2), and the leading
1/gamma_n Laurent coefficient ratio lambda1+-/lambda0+- measures how fast:
a small '-' ratio is the fingerprint of a clean imaginary-Stark skin mode.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .model import (
    ExponentialLoss,
    LatticeSpec,
    LinearLoss,
    LogarithmicLoss,
    LossProfile,
    PolynomialLoss,
    gamma_at,
)

__all__ = [
    "SingularCellError",
    "BandEdgeError",
    "GMDivergenceError",
    "CASE_SUBLINEAR",
    "CASE_LINEAR",
    "CASE_SUPERLINEAR",
    "CASE_EXPONENTIAL",
    "profile_case",
    "quadratic_coeffs",
    "TransferMatrix",
    "transfer_matrix",
    "Lambda0",
    "lambda0_and_kappa",
    "lambda0_closed_form",
    "TransferFlow",
    "lambda_flow",
    "ConvergenceRatio",
    "convergence_ratio",
    "geometric_mean_ratio",
    "isse_criterion",
]


class SingularCellError(ValueError):
    """t1 + gamma_n/2 vanished; the transfer matrix at this cell is undefined."""


class BandEdgeError(ValueError):
    """cos(kappa) = 0: the convergence-ratio closed forms diverge."""


class GMDivergenceError(RuntimeError):
    """The log-mean did not stabilize under quadrature refinement."""


CASE_SUBLINEAR = "sublinear"
CASE_LINEAR = "linear"
CASE_SUPERLINEAR = "superlinear"
CASE_EXPONENTIAL = "exponential"


def profile_case(profile: LossProfile):
    """Asymptotic class of a diverging loss profile.

    Returns ``(case, parameter)`` where the parameter is gamma0 for the
    linear case, alpha for the exponential case and None otherwise.  Uniform
    and tabulated profiles have no asymptotic class.
    """
    if isinstance(profile, LogarithmicLoss):
        return CASE_SUBLINEAR, None
    if isinstance(profile, LinearLoss):
        return CASE_LINEAR, profile.gamma0
    if isinstance(profile, PolynomialLoss):
        if profile.alpha < 1:
            return CASE_SUBLINEAR, None
        if profile.alpha == 1:
            return CASE_LINEAR, profile.coefficient
        return CASE_SUPERLINEAR, None
    if isinstance(profile, ExponentialLoss):
        return CASE_EXPONENTIAL, profile.alpha
    raise ValueError(f"profile {profile!r} has no asymptotic convergence class")


def _branch_sqrt(z: complex) -> complex:
    # single-valued square root with the argument's angle taken in [0, 2*pi),
    # i.e. the result's angle lies in [0, pi)
    w = cmath.sqrt(z)
    if w.imag < 0:
        w = -w
    return w


def quadratic_coeffs(spec: LatticeSpec, energy: complex, n: int):
    """Characteristic-polynomial coefficients (b, c) of T(n), n >= 2."""
    if n < 2:
        raise ValueError(f"transfer matrices connect cells n-1 and n, so n >= 2 (got {n})")
    t1, t2 = spec.hopping.t1, spec.hopping.t2
    gn = gamma_at(spec.profile, n)
    gm = gamma_at(spec.profile, n - 1)
    den = t1 + gn / 2
    if den == 0:
        raise SingularCellError(f"t1 + gamma_{n}/2 = 0 at cell {n}")
    gdiff = (gn - gm) / 2
    gsum = (gn + gm) / 2
    E = complex(energy)
    b = (t1 * t1 + t2 * t2 - E * E + gdiff * t1 - 1j * gsum * E) / (t2 * den)
    c = (t1 - gm / 2) / den
    return b, c


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 map from the cell-(n-1) amplitudes to the cell-n amplitudes."""

    n: int
    entries: np.ndarray


def transfer_matrix(spec: LatticeSpec, energy: complex, n: int) -> TransferMatrix:
    """Transfer matrix T(n) of the rotated-basis bulk eigenequations."""
    if n < 2:
        raise ValueError(f"transfer matrices connect cells n-1 and n, so n >= 2 (got {n})")
    t1, t2 = spec.hopping.t1, spec.hopping.t2
    gn = gamma_at(spec.profile, n)
    gm = gamma_at(spec.profile, n - 1)
    den = t1 + gn / 2
    if den == 0:
        raise SingularCellError(f"t1 + gamma_{n}/2 = 0 at cell {n}")
    E = complex(energy)
    a = E + 1j * gm / 2
    d = E + 1j * gn / 2
    T = np.array(
        [
            [-(t1 - gm / 2) / t2, a / t2],
            [-d * (t1 - gm / 2) / (t2 * den), (a * d - t2 * t2) / (t2 * den)],
        ],
        dtype=complex,
    )
    return TransferMatrix(n=n, entries=T)


class Lambda0(NamedTuple):
    kappa: complex
    plus: complex
    minus: complex


def lambda0_and_kappa(energy: complex, t2: float) -> Lambda0:
    """Large-n asymptotes of the transfer-matrix eigenvalues.

    kappa = arcsin(E/t2) on the principal branch; lambda0+- = +-exp(+-i kappa).
    For Im E < 0 this gives |lambda0+| > 1 > |lambda0-|.
    """
    if t2 <= 0:
        raise ValueError(f"t2 must be positive, got {t2}")
    kappa = cmath.asin(complex(energy) / t2)
    return Lambda0(kappa=kappa, plus=cmath.exp(1j * kappa), minus=-cmath.exp(-1j * kappa))


def lambda0_closed_form(energy: complex, t2: float):
    """The asymptotes via iE/t2 [1 +- sqrt(1 - (t2/E)^2)], branch angle in [0, 2pi).

    Returned in the formula's own +-, which may label-swap relative to
    ``lambda0_and_kappa``; as a set the two agree.  Undefined at E = 0.
    """
    E = complex(energy)
    if E == 0:
        raise ValueError("closed form is undefined at E = 0; use lambda0_and_kappa")
    s = _branch_sqrt(1 - (t2 / E) ** 2)
    pref = 1j * E / t2
    return pref * (1 + s), pref * (1 - s)


@dataclass
class TransferFlow:
    """lambda+-(n) along the lattice with biorthonormal T(n) eigenvectors.

    Arrays are indexed by cell n = 2..L (position n-2).  Root labels are
    assigned by matching to lambda0- at n = L and propagated backwards by
    continuity, so the '-' branch is the one that converges to lambda0-.
    Cells with an exactly defective T(n) are flagged; their eigenvectors are
    left as NaN and no Jordan-block fallback is attempted.
    """

    spec: LatticeSpec
    energy: complex
    ns: np.ndarray
    matrices: np.ndarray        # (L-1, 2, 2)
    lambda_plus: np.ndarray     # (L-1,)
    lambda_minus: np.ndarray
    r_plus: np.ndarray          # (L-1, 2) right eigenvectors, unit norm
    r_minus: np.ndarray
    l_plus: np.ndarray          # (L-1, 2) left row vectors, l @ r = delta
    l_minus: np.ndarray
    defective: np.ndarray       # (L-1,) bool
    kappa: complex
    lambda0_plus: complex
    lambda0_minus: complex

    def _idx(self, n: int) -> int:
        if not 2 <= n <= self.spec.length:
            raise IndexError(f"flow is defined for cells 2..{self.spec.length}, got {n}")
        return n - 2

    def matrix_at(self, n: int) -> np.ndarray:
        return self.matrices[self._idx(n)]

    def lambda_at(self, n: int):
        i = self._idx(n)
        return self.lambda_plus[i], self.lambda_minus[i]


def _eigvec_2x2(T: np.ndarray, lam: complex) -> np.ndarray:
    # (T12, lam - T11) and (lam - T22, T21) are both null vectors of T - lam;
    # pick the better conditioned one
    v1 = np.array([T[0, 1], lam - T[0, 0]], dtype=complex)
    v2 = np.array([lam - T[1, 1], T[1, 0]], dtype=complex)
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    nv = np.linalg.norm(v)
    if nv == 0:
        return np.full(2, np.nan, dtype=complex)
    v = v / nv
    j = int(np.argmax(np.abs(v)))
    return v * np.exp(-1j * np.angle(v[j]))


def lambda_flow(spec: LatticeSpec, energy: complex) -> TransferFlow:
    """Compute T(n), lambda+-(n) and their biorthonormal eigenvectors for n = 2..L.

    Raw roots use the principal branch with the square-root argument's angle
    in [0, 2pi); labels are then fixed by closeness to the asymptotes at
    n = L and tracked backwards so each branch stays continuous in n.
    Eigenvector phases are aligned along the flow (each vector is rotated to
    have a positive overlap with its predecessor) so the slowly-varying
    overlap structure is visible in the raw numbers.
    """
    L = spec.length
    if L < 2:
        raise ValueError("a flow needs at least two cells")
    E = complex(energy)
    l0 = lambda0_and_kappa(E, spec.hopping.t2)

    ns = np.arange(2, L + 1)
    mats = np.empty((L - 1, 2, 2), dtype=complex)
    raw = np.empty((L - 1, 2), dtype=complex)
    defective = np.zeros(L - 1, dtype=bool)
    for i, n in enumerate(ns):
        b, c = quadratic_coeffs(spec, E, int(n))
        mats[i] = transfer_matrix(spec, E, int(n)).entries
        disc = b * b - 4 * c
        s = _branch_sqrt(disc)
        raw[i] = ((-b + s) / 2, (-b - s) / 2)
        if disc == 0:
            defective[i] = True

    lam_p = np.empty(L - 1, dtype=complex)
    lam_m = np.empty(L - 1, dtype=complex)
    # label at the last cell by the asymptotes, then walk backwards
    r1, r2 = raw[-1]
    if abs(r1 - l0.plus) + abs(r2 - l0.minus) <= abs(r2 - l0.plus) + abs(r1 - l0.minus):
        lam_p[-1], lam_m[-1] = r1, r2
    else:
        lam_p[-1], lam_m[-1] = r2, r1
    for i in range(L - 3, -1, -1):
        r1, r2 = raw[i]
        keep = abs(r1 - lam_p[i + 1]) + abs(r2 - lam_m[i + 1])
        swap = abs(r2 - lam_p[i + 1]) + abs(r1 - lam_m[i + 1])
        if keep <= swap:
            lam_p[i], lam_m[i] = r1, r2
        else:
            lam_p[i], lam_m[i] = r2, r1

    r_p = np.full((L - 1, 2), np.nan, dtype=complex)
    r_m = np.full((L - 1, 2), np.nan, dtype=complex)
    l_p = np.full((L - 1, 2), np.nan, dtype=complex)
    l_m = np.full((L - 1, 2), np.nan, dtype=complex)
    prev_p = prev_m = None
    for i in range(L - 1):
        if defective[i]:
            prev_p = prev_m = None
            continue
        vp = _eigvec_2x2(mats[i], lam_p[i])
        vm = _eigvec_2x2(mats[i], lam_m[i])
        if prev_p is not None:
            ph = np.vdot(prev_p, vp)
            if abs(ph) > 0:
                vp = vp * (ph.conjugate() / abs(ph))
            ph = np.vdot(prev_m, vm)
            if abs(ph) > 0:
                vm = vm * (ph.conjugate() / abs(ph))
        R = np.column_stack([vp, vm])
        det = R[0, 0] * R[1, 1] - R[0, 1] * R[1, 0]
        if det == 0:
            defective[i] = True
            prev_p = prev_m = None
            continue
        Linv = np.array([[R[1, 1], -R[0, 1]], [-R[1, 0], R[0, 0]]], dtype=complex) / det
        r_p[i], r_m[i] = vp, vm
        l_p[i], l_m[i] = Linv[0], Linv[1]
        prev_p, prev_m = vp, vm

    return TransferFlow(
        spec=spec, energy=E, ns=ns, matrices=mats,
        lambda_plus=lam_p, lambda_minus=lam_m,
        r_plus=r_p, r_minus=r_m, l_plus=l_p, l_minus=l_m,
        defective=defective, kappa=l0.kappa,
        lambda0_plus=l0.plus, lambda0_minus=l0.minus,
    )


class ConvergenceRatio(NamedTuple):
    minus: complex
    plus: complex
    lambda0_shifted: bool = False
    shifted_lambda0: Optional[tuple] = None


def _shifted_lambda0(t1: float, t2: float, kappa: complex, alpha: float):
    # exponential profiles keep a finite (gamma_n - gamma_{n-1})/gamma_n
    # = 1 - exp(-alpha), which shifts the constant terms of b and c before
    # the n -> infinity limit is taken
    delta = 1.0 - math.exp(-alpha)
    E = t2 * cmath.sin(kappa)
    b0 = -2j * E / t2 + delta * (t1 + 1j * E) / t2
    c0 = -1.0 + delta
    s = _branch_sqrt(b0 * b0 - 4 * c0)
    roots = sorted([(-b0 + s) / 2, (-b0 - s) / 2], key=abs)
    return b0, c0, roots[1], roots[0]  # b0, c0, plus (larger), minus (smaller)


def convergence_ratio(case: str, t1: float, t2: float, kappa: complex,
                      gamma0: Optional[float] = None,
                      alpha: Optional[float] = None) -> ConvergenceRatio:
    """Leading Laurent ratio lambda1+-/lambda0+- for one loss-profile class.

    ``case`` is one of the CASE_* constants.  The linear case needs the
    asymptotic increment ``gamma0``; the exponential case needs the rate
    ``alpha`` and is evaluated through the generic first-order formula
    -(b1 + c1/lambda0) / (2 lambda0 + b0) with the shifted constants, since
    there the asymptotes themselves move (flagged on the result).
    """
    ck = cmath.cos(kappa)
    if case == CASE_EXPONENTIAL:
        if alpha is None:
            raise ValueError("exponential case needs alpha")
        b0, _c0, lp, lm = _shifted_lambda0(t1, t2, kappa, alpha)
        E = t2 * cmath.sin(kappa)
        b1 = 2 * (t1 * t1 + t2 * t2 - E * E + 2j * E * t1) / t2
        c1 = 4 * t1
        rm = -(b1 + c1 / lm) / (2 * lm + b0)
        rp = -(b1 + c1 / lp) / (2 * lp + b0)
        return ConvergenceRatio(minus=rm, plus=rp, lambda0_shifted=True,
                                shifted_lambda0=(lp, lm))
    if ck == 0:
        raise BandEdgeError("cos(kappa) = 0: ratio diverges at the band edge")
    if case == CASE_SUBLINEAR:
        rm = (t1 - t2 * ck) ** 2 / (t2 * ck)
        rp = -((t1 + t2 * ck) ** 2) / (t2 * ck)
    elif case == CASE_LINEAR:
        if gamma0 is None:
            raise ValueError("linear case needs gamma0")
        rm = (t1 - t2 * ck) * (t1 - t2 * ck + gamma0 / 2) / (t2 * ck)
        rp = -(t1 + t2 * ck) * (t1 + t2 * ck + gamma0 / 2) / (t2 * ck)
    elif case == CASE_SUPERLINEAR:
        rm = (t1 - t2 * ck) / (t2 * ck)
        rp = -(t1 + t2 * ck) / (t2 * ck)
    else:
        raise ValueError(f"unknown convergence case {case!r}")
    return ConvergenceRatio(minus=rm, plus=rp)


def _log_mean_abs(fn, points: int) -> float:
    # midpoint rule on (-pi/2, pi/2); never touches the endpoint singularities
    h = math.pi / points
    kappas = -math.pi / 2 + (np.arange(points) + 0.5) * h
    vals = np.array([abs(fn(float(k))) for k in kappas])
    if np.any(vals == 0) or not np.all(np.isfinite(vals)):
        raise GMDivergenceError("integrand hit a zero or pole on the quadrature grid")
    return float(np.mean(np.log(vals)))


def geometric_mean_ratio(case: str, t1: float, t2: float,
                         gamma0: Optional[float] = None,
                         alpha: Optional[float] = None,
                         points: int = 512):
    """Geometric mean of |lambda1+-/lambda0+-| over real kappa in (-pi/2, pi/2).

    exp of the kappa-averaged log, evaluated with a ``points``-point midpoint
    rule (the endpoint log-divergences are integrable and never sampled).  A
    doubled-resolution check guards against a non-integrable blow-up.

    Returns ``(gm_minus, gm_plus)``.
    """
    def fminus(k):
        return convergence_ratio(case, t1, t2, k, gamma0=gamma0, alpha=alpha).minus

    def fplus(k):
        return convergence_ratio(case, t1, t2, k, gamma0=gamma0, alpha=alpha).plus

    out = []
    for fn in (fminus, fplus):
        m = _log_mean_abs(fn, points)
        m2 = _log_mean_abs(fn, 2 * points)
        if abs(m2 - m) > 0.1:
            raise GMDivergenceError(
                f"log-mean moved {abs(m2 - m):.3g} under refinement; integral looks divergent"
            )
        out.append(math.exp(m2))
    return out[0], out[1]


def isse_criterion(spec: LatticeSpec, energy: complex) -> float:
    """Finite-size skin-effect criterion |(lambda-(L) - lambda0-)/lambda0-|.

    Small values mean the '-' transfer eigenvalue has already converged to
    its asymptote within the lattice, so an apparent skin effect is expected
    even though gamma_L is finite.
    """
    flow = lambda_flow(spec, energy)
    lam_L = flow.lambda_minus[-1]
    return float(abs((lam_L - flow.lambda0_minus) / flow.lambda0_minus))
