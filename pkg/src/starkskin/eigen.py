"""Dense complex non-symmetric eigendecomposition with biorthogonal pairs.

Backed by LAPACK (scipy.linalg.eig with left vectors), which performs the
standard balancing / Hessenberg / shifted-QR pipeline and returns left and
right vectors already paired per eigenvalue.  This module adds the
normalization, defect detection, residuals and canonical ordering that the
rest of the toolkit relies on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .model import LatticeSpec

__all__ = ["EigenConvergenceError", "EigenPair", "SpectrumSet", "eig_dense"]

# biorthogonal overlap below this (for unit-norm vectors) marks a defective
# or near-defective pair, e.g. at an exceptional point
DEFECT_OVERLAP_TOL = 1e-10


class EigenConvergenceError(RuntimeError):
    """QR iteration failed to converge."""

    def __init__(self, message: str, unconverged: Optional[int] = None):
        super().__init__(message)
        self.unconverged = unconverged


@dataclass
class EigenPair:
    """One eigenvalue with right (column) and left (row) eigenvectors.

    After normalization ``left @ right == 1`` and ``left @ H == value * left``,
    ``H @ right == value * right`` up to ``residual``.  Pairs whose
    biorthogonal overlap is numerically zero are flagged ``defective`` and
    keep unit-norm left vectors instead of the (ill-defined) normalization.
    """

    value: complex
    right: np.ndarray
    left: np.ndarray
    residual: float
    defective: bool = False


@dataclass
class SpectrumSet:
    """Full eigendecomposition, canonically sorted.

    Sorted by ascending Re E, ties broken by descending Im E.  ``basis`` and
    ``spec`` are carried along when the matrix came from a lattice build.
    """

    pairs: list
    spec: Optional[LatticeSpec] = None
    basis: Optional[str] = None

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def energies(self) -> np.ndarray:
        return np.array([p.value for p in self.pairs])

    def right_matrix(self) -> np.ndarray:
        """Right eigenvectors as columns, in canonical order."""
        return np.column_stack([p.right for p in self.pairs])

    def left_matrix(self) -> np.ndarray:
        """Left eigenvectors as rows, in canonical order."""
        return np.vstack([p.left for p in self.pairs])


def eig_dense(matrix, spec: Optional[LatticeSpec] = None,
              basis: Optional[str] = None) -> SpectrumSet:
    """Eigendecompose a dense complex matrix into biorthogonal pairs.

    Parameters
    ----------
    matrix : (N, N) array_like
        Square matrix with finite entries.
    spec, basis : optional
        Provenance tags stored on the returned :class:`SpectrumSet`.

    Returns
    -------
    SpectrumSet
        One :class:`EigenPair` per eigenvalue (with multiplicity), sorted by
        ascending Re E, ties by descending Im E.  Right vectors have unit
        norm; left row vectors are scaled so ``left @ right == 1`` unless the
        pair is flagged defective.

    Raises
    ------
    ValueError
        Non-square or non-finite input.
    EigenConvergenceError
        The QR iteration did not converge (carries the LAPACK index when
        available).
    """
    A = np.array(matrix, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")

    try:
        w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    except np.linalg.LinAlgError as exc:  # scipy re-exports this type
        m = re.search(r"(\d+)", str(exc))
        raise EigenConvergenceError(str(exc), unconverged=int(m.group(1)) if m else None) from exc

    order = np.lexsort((-w.imag, w.real))
    pairs = []
    for i in order:
        val = complex(w[i])
        r = vr[:, i]
        r = r / np.linalg.norm(r)
        l = vl[:, i].conj()  # row vector: l @ A == val * l
        l = l / np.linalg.norm(l)
        overlap = l @ r
        defective = bool(abs(overlap) < DEFECT_OVERLAP_TOL)
        if not defective:
            l = l / overlap
        res_r = np.linalg.norm(A @ r - val * r)
        res_l = np.linalg.norm(l @ A - val * l) / np.linalg.norm(l)
        pairs.append(EigenPair(value=val, right=r, left=l,
                               residual=float(max(res_r, res_l)),
                               defective=defective))
    return SpectrumSet(pairs=pairs, spec=spec, basis=basis)
