"""Two-chain lossy lattice with a site-dependent loss rate.

Chain A carries intra-chain hoppings ``+/- i t2/2``, chain B the same with
opposite sign plus an on-site loss ``-i gamma_n``; the chains are coupled by
``t1`` (intra-cell) and ``t2/2`` (inter-cell cross terms).  A per-cell
``pi/2`` rotation about the pseudo-spin x axis turns the model into a chain
with asymmetric intra-cell hoppings ``t1 +/- gamma_n/2`` and uniform loss
``-i gamma_n/2`` on both sublattices, which is the basis the transfer-matrix
analysis works in.

Amplitude ordering is ``(psi_1^A, psi_1^B, psi_2^A, psi_2^B, ...)`` and the
cell index starts at ``n = 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ProfileExhaustedError",
    "UniformLoss",
    "LogarithmicLoss",
    "LinearLoss",
    "PolynomialLoss",
    "ExponentialLoss",
    "TableLoss",
    "LossProfile",
    "HoppingParams",
    "LatticeSpec",
    "StateVector",
    "gamma_at",
    "build_hamiltonian",
    "rotation_operator",
    "rotate_state",
    "decoupled_hamiltonian",
    "spec_to_json",
    "spec_from_json",
]


class ProfileExhaustedError(LookupError):
    """A tabulated loss profile was asked for a site beyond its last entry."""


def _require_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


@dataclass(frozen=True)
class UniformLoss:
    """Constant loss rate gamma_n = gamma."""

    gamma: float
    kind = "uniform"

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and self.gamma >= 0):
            raise ValueError(f"uniform loss rate must be >= 0, got {self.gamma!r}")

    def value_at(self, n: int) -> float:
        return self.gamma

    def params(self) -> dict:
        return {"gamma": self.gamma}


@dataclass(frozen=True)
class LogarithmicLoss:
    """gamma_n = a * ln(1 + n/b)."""

    a: float
    b: float
    kind = "logarithmic"

    def __post_init__(self):
        _require_positive("logarithmic coefficient a", self.a)
        _require_positive("logarithmic offset b", self.b)

    def value_at(self, n: int) -> float:
        return self.a * math.log1p(n / self.b)

    def derivative_at(self, n: int) -> float:
        return self.a / (self.b + n)

    def params(self) -> dict:
        return {"a": self.a, "b": self.b}


@dataclass(frozen=True)
class LinearLoss:
    """gamma_n = gamma0 * n."""

    gamma0: float
    kind = "linear"

    def __post_init__(self):
        _require_positive("linear slope gamma0", self.gamma0)

    def value_at(self, n: int) -> float:
        return self.gamma0 * n

    def derivative_at(self, n: int) -> float:
        return self.gamma0

    def params(self) -> dict:
        return {"gamma0": self.gamma0}


@dataclass(frozen=True)
class PolynomialLoss:
    """gamma_n = coefficient * n**alpha."""

    coefficient: float
    alpha: float
    kind = "polynomial"

    def __post_init__(self):
        _require_positive("polynomial coefficient", self.coefficient)
        _require_positive("polynomial exponent alpha", self.alpha)

    def value_at(self, n: int) -> float:
        return self.coefficient * float(n) ** self.alpha

    def derivative_at(self, n: int) -> float:
        return self.coefficient * self.alpha * float(n) ** (self.alpha - 1.0)

    def params(self) -> dict:
        return {"coefficient": self.coefficient, "alpha": self.alpha}


@dataclass(frozen=True)
class ExponentialLoss:
    """gamma_n = c * exp(alpha * n)."""

    c: float
    alpha: float
    kind = "exponential"

    def __post_init__(self):
        _require_positive("exponential prefactor c", self.c)
        _require_positive("exponential rate alpha", self.alpha)

    def value_at(self, n: int) -> float:
        return self.c * math.exp(self.alpha * n)

    def derivative_at(self, n: int) -> float:
        return self.c * self.alpha * math.exp(self.alpha * n)

    def params(self) -> dict:
        return {"c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class TableLoss:
    """Explicitly tabulated loss rates, 1-indexed by site."""

    values: tuple

    kind = "table"

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if len(vals) == 0:
            raise ValueError("table loss profile needs at least one value")
        if any(not math.isfinite(v) or v < 0 for v in vals):
            raise ValueError("table loss values must be finite and >= 0")
        object.__setattr__(self, "values", vals)

    def value_at(self, n: int) -> float:
        if n < 1 or n > len(self.values):
            raise ProfileExhaustedError(
                f"table profile has {len(self.values)} entries, site {n} requested"
            )
        return self.values[n - 1]

    def params(self) -> dict:
        return {"values": list(self.values)}


LossProfile = Union[
    UniformLoss, LogarithmicLoss, LinearLoss, PolynomialLoss, ExponentialLoss, TableLoss
]

_PROFILE_KINDS = {
    cls.kind: cls
    for cls in (UniformLoss, LogarithmicLoss, LinearLoss, PolynomialLoss, ExponentialLoss, TableLoss)
}


def gamma_at(profile: LossProfile, n: int) -> float:
    """Loss rate at site ``n``.

    Closed-form profiles accept ``n >= 0`` (the natural extension at n = 0);
    tabulated profiles are defined for ``1 <= n <= len(values)`` only and
    raise :class:`ProfileExhaustedError` outside that range.
    """
    n = int(n)
    if isinstance(profile, TableLoss):
        return profile.value_at(n)
    if n < 0:
        raise ValueError(f"site index must be >= 0, got {n}")
    return profile.value_at(n)


def profile_to_json(profile: LossProfile) -> dict:
    d = {"kind": profile.kind}
    d.update(profile.params())
    return d


def profile_from_json(data: dict) -> LossProfile:
    if "kind" not in data:
        raise ValueError("loss profile JSON needs a 'kind' field")
    kind = data["kind"]
    if kind not in _PROFILE_KINDS:
        raise ValueError(f"unknown loss profile kind {kind!r}")
    params = {k: v for k, v in data.items() if k != "kind"}
    if kind == "table":
        params["values"] = tuple(params.get("values", ()))
    return _PROFILE_KINDS[kind](**params)


@dataclass(frozen=True)
class HoppingParams:
    """Hopping energies: t1 intra-cell inter-chain, t2 inter-cell scale."""

    t1: float
    t2: float

    def __post_init__(self):
        if not (math.isfinite(self.t1) and math.isfinite(self.t2)):
            raise ValueError("hopping parameters must be finite")
        if self.t2 == 0:
            raise ValueError("t2 must be nonzero (transfer matrices divide by t2)")


@dataclass(frozen=True)
class LatticeSpec:
    """Everything that determines one Hamiltonian instance."""

    hopping: HoppingParams
    length: int
    profile: LossProfile
    boundary: str = "obc"

    def __post_init__(self):
        if int(self.length) < 1:
            raise ValueError(f"length must be >= 1, got {self.length}")
        object.__setattr__(self, "length", int(self.length))
        if self.boundary not in ("obc", "pbc"):
            raise ValueError(f"boundary must be 'obc' or 'pbc', got {self.boundary!r}")
        if isinstance(self.profile, TableLoss) and len(self.profile.values) < self.length:
            raise ValueError(
                f"table profile supplies {len(self.profile.values)} values "
                f"but the lattice has {self.length} cells"
            )

    @property
    def dim(self) -> int:
        return 2 * self.length

    def gammas(self) -> np.ndarray:
        """gamma_1 .. gamma_L as a float array."""
        return np.array([gamma_at(self.profile, n) for n in range(1, self.length + 1)])


def spec_to_json(spec: LatticeSpec) -> dict:
    return {
        "t1": spec.hopping.t1,
        "t2": spec.hopping.t2,
        "L": spec.length,
        "profile": profile_to_json(spec.profile),
        "boundary": spec.boundary,
    }


def spec_from_json(data) -> LatticeSpec:
    if isinstance(data, str):
        data = json.loads(data)
    missing = {"t1", "t2", "L", "profile"} - set(data)
    if missing:
        raise ValueError(f"lattice spec JSON is missing fields: {sorted(missing)}")
    return LatticeSpec(
        hopping=HoppingParams(float(data["t1"]), float(data["t2"])),
        length=int(data["L"]),
        profile=profile_from_json(data["profile"]),
        boundary=data.get("boundary", "obc"),
    )


@dataclass
class StateVector:
    """A 2L-component amplitude vector tagged with its basis."""

    amplitudes: np.ndarray
    basis: str = "original"

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size == 0 or amps.size % 2 != 0:
            raise ValueError(f"amplitudes must be a flat vector of even length, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        if self.basis not in ("original", "rotated"):
            raise ValueError(f"basis must be 'original' or 'rotated', got {self.basis!r}")
        self.amplitudes = amps

    @property
    def length(self) -> int:
        return self.amplitudes.size // 2

    def cell(self, n: int) -> np.ndarray:
        """Two-component amplitude on cell n (1-indexed)."""
        if not 1 <= n <= self.length:
            raise IndexError(f"cell index {n} outside 1..{self.length}")
        return self.amplitudes[2 * (n - 1): 2 * n]

    def cells(self) -> np.ndarray:
        """(L, 2) view of the amplitudes."""
        return self.amplitudes.reshape(self.length, 2)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


# per-cell blocks of the two bases
def _onsite_block(t1: float, g: float, basis: str) -> np.ndarray:
    if basis == "original":
        return np.array([[0.0, t1], [t1, -1j * g]], dtype=complex)
    return np.array([[-1j * g / 2, t1 + g / 2], [t1 - g / 2, -1j * g / 2]], dtype=complex)


def _hop_block(t2: float, basis: str) -> np.ndarray:
    # block mapping cell n to cell n+1, i.e. H[n+1, n]
    if basis == "original":
        return np.array([[1j * t2 / 2, t2 / 2], [t2 / 2, -1j * t2 / 2]], dtype=complex)
    return np.array([[0.0, t2], [0.0, 0.0]], dtype=complex)


def build_hamiltonian(spec: LatticeSpec, basis: str = "original") -> np.ndarray:
    """Dense 2L x 2L Hamiltonian of the lossy two-chain lattice.

    ``basis='original'`` uses the chain-A/chain-B site basis;
    ``basis='rotated'`` the per-cell pi/2-rotated basis in which the
    inter-cell hopping is a single ``t2`` link from (n, B') to (n+1, A').
    Under PBC the cell L -> cell 1 coupling repeats the bulk hopping block,
    so a non-uniform profile keeps its gamma seam across the closure.
    """
    if basis not in ("original", "rotated"):
        raise ValueError(f"basis must be 'original' or 'rotated', got {basis!r}")
    L = spec.length
    t1, t2 = spec.hopping.t1, spec.hopping.t2
    gam = spec.gammas()
    H = np.zeros((2 * L, 2 * L), dtype=complex)
    for n in range(1, L + 1):
        i = 2 * (n - 1)
        H[i:i + 2, i:i + 2] = _onsite_block(t1, gam[n - 1], basis)
    hop = _hop_block(t2, basis)
    for n in range(1, L):
        i, j = 2 * (n - 1), 2 * n
        H[j:j + 2, i:i + 2] = hop
        H[i:i + 2, j:j + 2] = hop.conj().T
    if spec.boundary == "pbc" and L > 1:
        i = 2 * (L - 1)
        H[0:2, i:i + 2] = hop
        H[i:i + 2, 0:2] = hop.conj().T
    return H


def rotation_operator(L: int) -> np.ndarray:
    """Block-diagonal per-cell rotation exp(-i pi/4 sigma_x), unitary."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    r = np.array([[1.0, -1j], [-1j, 1.0]], dtype=complex) / np.sqrt(2.0)
    return np.kron(np.eye(L), r)


_ROT_CELL_INV = np.array([[1.0, 1j], [1j, 1.0]], dtype=complex) / np.sqrt(2.0)  # R^{-1} block


def rotate_state(state: StateVector, direction: str) -> StateVector:
    """Apply the per-cell basis rotation (or its inverse) to a state.

    ``direction='to_rotated'`` maps an original-basis state to the rotated
    basis (psi' = R^{-1} psi per cell); ``'to_original'`` inverts it.
    Raises if the state's basis does not match the requested direction.
    """
    if direction == "to_rotated":
        if state.basis != "original":
            raise ValueError("to_rotated expects an original-basis state")
        block, target = _ROT_CELL_INV, "rotated"
    elif direction == "to_original":
        if state.basis != "rotated":
            raise ValueError("to_original expects a rotated-basis state")
        block, target = _ROT_CELL_INV.conj().T, "original"
    else:
        raise ValueError(f"direction must be 'to_rotated' or 'to_original', got {direction!r}")
    out = (state.cells() @ block.T).reshape(-1)
    return StateVector(out, basis=target)


def decoupled_hamiltonian(spec: LatticeSpec) -> tuple:
    """Split H (original basis) into chain-diagonal and chain-coupling parts.

    Returns ``(H0, Hprime)``: H0 keeps the intra-chain hoppings and the
    on-site losses, Hprime the t1 and t2/2 inter-chain couplings.  The two
    matrices have disjoint support, so ``H0 + Hprime`` reproduces
    ``build_hamiltonian(spec, 'original')`` entry for entry.
    """
    L = spec.length
    t1, t2 = spec.hopping.t1, spec.hopping.t2
    gam = spec.gammas()
    H0 = np.zeros((2 * L, 2 * L), dtype=complex)
    Hp = np.zeros((2 * L, 2 * L), dtype=complex)
    for n in range(1, L + 1):
        i = 2 * (n - 1)
        H0[i + 1, i + 1] = -1j * gam[n - 1]
        Hp[i, i + 1] = t1
        Hp[i + 1, i] = t1
    hop0 = np.array([[1j * t2 / 2, 0.0], [0.0, -1j * t2 / 2]], dtype=complex)
    hopx = np.array([[0.0, t2 / 2], [t2 / 2, 0.0]], dtype=complex)
    edges = [(2 * (n - 1), 2 * n) for n in range(1, L)]
    if spec.boundary == "pbc" and L > 1:
        edges.append((2 * (L - 1), 0))
    for i, j in edges:
        H0[j:j + 2, i:i + 2] = hop0
        H0[i:i + 2, j:j + 2] = hop0.conj().T
        Hp[j:j + 2, i:i + 2] = hopx
        Hp[i:i + 2, j:j + 2] = hopx.conj().T
    return H0, Hp
