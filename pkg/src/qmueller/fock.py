"""Truncated bosonic Fock spaces on two or three modes.

States are labelled by occupation tuples with total photon number at most
``n_max``.  The enumeration is graded by total photon number and, inside
each sector, ordered lexicographically with the first mode descending,
so for two modes the single-photon sector is ``(1, 0), (0, 1)`` i.e.
(L, R).  Every number-conserving operator is block diagonal in this
ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .errors import BasisMismatch, NotUnitary, UnsupportedModeCount
from .stokes import EulerAngles, StokesVector


def _occupations(n_modes: int, total: int):
    """All tuples of n_modes nonnegative ints summing to total, first entry descending."""
    if n_modes == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _occupations(n_modes - 1, total - first):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    n_modes: int
    n_max: int
    states: tuple = field(repr=False, compare=False)
    index: dict = field(repr=False, compare=False, hash=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    def sector(self, n: int) -> slice:
        """Index range of the states with exactly n photons."""
        start = math.comb(n - 1 + self.n_modes, self.n_modes) if n > 0 else 0
        return slice(start, math.comb(n + self.n_modes, self.n_modes))

    def total_photons(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])

    def __len__(self):
        return self.dim


@lru_cache(maxsize=None)
def make_basis(n_modes: int, n_max: int) -> FockBasis:
    if n_modes not in (2, 3):
        raise UnsupportedModeCount(f"only 2 or 3 modes are supported, got {n_modes}")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    states = tuple(s for n in range(n_max + 1) for s in _occupations(n_modes, n))
    return FockBasis(n_modes, n_max, states, {s: k for k, s in enumerate(states)})


def _same_basis(*bases: FockBasis) -> FockBasis:
    first = bases[0]
    for b in bases[1:]:
        if b != first:
            raise BasisMismatch(f"bases differ: {first} vs {b}")
    return first


@dataclass(frozen=True, eq=False)
class FockOperator:
    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"matrix shape {m.shape} does not fit basis of dim {self.basis.dim}")
        object.__setattr__(self, "matrix", m)

    def dag(self) -> "FockOperator":
        return FockOperator(self.basis, self.matrix.conj().T)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator(_same_basis(self.basis, other.basis), self.matrix @ other.matrix)
        return NotImplemented

    def __add__(self, other):
        return FockOperator(_same_basis(self.basis, other.basis), self.matrix + other.matrix)

    def __sub__(self, other):
        return FockOperator(_same_basis(self.basis, other.basis), self.matrix - other.matrix)

    def __mul__(self, c):
        return FockOperator(self.basis, c * self.matrix)

    __rmul__ = __mul__

    @classmethod
    def identity(cls, basis: FockBasis) -> "FockOperator":
        return cls(basis, np.eye(basis.dim))


def commutator(x: FockOperator, y: FockOperator) -> FockOperator:
    return x @ y - y @ x


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.dim, self.basis.dim):
            raise ValueError(f"matrix shape {m.shape} does not fit basis of dim {self.basis.dim}")
        object.__setattr__(self, "matrix", m)

    def check(self, tol: float = 1e-10) -> None:
        """Raise ValueError unless Hermitian, PSD and unit trace within tol."""
        m = self.matrix
        if np.abs(m - m.conj().T).max() > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(0.5 * (m + m.conj().T))[0] < -tol:
            raise ValueError("density matrix has a negative eigenvalue")

    @classmethod
    def from_ket(cls, basis: FockBasis, ket) -> "DensityMatrix":
        ket = np.asarray(ket, dtype=complex)
        ket = ket / np.linalg.norm(ket)
        return cls(basis, np.outer(ket, ket.conj()))

    @classmethod
    def fock_state(cls, basis: FockBasis, occupation) -> "DensityMatrix":
        ket = np.zeros(basis.dim, dtype=complex)
        ket[basis.index[tuple(occupation)]] = 1.0
        return cls(basis, np.outer(ket, ket))

    @classmethod
    def coherent_state(cls, basis: FockBasis, *amplitudes) -> tuple["DensityMatrix", float]:
        """Truncated product coherent state; returns the state and the discarded probability."""
        if len(amplitudes) != basis.n_modes:
            raise ValueError("one amplitude per mode required")
        amps = np.asarray(amplitudes, dtype=complex)
        ket = np.empty(basis.dim, dtype=complex)
        for k, occ in enumerate(basis.states):
            c = 1.0 + 0j
            for a, n in zip(amps, occ):
                c *= a**n / math.sqrt(math.factorial(n))
            ket[k] = c
        ket *= math.exp(-0.5 * float(np.sum(np.abs(amps) ** 2)))
        kept = float(np.vdot(ket, ket).real)
        return cls.from_ket(basis, ket), max(0.0, 1.0 - kept)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


@lru_cache(maxsize=None)
def _annihilators(basis: FockBasis) -> tuple:
    ops = []
    for i in range(basis.n_modes):
        a = np.zeros((basis.dim, basis.dim))
        for col, occ in enumerate(basis.states):
            if occ[i] == 0:
                continue
            lowered = occ[:i] + (occ[i] - 1,) + occ[i + 1 :]
            a[basis.index[lowered], col] = math.sqrt(occ[i])
        a.setflags(write=False)
        ops.append(a)
    return tuple(ops)


def mode_operators(basis: FockBasis) -> list[tuple[FockOperator, FockOperator]]:
    """(a_i, a_i^dagger) for each mode."""
    out = []
    for a in _annihilators(basis):
        op = FockOperator(basis, a)
        out.append((op, op.dag()))
    return out


class StokesOperators(NamedTuple):
    s0: FockOperator
    s1: FockOperator
    s2: FockOperator
    s3: FockOperator


def _require_two_modes(basis: FockBasis):
    if basis.n_modes != 2:
        raise UnsupportedModeCount("Stokes operators need a two-mode basis")


@lru_cache(maxsize=None)
def _stokes_matrices(basis: FockBasis) -> np.ndarray:
    _require_two_modes(basis)
    aL, aR = _annihilators(basis)
    occ = np.array(basis.states, dtype=float)
    LL, RR = np.diag(occ[:, 0]), np.diag(occ[:, 1])
    LR = aL.T @ aR
    out = np.array([LL + RR, LR + LR.T, -1j * (LR - LR.T), LL - RR], dtype=complex)
    out.setflags(write=False)
    return out


def stokes_operators(basis: FockBasis) -> StokesOperators:
    return StokesOperators(*(FockOperator(basis, m) for m in _stokes_matrices(basis)))


def _euler(e) -> tuple[float, float, float]:
    if isinstance(e, EulerAngles):
        return e.phi, e.theta, e.psi
    phi, theta, psi = (float(x) for x in e)
    return phi, theta, psi


def rotation_unitary(basis: FockBasis, e) -> FockOperator:
    """Rotation operator exp(-i psi S3/2) exp(-i theta S2/2) exp(-i phi S3/2).

    Conjugation R S R^dagger rotates the Stokes operator triple by
    ``euler_rotation_matrix(e)``.  ``e`` may also be a raw (phi, theta, psi)
    triple outside the canonical ranges.  Built sector by sector.
    """
    phi, theta, psi = _euler(e)
    s = _stokes_matrices(basis)
    s3 = s[3].diagonal().real
    u = np.zeros((basis.dim, basis.dim), dtype=complex)
    for n in range(basis.n_max + 1):
        blk = basis.sector(n)
        z = s3[blk]
        ry = expm(-0.5j * theta * s[2][blk, blk])
        u[blk, blk] = np.exp(-0.5j * psi * z)[:, None] * ry * np.exp(-0.5j * phi * z)[None, :]
    return FockOperator(basis, u)


def check_unitary(u, tol: float = 1e-10) -> float:
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise NotUnitary("matrix is not square", float("inf"))
    dev = float(np.abs(u.conj().T @ u - np.eye(len(u))).max())
    if dev > tol:
        raise NotUnitary(f"unitarity deviation {dev:.3e} exceeds {tol:.1e}", dev)
    return dev


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for ek, ck in p.items():
        for el, cl in q.items():
            key = tuple(a + b for a, b in zip(ek, el))
            out[key] = out.get(key, 0.0) + ck * cl
    return out


def mode_unitary_to_fock(basis: FockBasis, u, tol: float = 1e-10) -> FockOperator:
    """Fock representation U of a mode unitary, with U^dagger a_i U = sum_j u_ij a_j.

    Equivalently U a_i^dagger U^dagger = sum_j u_ji a_j^dagger, so the
    single-photon sector of U is ``u`` itself.  Each column is obtained
    by expanding the transformed creation-operator monomial acting on
    vacuum.
    """
    u = np.asarray(u, dtype=complex)
    k = basis.n_modes
    if u.shape != (k, k):
        raise ValueError(f"need a {k}x{k} mode unitary, got shape {u.shape}")
    check_unitary(u, tol)
    unit = [tuple(int(i == j) for j in range(k)) for i in range(k)]
    # image of a_i^dagger as a linear polynomial in creation operators
    linear = [{unit[j]: u[j, i] for j in range(k) if u[j, i] != 0} for i in range(k)]
    powers = [[{(0,) * k: 1.0 + 0j}] for _ in range(k)]
    for i in range(k):
        for _ in range(basis.n_max):
            powers[i].append(_poly_mul(powers[i][-1], linear[i]))
    out = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        poly = {(0,) * k: 1.0 + 0j}
        for i, n in enumerate(occ):
            if n:
                poly = _poly_mul(poly, powers[i][n])
        norm = math.prod(math.factorial(n) for n in occ)
        for mono, c in poly.items():
            weight = math.prod(math.factorial(m) for m in mono)
            out[basis.index[mono], col] = c * math.sqrt(weight / norm)
    return FockOperator(basis, out)


def expectation(rho: DensityMatrix, op: FockOperator) -> complex:
    _same_basis(rho.basis, op.basis)
    return complex(np.einsum("ij,ji->", rho.matrix, op.matrix))


def stokes_expectations(rho: DensityMatrix) -> StokesVector:
    _require_two_modes(rho.basis)
    s = _stokes_matrices(rho.basis)
    return StokesVector(*(float(np.einsum("ij,ji->", rho.matrix, m).real) for m in s))
