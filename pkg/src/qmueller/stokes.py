"""Classical Stokes/Mueller calculus.

Axis convention: components 1, 2, 3 are the circular-basis Stokes
parameters, i.e. for a field spinor ``E = (E_L, E_R)``

    S_mu = E^dagger sigma_mu E

with sigma_0 = identity and sigma_1..3 the Pauli x, y, z matrices in the
(L, R) basis.  Component 3 is the L/R population difference and is the
"z" axis of the Euler-angle rotations.  Jones matrices act on (E_L, E_R).

Mueller matrices are plain ``(4, 4)`` float arrays, coherency matrices
``(4, 4)`` complex arrays and Jones matrices ``(2, 2)`` complex arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateDecomposition,
    DegenerateIntensity,
    InvalidConvexWeights,
    InvalidDepolarizer,
    InvalidTransmittance,
    NotPhysical,
)

TWO_PI = 2.0 * math.pi

PAULI = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)

# sigma_mu (x) conj(sigma_nu), indexed [mu, nu]
_COHERENCY_BASIS = np.array(
    [[np.kron(PAULI[mu], PAULI[nu].conj()) for nu in range(4)] for mu in range(4)]
)

LORENTZ_METRIC = np.diag([1.0, -1.0, -1.0, -1.0])


class StokesVector(NamedTuple):
    s0: float
    s1: float
    s2: float
    s3: float

    @classmethod
    def from_array(cls, a) -> "StokesVector":
        a = np.asarray(a, dtype=float).reshape(4)
        return cls(*(float(x) for x in a))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


@dataclass(frozen=True)
class EulerAngles:
    """Euler angles in radians: phi in [0, 2pi), theta in [0, pi], psi in [0, 2pi)."""

    phi: float = 0.0
    theta: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        for name in ("phi", "theta", "psi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name, lo, hi, closed in (
            ("phi", 0.0, TWO_PI, False),
            ("theta", 0.0, math.pi, True),
            ("psi", 0.0, TWO_PI, False),
        ):
            v = getattr(self, name)
            if not math.isfinite(v) or v < lo or v > hi or (v == hi and not closed):
                raise ValueError(f"{name}={v!r} outside its range")

    def __iter__(self):
        return iter((self.phi, self.theta, self.psi))

    @classmethod
    def wrap(cls, phi: float, theta: float, psi: float) -> "EulerAngles":
        """Canonical angles describing the same rotation as arbitrary reals.

        Uses Rz(a) Ry(-b) Rz(c) = Rz(a + pi) Ry(b) Rz(c - pi) for negative
        polar angles.  The SU(2) lift may differ by an overall sign.
        """
        theta = math.remainder(theta, TWO_PI)
        if theta < 0:
            theta = -theta
            phi += math.pi
            psi -= math.pi
        phi, psi = phi % TWO_PI, psi % TWO_PI
        # float modulo can land exactly on 2pi
        phi = 0.0 if phi >= TWO_PI else phi
        psi = 0.0 if psi >= TWO_PI else psi
        return cls(phi, min(theta, math.pi), psi)

    def inverse(self) -> "EulerAngles":
        """Angles of the inverse rotation."""
        return EulerAngles.wrap(-self.psi, -self.theta, -self.phi)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "EulerAngles":
        """Haar-distributed rotation (uniform azimuths, uniform cos(theta))."""
        phi, psi = rng.uniform(0.0, TWO_PI, size=2)
        theta = math.acos(rng.uniform(-1.0, 1.0))
        return cls(float(phi), theta, float(psi))


def degree_of_polarization(s) -> float:
    s = np.asarray(s, dtype=float)
    if not s[0] > 0:
        raise DegenerateIntensity(f"degree of polarization needs s0 > 0, got {s[0]!r}")
    return float(np.linalg.norm(s[1:]) / s[0])


def mueller_apply(m, s) -> StokesVector:
    return StokesVector.from_array(np.asarray(m, dtype=float) @ np.asarray(s, dtype=float))


def euler_rotation_matrix(e: EulerAngles) -> np.ndarray:
    """3x3 matrix T with R S R^dagger = T S for the rotation operator R(e).

    ``e`` is an EulerAngles or any (phi, theta, psi) triple.
    Closed form of the Euler-angle parametrization (rotation about 3 by
    phi, then about 2 by theta, then about 3 by psi).
    """
    phi, theta, psi = e
    cf, sf = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    return np.array(
        [
            [ct * cf * cp - sf * sp, cp * sf + ct * cf * sp, -cf * st],
            [-ct * cp * sf - cf * sp, cf * cp - ct * sf * sp, st * sf],
            [cp * st, st * sp, ct],
        ]
    )


def retarder(e: EulerAngles) -> np.ndarray:
    m = np.eye(4)
    m[1:, 1:] = euler_rotation_matrix(e).T
    return m


def retarder_jones(e: EulerAngles) -> np.ndarray:
    """SU(2) Jones matrix whose Mueller matrix is ``retarder(e)``.

    Transpose of the creation-operator transform
    a_i^dagger -> sum_j m_ij a_j^dagger.
    """
    h = 0.5
    c, s = math.cos(h * e.theta), math.sin(h * e.theta)
    creation = np.array(
        [
            [np.exp(-1j * h * (e.phi + e.psi)) * c, np.exp(-1j * h * (e.phi - e.psi)) * s],
            [-np.exp(1j * h * (e.phi - e.psi)) * s, np.exp(1j * h * (e.phi + e.psi)) * c],
        ]
    )
    return creation.T


def _check_transmittance(q, r):
    for name, v in (("q", q), ("r", r)):
        if not 0.0 <= v <= 1.0:
            raise InvalidTransmittance(f"{name}={v!r} outside [0, 1]")


def diattenuator_jones(q: float, r: float, theta: float = 0.0, psi: float = 0.0) -> np.ndarray:
    """Jones matrix of a diattenuator with transmittances q, r along the axis (theta, psi)."""
    _check_transmittance(q, r)
    a, b = math.sqrt(q) + math.sqrt(r), math.sqrt(q) - math.sqrt(r)
    creation = 0.5 * np.array(
        [
            [a + b * math.cos(theta), np.exp(1j * psi) * b * math.sin(theta)],
            [np.exp(-1j * psi) * b * math.sin(theta), a - b * math.cos(theta)],
        ]
    )
    return creation.T


def diattenuator(q: float, r: float, theta: float = 0.0, psi: float = 0.0) -> np.ndarray:
    """Closed-form Mueller matrix of a diattenuator.

    q and r are the transmittances of the two eigenpolarizations; the
    transmitted-with-q axis points along (sin theta cos psi,
    sin theta sin psi, cos theta) in Stokes space.
    """
    _check_transmittance(q, r)
    g = math.sqrt(q * r)
    plus, minus = q + r + 2 * g, q + r - 2 * g
    d = 0.5 * (q - r)
    ct, st = math.cos(theta), math.sin(theta)
    cp, sp = math.cos(psi), math.sin(psi)
    s2t, c2p, s2p = math.sin(2 * theta), math.cos(2 * psi), math.sin(2 * psi)
    return np.array(
        [
            [0.5 * (q + r), d * cp * st, d * st * sp, d * ct],
            [
                d * cp * st,
                0.25 * (plus - (ct**2 - c2p * st**2) * minus),
                0.25 * minus * st**2 * s2p,
                0.25 * minus * cp * s2t,
            ],
            [
                d * st * sp,
                0.25 * minus * st**2 * s2p,
                0.25 * (plus - (ct**2 + c2p * st**2) * minus),
                0.25 * minus * s2t * sp,
            ],
            [d * ct, 0.25 * minus * cp * s2t, 0.25 * minus * s2t * sp, 0.25 * (plus + math.cos(2 * theta) * minus)],
        ]
    )


def depolarizer_sym(m3, tol: float = 1e-12) -> np.ndarray:
    m3 = np.asarray(m3, dtype=float)
    if m3.shape != (3, 3) or np.abs(m3 - m3.T).max() > tol:
        raise InvalidDepolarizer("depolarizer block must be a symmetric 3x3 matrix")
    w = np.linalg.eigvalsh(m3)
    if w.min() < -1 - tol or w.max() > 1 + tol:
        raise InvalidDepolarizer(f"depolarizer eigenvalues {w} outside [-1, 1]")
    m = np.eye(4)
    m[1:, 1:] = m3
    return m


def compose(m2, m1) -> np.ndarray:
    """Mueller matrix of element m1 followed by element m2."""
    return np.asarray(m2, dtype=float) @ np.asarray(m1, dtype=float)


def check_convex_weights(weights, tol: float = 1e-12) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise InvalidConvexWeights("need a nonempty list of weights")
    if (w < 0).any():
        raise InvalidConvexWeights(f"negative weight in {w}")
    if abs(w.sum() - 1.0) > tol:
        raise InvalidConvexWeights(f"weights sum to {w.sum()!r}, not 1")
    return w


def convex_combine(weights, ms) -> np.ndarray:
    w = check_convex_weights(weights)
    ms = np.asarray(ms, dtype=float)
    if len(ms) != len(w):
        raise InvalidConvexWeights("one weight per matrix required")
    return np.tensordot(w, ms, axes=1)


def jones_to_mueller(j) -> np.ndarray:
    """M_{mu nu} = 1/2 tr(sigma_mu J sigma_nu J^dagger)."""
    j = np.asarray(j, dtype=complex)
    m = np.einsum("aij,jk,bkl,il->ab", PAULI, j, PAULI, j.conj())
    return 0.5 * m.real


def coherency(m) -> np.ndarray:
    """H = 1/4 sum m_{mu nu} sigma_mu (x) conj(sigma_nu); trace(H) = m00."""
    return 0.25 * np.einsum("ab,abij->ij", np.asarray(m, dtype=float), _COHERENCY_BASIS)


def mueller_from_coherency(h) -> np.ndarray:
    return np.einsum("ij,abji->ab", np.asarray(h, dtype=complex), _COHERENCY_BASIS).real


@dataclass(frozen=True)
class PhysicalityReport:
    physical: bool
    eigenvalues: tuple
    min_eigenvalue: float
    tol: float

    def __bool__(self):
        return self.physical


def is_physical(m, tol: float = 1e-9) -> PhysicalityReport:
    """Coherency-positivity test: min eigenvalue >= -tol * ||H||."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    w = np.linalg.eigvalsh(coherency(m))
    scale = max(np.abs(w).max(), np.finfo(float).tiny)
    return PhysicalityReport(bool(w[0] >= -tol * scale), tuple(float(x) for x in w), float(w[0]), tol)


def cloude_decompose(m, tol: float = 1e-9) -> list[tuple[float, np.ndarray]]:
    """Split m into at most four weighted nondepolarizing Mueller matrices.

    Each returned matrix has m00 = 1 and the weights (coherency
    eigenvalues) sum to m00 of the input, sorted descending.
    """
    report = is_physical(m, tol)
    if not report:
        raise NotPhysical(f"coherency eigenvalue {report.min_eigenvalue:.3e} < 0", report.eigenvalues)
    w, v = np.linalg.eigh(coherency(m))
    cut = tol * np.abs(w).max()
    terms = []
    for k in np.argsort(w)[::-1]:
        if w[k] <= cut:
            continue
        vec = v[:, k]
        terms.append((float(w[k]), mueller_from_coherency(np.outer(vec, vec.conj()))))
    return terms


class LuChipman(NamedTuple):
    depolarizer: np.ndarray
    diattenuator: np.ndarray
    retarder: np.ndarray


def _diattenuator_from_vector(m00: float, dvec: np.ndarray) -> np.ndarray:
    d = np.linalg.norm(dvec)
    root = math.sqrt(max(0.0, 1.0 - d * d))
    block = root * np.eye(3)
    if d > 0:
        u = dvec / d
        block += (1.0 - root) * np.outer(u, u)
    out = np.empty((4, 4))
    out[0, 0] = 1.0
    out[0, 1:] = dvec
    out[1:, 0] = dvec
    out[1:, 1:] = block
    return m00 * out


def lu_chipman(m, tol: float = 1e-9) -> LuChipman:
    """Polar decomposition m = depolarizer @ diattenuator @ retarder.

    The retarder acts first.  Internally the classic split
    m = depolarizer @ retarder @ D' is computed and the diattenuator is
    moved past the retarder, D = R D' R^T.  A negative-determinant
    depolarizer block is absorbed so the retarder block keeps det = +1.
    """
    m = np.asarray(m, dtype=float)
    m00 = m[0, 0]
    if not m00 > 0:
        raise DegenerateDecomposition("m00 must be positive")
    dvec = m[0, 1:] / m00
    d_prime = _diattenuator_from_vector(m00, dvec)
    if 1.0 - dvec @ dvec <= tol:
        raise DegenerateDecomposition(
            f"diattenuation {np.linalg.norm(dvec):.12f} is singular",
            partial={"diattenuator_prime": d_prime},
        )
    mp = m @ np.linalg.inv(d_prime)
    u, s, vt = np.linalg.svd(mp[1:, 1:])
    flip = np.linalg.det(u @ vt) < 0
    if flip and s[2] <= tol * max(s[0], 1.0):
        # singular depolarizer block: the sign of the null direction is free
        u[:, 2] = -u[:, 2]
        flip = False
    sign = -1.0 if flip else 1.0
    m_dep = sign * (u * s) @ u.T
    m_ret = sign * u @ vt
    dep = np.eye(4)
    dep[1:, 0] = mp[1:, 0]
    dep[1:, 1:] = m_dep
    ret = np.eye(4)
    ret[1:, 1:] = m_ret
    return LuChipman(dep, ret @ d_prime @ ret.T, ret)


def lorentz_residual(m) -> float:
    """Relative distance of m^T G m from a multiple of the Minkowski metric G."""
    m = np.asarray(m, dtype=float)
    g = m.T @ LORENTZ_METRIC @ m
    norm = np.linalg.norm(g)
    if norm == 0:
        return 0.0
    return float(np.linalg.norm(g - g[0, 0] * LORENTZ_METRIC) / norm)


@dataclass(frozen=True)
class Classification:
    label: str
    eigenvalues: tuple
    eigen_ratio: float
    lorentz_residual: float
    tol: float

    @property
    def nondepolarizing(self) -> bool:
        return self.label == "nondepolarizing"


def classify(m, tol: float = 1e-9) -> Classification:
    w = np.sort(np.linalg.eigvalsh(coherency(m)))[::-1]
    ratio = float(w[1] / w[0]) if w[0] > 0 else 0.0
    label = "nondepolarizing" if w[1] <= tol * w[0] or w[0] <= 0 else "depolarizing"
    return Classification(label, tuple(float(x) for x in w), ratio, lorentz_residual(m), tol)


def random_nondepolarizing_factors(rng: np.random.Generator, count: int) -> list[np.ndarray]:
    """Mueller matrices of random passive Jones matrices (spectral norm <= 1)."""
    out = []
    for _ in range(count):
        j = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        j /= np.linalg.norm(j, 2) * rng.uniform(1.0, 1.5)
        out.append(jones_to_mueller(j))
    return out


def random_physical_mueller(rng: np.random.Generator, terms: Sequence[int] = (2, 3, 4)) -> np.ndarray:
    """Convex mixture of random nondepolarizing factors."""
    k = int(rng.choice(terms))
    w = rng.dirichlet(np.ones(k))
    return convex_combine(w, random_nondepolarizing_factors(rng, k))
