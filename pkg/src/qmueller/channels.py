"""Kraus channels on the two-mode Fock space and their Mueller matrices.

A channel maps rho -> sum_l K_l rho K_l^dagger.  Every constructor tags
the photon-number behaviour of its Kraus operators so that operator
identities can be checked exactly on the truncated space.  In the
single-photon sector a Kraus operator is a Jones matrix acting on
(E_L, E_R).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.stats import unitary_group

from . import stokes as sc
from .errors import (
    BasisMismatch,
    InvalidProbability,
    InvalidTransmittance,
    NoSingleModeDilation,
    NotMuellerRepresentable,
    NotUnitary,
    TruncationViolation,
    UnsupportedModeCount,
)
from .fock import (
    DensityMatrix,
    FockBasis,
    FockOperator,
    check_unitary,
    make_basis,
    mode_unitary_to_fock,
    rotation_unitary,
    _stokes_matrices,
)
from .quadrature import QuadratureGrid, flat_grid, haar_grid
from .stokes import EulerAngles

PRUNE = 1e-14
_BEHAVIOUR_RANK = {"conserving": 0, "nonincreasing": 1, "other": 2}


@dataclass(frozen=True, eq=False)
class KrausChannel:
    basis: FockBasis
    kraus: tuple  # of (dim, dim) complex arrays
    number_behavior: str = "other"
    provenance: str = ""
    dilation_conserves_number: bool | None = None
    valid_nmax: int | None = None

    def __post_init__(self):
        if self.basis.n_modes != 2:
            raise UnsupportedModeCount("channels act on a two-mode basis")
        if self.number_behavior not in _BEHAVIOUR_RANK:
            raise ValueError(f"unknown number behavior {self.number_behavior!r}")
        ks = tuple(np.asarray(k, dtype=complex) for k in self.kraus)
        if not ks:
            raise ValueError("a channel needs at least one Kraus operator")
        for k in ks:
            if k.shape != (self.basis.dim, self.basis.dim):
                raise ValueError("Kraus operator does not fit the basis")
        object.__setattr__(self, "kraus", ks)
        if self.valid_nmax is None:
            object.__setattr__(self, "valid_nmax", self.basis.n_max)

    @property
    def ops(self) -> list[FockOperator]:
        return [FockOperator(self.basis, k) for k in self.kraus]

    def valid_indices(self) -> np.ndarray:
        return np.flatnonzero(self.basis.total_photons() <= self.valid_nmax)

    def __len__(self):
        return len(self.kraus)


def _pruned(ks) -> tuple:
    kept = tuple(k for k in ks if np.abs(k).max() >= PRUNE)
    return kept or (np.zeros_like(ks[0]),)


def _worst(*behaviours) -> str:
    return max(behaviours, key=_BEHAVIOUR_RANK.__getitem__)


def _all_true(flags):
    if any(f is False for f in flags):
        return False
    if all(f is True for f in flags):
        return True
    return None


def unitary_channel(u: FockOperator, provenance: str = "unitary") -> KrausChannel:
    check_unitary(u.matrix)
    return KrausChannel(u.basis, (u.matrix,), "conserving", provenance, True)


def identity_channel(basis: FockBasis) -> KrausChannel:
    return KrausChannel(basis, (np.eye(basis.dim),), "conserving", "identity", True)


def apply(ch: KrausChannel, rho: DensityMatrix, tol: float = 1e-12) -> DensityMatrix:
    if rho.basis != ch.basis:
        raise BasisMismatch("state and channel live on different bases")
    outside = ch.basis.total_photons() > ch.valid_nmax
    if outside.any() and np.abs(rho.matrix[outside]).max() > tol:
        raise TruncationViolation(f"state has support above {ch.valid_nmax} photons")
    out = sum(k @ rho.matrix @ k.conj().T for k in ch.kraus)
    return DensityMatrix(ch.basis, out)


@dataclass(frozen=True)
class CPTPReport:
    passed: bool
    deviation: float
    tol: float

    def __bool__(self):
        return self.passed


def is_cptp(ch: KrausChannel, tol: float = 1e-10) -> CPTPReport:
    """Completeness sum_l K_l^dagger K_l = 1 on the validity sub-block (max-entry deviation)."""
    idx = ch.valid_indices()
    total = sum(k.conj().T @ k for k in ch.kraus)[np.ix_(idx, idx)]
    dev = float(np.abs(total - np.eye(len(idx))).max())
    return CPTPReport(dev <= tol, dev, tol)


def compose_channels(second: KrausChannel, first: KrausChannel) -> KrausChannel:
    """Channel applying ``first`` then ``second``."""
    if second.basis != first.basis:
        raise BasisMismatch("cannot compose channels on different bases")
    ks = _pruned([k2 @ k1 for k2 in second.kraus for k1 in first.kraus])
    return KrausChannel(
        first.basis,
        ks,
        _worst(first.number_behavior, second.number_behavior),
        f"compose({second.provenance}, {first.provenance})",
        _all_true([first.dilation_conserves_number, second.dilation_conserves_number]),
        min(first.valid_nmax, second.valid_nmax),
    )


def compose_many(*chs: KrausChannel) -> KrausChannel:
    """compose_many(c_n, ..., c_1) applies c_1 first."""
    out = chs[-1]
    for ch in reversed(chs[:-1]):
        out = compose_channels(ch, out)
    return out


def channel_from_ancilla_unitary(
    u_fock: FockOperator, ancilla_mode: int = 2, basis: FockBasis | None = None
) -> KrausChannel:
    """Kraus operators K_l = <l|_v U |0>_v of a three-mode unitary with vacuum ancilla v."""
    b3 = u_fock.basis
    if b3.n_modes != 3:
        raise UnsupportedModeCount("ancilla construction needs a three-mode unitary")
    check_unitary(u_fock.matrix)
    basis = basis or make_basis(2, b3.n_max)
    if basis.n_max != b3.n_max:
        raise BasisMismatch("two-mode basis must share the photon cutoff")

    def embed(occ2, l):
        occ = list(occ2)
        occ.insert(ancilla_mode, l)
        return b3.index.get(tuple(occ))

    cols = np.array([embed(s, 0) for s in basis.states])
    ks = []
    for l in range(b3.n_max + 1):
        rows = [embed(s, l) for s in basis.states]
        k = np.zeros((basis.dim, basis.dim), dtype=complex)
        ok = np.array([r is not None for r in rows])
        k[ok] = u_fock.matrix[np.array([r for r in rows if r is not None])][:, cols]
        ks.append(k)
    return KrausChannel(basis, _pruned(ks), "nonincreasing", "ancilla unitary", True)


def retarder_channel(e: EulerAngles, basis: FockBasis) -> KrausChannel:
    return KrausChannel(basis, (rotation_unitary(basis, e).matrix,), "conserving", f"retarder{tuple(e)}", True)


def _beamsplitter_to_vacuum(t: float, mode: int) -> np.ndarray:
    """Three-mode unitary sending a fraction 1 - t of ``mode`` into the ancilla (mode 2)."""
    u = np.eye(3, dtype=complex)
    a, b = math.sqrt(t), math.sqrt(1.0 - t)
    u[mode, mode], u[2, mode] = a, b
    u[mode, 2], u[2, 2] = -b, a
    return u


def attenuation(q: float, r: float, basis: FockBasis) -> KrausChannel:
    """Independent loss on L (transmittance q) and R (transmittance r), one vacuum each."""
    for name, v in (("q", q), ("r", r)):
        if not 0.0 <= v <= 1.0:
            raise InvalidTransmittance(f"{name}={v!r} outside [0, 1]")
    b3 = make_basis(3, basis.n_max)
    chL = channel_from_ancilla_unitary(mode_unitary_to_fock(b3, _beamsplitter_to_vacuum(q, 0)), basis=basis)
    chR = channel_from_ancilla_unitary(mode_unitary_to_fock(b3, _beamsplitter_to_vacuum(r, 1)), basis=basis)
    return replace(compose_channels(chL, chR), provenance=f"attenuation(q={q!r}, r={r!r})")


def diattenuator_channel_two_vacuum(q: float, r: float, theta: float, psi: float, basis: FockBasis) -> KrausChannel:
    """Rotate the diattenuation axis to the 3-axis, attenuate L and R separately, rotate back.

    Single-photon action equals ``stokes.diattenuator_jones(q, r, theta, psi)``.
    """
    rot = rotation_unitary(basis, (0.0, theta, psi))
    back = KrausChannel(basis, (rot.matrix.conj().T,), "conserving", "rotate", True)
    fwd = KrausChannel(basis, (rot.matrix,), "conserving", "rotate", True)
    ch = compose_many(fwd, attenuation(q, r, basis), back)
    return replace(
        ch,
        number_behavior="conserving" if q == r == 1 else "nonincreasing",
        provenance=f"diattenuator2vac(q={q!r}, r={r!r}, theta={theta!r}, psi={psi!r})",
    )


def two_vacuum_transfer_matrix(q: float, r: float, theta: float, psi: float) -> np.ndarray:
    """4x4 unitary transfer matrix of the two-vacuum diattenuator.

    Mode order (v1, L, R, v2); the middle 2x2 block is the transpose of
    ``stokes.diattenuator_jones``.
    """
    for name, v in (("q", q), ("r", r)):
        if not 0.0 <= v <= 1.0:
            raise InvalidTransmittance(f"{name}={v!r} outside [0, 1]")
    sq, sr, cq, cr = math.sqrt(q), math.sqrt(r), math.sqrt(1 - q), math.sqrt(1 - r)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    ep, em = np.exp(0.5j * psi), np.exp(-0.5j * psi)
    a, b = sq + sr, sq - sr
    return np.array(
        [
            [sq, em * cq * c, ep * cq * s, 0],
            [-ep * cq * c, 0.5 * (a + b * math.cos(theta)), 0.5 * ep**2 * b * math.sin(theta), -ep * cr * s],
            [-em * cq * s, 0.5 * em**2 * b * math.sin(theta), 0.5 * (a - b * math.cos(theta)), em * cr * c],
            [0, em * cr * s, -ep * cr * c, sr],
        ]
    )


def complete_su3(block, tol: float = 1e-10) -> np.ndarray:
    """Special-unitary 3x3 matrix whose upper-left 2x2 block is ``block``.

    Such a completion exists only when 1 - block^dagger block has rank at
    most one, i.e. at least one singular value of the block equals 1.
    The completion is a Givens rotation on the remaining singular
    direction followed by a phase fix of the ancilla column.
    """
    b = np.asarray(block, dtype=complex)
    v, s, wh = np.linalg.svd(b)
    if abs(s[0] - 1) > tol:
        raise NoSingleModeDilation(
            f"singular values {s} admit no single-vacuum dilation (need one equal to 1, both <= 1)", s
        )
    k = 1  # s[1] <= s[0], so the free direction is the smaller one
    s = np.minimum(s, 1.0)
    c = math.sqrt(max(0.0, 1.0 - s[k] ** 2))
    g = np.diag([s[0], s[1], 1.0]).astype(complex)
    g[k, 2], g[2, k], g[2, 2] = -c, c, s[k]
    vv = np.eye(3, dtype=complex)
    vv[:2, :2] = v
    ww = np.eye(3, dtype=complex)
    ww[:2, :2] = wh
    u = vv @ g @ ww
    u[:, 2] /= np.linalg.det(u)
    check_unitary(u, tol)
    return u


def random_su3(rng: np.random.Generator) -> np.ndarray:
    u = unitary_group.rvs(3, random_state=rng)
    return u / np.linalg.det(u) ** (1.0 / 3.0)


def nondepolarizing_channel_su3(u3, basis: FockBasis) -> KrausChannel:
    """One-vacuum dilation; the upper-left 2x2 block of u3 is the Jones matrix."""
    u3 = np.asarray(u3, dtype=complex)
    check_unitary(u3)
    ch = channel_from_ancilla_unitary(mode_unitary_to_fock(make_basis(3, basis.n_max), u3), basis=basis)
    return replace(ch, provenance="su3")


def jones_channel(j, basis: FockBasis, tol: float = 1e-12) -> KrausChannel:
    """Passive channel with Jones matrix j (spectral norm <= 1), two vacuum ancillas.

    Singular value decomposition j = V diag(s) W^dagger: rotate by
    W^dagger, attenuate L and R by s^2, rotate by V.
    """
    v, s, wh = np.linalg.svd(np.asarray(j, dtype=complex))
    if s[0] > 1 + tol:
        raise InvalidTransmittance(f"Jones matrix has gain {s[0]!r} > 1")
    s = np.minimum(s, 1.0)
    b = basis
    ch = compose_many(
        unitary_channel(mode_unitary_to_fock(b, v)),
        attenuation(float(s[0] ** 2), float(s[1] ** 2), b),
        unitary_channel(mode_unitary_to_fock(b, wh)),
    )
    return replace(ch, provenance="jones")


def check_probability(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"p={p!r} outside [0, 1]")


def haar_depolarizer(p: float, basis: FockBasis, grid: QuadratureGrid | None = None) -> KrausChannel:
    """Keep the state with probability p, otherwise apply a Haar-random rotation."""
    check_probability(p)
    grid = grid or haar_grid()
    if grid.measure != "haar":
        raise ValueError("haar_depolarizer needs a haar quadrature grid")
    ks = [math.sqrt(p) * np.eye(basis.dim)] if p > 0 else []
    if p < 1:
        for e, w in zip(grid.nodes, grid.weights):
            ks.append(math.sqrt((1 - p) * w) * rotation_unitary(basis, e).matrix)
    return KrausChannel(basis, _pruned(ks), "conserving", f"haar_depolarizer(p={p!r})", None)


def convex_combine_channels(weights, chs: Sequence[KrausChannel]) -> KrausChannel:
    w = sc.check_convex_weights(weights)
    if len(w) != len(chs):
        raise ValueError("one weight per channel required")
    basis = chs[0].basis
    for ch in chs[1:]:
        if ch.basis != basis:
            raise BasisMismatch("channels live on different bases")
    ks = [math.sqrt(p) * k for p, ch in zip(w, chs) if p > 0 for k in ch.kraus]
    used = [ch for p, ch in zip(w, chs) if p > 0]
    return KrausChannel(
        basis,
        _pruned(ks),
        _worst(*(ch.number_behavior for ch in used)),
        "convex(" + ", ".join(ch.provenance for ch in used) + ")",
        None if len(used) > 1 else used[0].dilation_conserves_number,
        min(ch.valid_nmax for ch in used),
    )


def remix_kraus(ch: KrausChannel, u) -> KrausChannel:
    """K'_m = sum_l u_ml K_l; the list is padded with zero operators to match u."""
    u = np.asarray(u, dtype=complex)
    n = len(ch.kraus)
    if u.ndim != 2 or u.shape[0] != u.shape[1] or u.shape[0] < n:
        raise NotUnitary(f"remix matrix must be square with size >= {n}", float("inf"))
    check_unitary(u)
    stack = np.zeros((u.shape[0], ch.basis.dim, ch.basis.dim), dtype=complex)
    stack[:n] = np.array(ch.kraus)
    mixed = np.tensordot(u, stack, axes=1)
    return replace(ch, kraus=_pruned(list(mixed)), provenance=f"remix({ch.provenance})")


def mueller_channel(m, basis: FockBasis, tol: float = 1e-9) -> KrausChannel:
    """Convex mixture of passive Jones channels realizing a physical Mueller matrix.

    Uses the coherency eigen-decomposition; requires m00 = 1 and every
    normalized nondepolarizing term to be passive.
    """
    m = np.asarray(m, dtype=float)
    if abs(m[0, 0] - 1) > tol:
        raise ValueError("synthesis needs m00 = 1")
    terms = sc.cloude_decompose(m, tol)
    weights = np.array([w for w, _ in terms])
    weights /= weights.sum()
    chs = [jones_channel(jones_from_mueller(mk), basis, tol) for _, mk in terms]
    return replace(convex_combine_channels(weights, chs), provenance="mueller synthesis")


def jones_from_mueller(m) -> np.ndarray:
    """Jones matrix (up to global phase) of a nondepolarizing Mueller matrix."""
    w, v = np.linalg.eigh(sc.coherency(m))
    return math.sqrt(2 * max(w[-1], 0.0)) * v[:, -1].reshape(2, 2)


# weight-function depolarizers

@dataclass(frozen=True)
class WeightFunctionSpec:
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    e: float = 0.0
    f: float = 0.0
    g: float = 0.0
    h: float = 0.0
    i: float = 0.0
    j: float = 1.0

    def is_symmetric(self, tol: float = 1e-12) -> bool:
        return abs(self.b - self.d) <= tol and abs(self.c - self.g) <= tol and abs(self.f - self.h) <= tol

    def __call__(self, phi, theta, psi):
        """Weight density with respect to d(phi) d(theta) d(psi)."""
        sf, cf = np.sin(phi), np.cos(phi)
        sp, cp = np.sin(psi), np.cos(psi)
        num = (
            -4 * self.a * sp * sf
            + 4 * self.b * sp * cf
            - math.pi * self.c * cp
            - 4 * self.d * cp * sf
            + 4 * self.e * cp * cf
            + math.pi * self.f * sp
            + math.pi * self.g * cf
            + math.pi * self.h * sf
            + 2 * self.i * np.cos(theta)
            + self.j
        )
        return num / (4 * math.pi**3)


def weighted_rotation_mueller(spec: WeightFunctionSpec) -> np.ndarray:
    s = spec
    return np.array(
        [[s.j, 0, 0, 0], [0, s.a, s.b, s.c], [0, s.d, s.e, s.f], [0, s.g, s.h, s.i]], dtype=float
    )


def _node_rotation(e) -> tuple[float, float, float]:
    # Kraus operator at node e is the rotation with all angles negated
    phi, theta, psi = e
    return -phi, -theta, -psi


def weighted_rotation_mueller_quadrature(spec: WeightFunctionSpec, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Quadrature of f(e) times the Mueller matrix of the node rotation."""
    grid = grid or flat_grid()
    if grid.measure != "flat":
        raise ValueError("weight functions integrate against the flat grid")
    out = np.zeros((4, 4))
    for e, w in zip(grid.nodes, grid.weights):
        m = np.eye(4)
        m[1:, 1:] = sc.euler_rotation_matrix(_node_rotation(e)).T
        out += w * float(spec(*e)) * m
    return out


@dataclass(frozen=True)
class PositivityFailure:
    min_value: float
    n_violations: int
    n_nodes: int
    violating_nodes: tuple  # worst nodes as (phi, theta, psi, f)

    def __bool__(self):
        return False


def positivity_scan(spec: WeightFunctionSpec, n: int = 64, tol: float = 1e-12, keep: int = 32):
    """Evaluate f on a uniform n^3 grid (theta endpoints included).

    Returns None when f >= -tol everywhere, else a PositivityFailure.
    """
    az = 2 * math.pi * np.arange(n) / n
    th = np.linspace(0.0, math.pi, n)
    phi, theta, psi = np.meshgrid(az, th, az, indexing="ij")
    f = spec(phi, theta, psi)
    bad = f < -tol
    if not bad.any():
        return None
    flat = f.ravel()
    order = np.argsort(flat)[: min(keep, int(bad.sum()))]
    nodes = tuple(
        (float(phi.ravel()[k]), float(theta.ravel()[k]), float(psi.ravel()[k]), float(flat[k])) for k in order
    )
    return PositivityFailure(float(flat.min()), int(bad.sum()), int(f.size), nodes)


def weighted_rotation_channel(
    spec: WeightFunctionSpec, basis: FockBasis, grid: QuadratureGrid | None = None, scan: int = 64
):
    """Kraus set sqrt(f(e_k) w_k) R(e_k) on the flat grid, or a PositivityFailure."""
    if spec.j != 1:
        raise ValueError("trace preservation needs j = 1")
    grid = grid or flat_grid()
    if grid.measure != "flat":
        raise ValueError("weight functions integrate against the flat grid")
    failure = positivity_scan(spec, scan)
    fvals = np.array([float(spec(*e)) for e in grid.nodes])
    if failure is None and fvals.min() < -1e-12:
        k = int(np.argmin(fvals))
        failure = PositivityFailure(float(fvals[k]), int((fvals < -1e-12).sum()), len(grid), (tuple(grid.nodes[k]) + (float(fvals[k]),),))
    if failure is not None:
        return failure
    ks = [
        math.sqrt(max(fv, 0.0) * w) * rotation_unitary(basis, _node_rotation(e)).matrix
        for e, w, fv in zip(grid.nodes, grid.weights, fvals)
    ]
    return KrausChannel(basis, _pruned(ks), "conserving", "weighted rotation", None)


def polarizer_channel_finite(L: int, basis: FockBasis, strict: bool = True) -> KrausChannel:
    """Send every state |m, M - m> to |M, 0>, using L phase-labelled Kraus operators.

    Complete only for photon numbers below L; with ``strict=False`` a
    larger basis is accepted so the failure can be inspected.
    """
    if L < 1:
        raise ValueError("L must be positive")
    if basis.n_max >= L and strict:
        raise TruncationViolation(f"n_max={basis.n_max} needs L > n_max, got L={L}")
    ks = []
    for l in range(1, L + 1):
        k = np.zeros((basis.dim, basis.dim), dtype=complex)
        for col, (m, rest) in enumerate(basis.states):
            k[basis.index[(m + rest, 0)], col] = np.exp(2j * math.pi * l * m / L) / math.sqrt(L)
        ks.append(k)
    return KrausChannel(basis, tuple(ks), "conserving", f"polarizer_finite(L={L})", None)


# Mueller extraction

@dataclass(frozen=True)
class MuellerFit:
    mueller: np.ndarray
    residual: float
    component_residuals: tuple


def mueller_fit(ch: KrausChannel) -> MuellerFit:
    """Least-squares fit of sum_l K^dagger S_mu K by sum_nu M_mu,nu S_nu (Hilbert-Schmidt)."""
    if ch.number_behavior == "other":
        raise ValueError("Mueller extraction needs a number-conserving or number-nonincreasing channel")
    idx = ch.valid_indices()
    s = _stokes_matrices(ch.basis)[:, idx][:, :, idx]
    sub = [k[:, idx] for k in ch.kraus]
    full = _stokes_matrices(ch.basis)
    out = np.array([sum(k.conj().T @ full[mu] @ k for k in sub) for mu in range(4)])
    gram = np.einsum("aij,bji->ab", s, s).real
    rhs = np.einsum("aij,bji->ab", out, s).real
    m = np.linalg.solve(gram, rhs.T).T
    resid = out - np.einsum("ab,bij->aij", m, s)
    norm = math.sqrt(float(np.sum(np.abs(out) ** 2)))
    comp = np.sqrt(np.sum(np.abs(resid) ** 2, axis=(1, 2)))
    comp = comp / norm if norm > 0 else np.zeros(4)
    return MuellerFit(m, float(np.sqrt(np.sum(comp**2))), tuple(float(x) for x in comp))


def extract_mueller(ch: KrausChannel, tol: float = 1e-8) -> np.ndarray:
    fit = mueller_fit(ch)
    if fit.residual > tol:
        raise NotMuellerRepresentable(fit.residual, int(np.argmax(fit.component_residuals)), fit.component_residuals)
    return fit.mueller


@dataclass(frozen=True)
class ChannelClassification:
    label: str
    mueller: np.ndarray
    classification: sc.Classification
    dilation_conserves_number: bool | None


def classify_channel(ch: KrausChannel, tol: float = 1e-9, extract_tol: float = 1e-8) -> ChannelClassification:
    m = extract_mueller(ch, extract_tol)
    c = sc.classify(m, tol)
    return ChannelClassification(c.label, m, c, ch.dilation_conserves_number)


def random_nondepolarizing_mueller(seed) -> np.ndarray:
    """Mueller matrix of the upper-left block of a Haar-random SU(3) matrix."""
    u = random_su3(np.random.default_rng(seed))
    return sc.jones_to_mueller(u[:2, :2])
