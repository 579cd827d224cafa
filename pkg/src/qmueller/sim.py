"""Shot-noise polarimetry: probe states, photon counting, Mueller estimation.

Measurement model: to read Stokes component k the output state is
rotated so that k lands on the 3-axis, then the photon numbers (n_L, n_R)
are counted.  Each shot gives n_L - n_R as a sample of S_k and
n_L + n_R as a sample of S0.  Every (probe, component) pair draws from
its own substream ``SeedSequence(seed, spawn_key=(probe, component))``,
so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import formats
from .channels import KrausChannel, apply
from .errors import DegenerateProbeSet, TruncationViolation
from .fock import DensityMatrix, FockBasis, rotation_unitary
from .stokes import EulerAngles, retarder

# rotations carrying component k onto the 3-axis
MEASUREMENT_ANGLES = {
    1: EulerAngles(math.pi, math.pi / 2, 0.0),
    2: EulerAngles(math.pi / 2, math.pi / 2, 0.0),
    3: EulerAngles(0.0, 0.0, 0.0),
}


@dataclass(frozen=True)
class ProbeSpec:
    """Reference L-polarized state rotated by ``angles``.

    kind ``fock``: |N, 0>.  kind ``coherent``: product coherent state with
    amplitudes (alpha_l, alpha_r) before the rotation.
    """

    kind: str = "fock"
    n: int = 1
    alpha_l: complex = 0.0
    alpha_r: complex = 0.0
    angles: EulerAngles = EulerAngles()

    def __post_init__(self):
        if self.kind not in ("fock", "coherent"):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if self.kind == "fock" and self.n < 0:
            raise ValueError("photon number must be nonnegative")

    def stokes(self) -> np.ndarray:
        """Target Stokes vector of the probe."""
        if self.kind == "fock":
            s = np.array([self.n, 0.0, 0.0, self.n], dtype=float)
        else:
            a, b = complex(self.alpha_l), complex(self.alpha_r)
            ab = a.conjugate() * b
            s = np.array([abs(a) ** 2 + abs(b) ** 2, 2 * ab.real, 2 * ab.imag, abs(a) ** 2 - abs(b) ** 2])
        return retarder(self.angles) @ s

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "angles": list(self.angles)}
        if self.kind == "fock":
            d["n"] = self.n
        else:
            d["alpha_l"] = complex(self.alpha_l)
            d["alpha_r"] = complex(self.alpha_r)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProbeSpec":
        def cplx(x):
            return complex(*x) if isinstance(x, (list, tuple)) else complex(x)

        return cls(
            d.get("kind", "fock"),
            int(d.get("n", 1)),
            cplx(d.get("alpha_l", 0.0)),
            cplx(d.get("alpha_r", 0.0)),
            EulerAngles(*d.get("angles", (0.0, 0.0, 0.0))),
        )


def standard_probes(n: int = 1) -> list[ProbeSpec]:
    """Fock probes along +3, -3, +1, -1, +2, -2."""
    half, pi = math.pi / 2, math.pi
    angles = [(0, 0, 0), (0, pi, 0), (0, half, 0), (0, half, pi), (0, half, half), (0, half, 3 * half)]
    return [ProbeSpec("fock", n, angles=EulerAngles(*a)) for a in angles]


def make_probe(spec: ProbeSpec, basis: FockBasis, max_loss: float = 1e-6) -> DensityMatrix:
    if spec.kind == "fock":
        if spec.n > basis.n_max:
            raise TruncationViolation(f"N={spec.n} exceeds n_max={basis.n_max}")
        rho = DensityMatrix.fock_state(basis, (spec.n, 0))
    else:
        mean = abs(spec.alpha_l) ** 2 + abs(spec.alpha_r) ** 2
        if mean > 0.5 * basis.n_max:
            raise TruncationViolation(f"mean photon number {mean} exceeds n_max/2")
        rho, lost = DensityMatrix.coherent_state(basis, spec.alpha_l, spec.alpha_r)
        if lost > max_loss:
            raise TruncationViolation(f"coherent probe loses {lost:.3e} probability to truncation")
    u = rotation_unitary(basis, spec.angles).matrix
    return DensityMatrix(basis, u @ rho.matrix @ u.conj().T)


@dataclass(frozen=True)
class MeasurementSetting:
    component: int
    shots: int
    seed: int

    def __post_init__(self):
        if self.component not in (1, 2, 3):
            raise ValueError("component must be 1, 2 or 3")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass(frozen=True)
class StokesSample:
    counts: np.ndarray  # rows (n_L, n_R, count)
    estimate: float
    stderr: float
    s0_estimate: float
    s0_stderr: float


def _mean_and_stderr(values: np.ndarray, counts: np.ndarray) -> tuple[float, float]:
    shots = int(counts.sum())
    mean = float(values @ counts) / shots
    if shots < 2:
        return mean, float("nan")
    var = float(((values - mean) ** 2) @ counts) / (shots - 1)
    return mean, math.sqrt(var / shots)


def counting_distribution(rho: DensityMatrix, component: int) -> np.ndarray:
    """Probabilities of the Fock basis states after the measurement rotation."""
    u = rotation_unitary(rho.basis, MEASUREMENT_ANGLES[component]).matrix
    p = np.einsum("ij,jk,ik->i", u, rho.matrix, u.conj()).real
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def sample_stokes(rho: DensityMatrix, setting: MeasurementSetting, rng: np.random.Generator | None = None) -> StokesSample:
    rng = rng or np.random.default_rng(setting.seed)
    p = counting_distribution(rho, setting.component)
    hits = rng.multinomial(setting.shots, p)
    occ = np.array(rho.basis.states)
    seen = np.flatnonzero(hits)
    counts = np.column_stack([occ[seen], hits[seen]]).astype(np.int64)
    diff, total = occ[seen, 0] - occ[seen, 1], occ[seen].sum(axis=1)
    est, err = _mean_and_stderr(diff.astype(float), hits[seen])
    s0, s0_err = _mean_and_stderr(total.astype(float), hits[seen])
    return StokesSample(counts, est, err, s0, s0_err)


def substream_seed(seed: int, probe: int, component: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(probe, component))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(eq=False)
class ExperimentRecord:
    config: dict
    probe_stokes: np.ndarray  # 4 x P, targets
    counts: list  # [probe][component-1] -> rows (n_L, n_R, count)
    measured: np.ndarray  # 4 x P
    measured_stderr: np.ndarray  # 4 x P
    estimate: np.ndarray  # 4 x 4
    stderr: np.ndarray  # 4 x 4
    seeds: list  # [probe][component-1]
    wall_clock: float | None = None

    def to_dict(self) -> dict:
        return {
            "schema": formats.RECORD_SCHEMA,
            "config": self.config,
            "probe_stokes": self.probe_stokes,
            "counts": [[np.asarray(c).tolist() for c in row] for row in self.counts],
            "measured": self.measured,
            "measured_stderr": self.measured_stderr,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "seeds": self.seeds,
            "wall_clock": self.wall_clock,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentRecord":
        formats.check_schema(d, formats.RECORD_SCHEMA)
        arr = lambda k: np.asarray(d[k], dtype=float)  # noqa: E731
        return cls(
            d["config"],
            arr("probe_stokes"),
            [[np.asarray(c, dtype=np.int64).reshape(-1, 3) for c in row] for row in d["counts"]],
            arr("measured"),
            arr("measured_stderr"),
            arr("estimate"),
            arr("stderr"),
            [[int(s) for s in row] for row in d["seeds"]],
            d.get("wall_clock"),
        )

    def __eq__(self, other):
        if not isinstance(other, ExperimentRecord):
            return NotImplemented
        return formats.dumps17(self.to_dict()) == formats.dumps17(other.to_dict())

    def z_scores(self, truth, floor: float = 1e-12) -> np.ndarray:
        return np.abs(self.estimate - np.asarray(truth)) / np.maximum(self.stderr, floor)


def estimate_mueller(
    channel: KrausChannel,
    probes: list[ProbeSpec] | None = None,
    shots: int = 100_000,
    seed: int = 0,
    config: dict | None = None,
    clock=None,
) -> ExperimentRecord:
    """Push each probe through the channel, count all three components, fit M by least squares.

    ``clock`` is an optional zero-argument timer (e.g. time.perf_counter);
    when omitted the record carries no wall-clock entry so that equal
    seeds give identical files.
    """
    t0 = clock() if clock else None
    probes = probes if probes is not None else standard_probes()
    x = np.array([p.stokes() for p in probes]).T
    if x.shape[1] < 4 or np.linalg.matrix_rank(x) < 4:
        raise DegenerateProbeSet("probe Stokes vectors must span all four dimensions")
    n = len(probes)
    y, y_err = np.zeros((4, n)), np.zeros((4, n))
    counts, seeds = [], []
    for ip, spec in enumerate(probes):
        out = apply(channel, make_probe(spec, channel.basis))
        row_counts, row_seeds = [], []
        s0_vals, s0_hits = [], []
        for k in (1, 2, 3):
            setting = MeasurementSetting(k, shots, substream_seed(seed, ip, k))
            smp = sample_stokes(out, setting)
            y[k, ip], y_err[k, ip] = smp.estimate, smp.stderr
            row_counts.append(smp.counts)
            row_seeds.append(setting.seed)
            s0_vals.append(smp.counts[:, :2].sum(axis=1))
            s0_hits.append(smp.counts[:, 2])
        # S0 pooled over the three settings
        y[0, ip], y_err[0, ip] = _mean_and_stderr(
            np.concatenate(s0_vals).astype(float), np.concatenate(s0_hits)
        )
        counts.append(row_counts)
        seeds.append(row_seeds)
    xp = np.linalg.pinv(x)  # n x 4
    est = y @ xp
    err = np.sqrt((y_err**2) @ (xp**2))
    cfg = {"probes": [p.to_dict() for p in probes], "shots": shots, "seed": seed, "n_max": channel.basis.n_max}
    cfg["channel"] = config if config is not None else channel.provenance
    wall = clock() - t0 if clock else None
    return ExperimentRecord(cfg, x, counts, y, y_err, est, err, seeds, wall)


def persist(record: ExperimentRecord, path) -> Path:
    path = Path(path)
    formats.write_json(record.to_dict(), path)
    return path


def load(path) -> ExperimentRecord:
    return ExperimentRecord.from_dict(formats.read_json(path))


def run_experiment(doc: dict, seed: int | None = None, shots: int | None = None) -> ExperimentRecord:
    """Run an experiment config document (schema ``qmueller.exp/1``).

    Fields: ``channel`` (channel document or {"path": ...}), ``n_max``,
    ``probes`` ("standard" or a list of probe dicts), ``shots``, ``seed``.
    """
    formats.check_schema(doc, formats.EXP_SCHEMA)
    ch_doc = doc["channel"]
    if "path" in ch_doc:
        ch_doc = formats.read_json(ch_doc["path"])
    n_max = int(doc.get("n_max", ch_doc.get("n_max", 1)))
    channel = formats.build_channel(ch_doc, n_max)
    probes = doc.get("probes", "standard")
    probes = standard_probes() if probes == "standard" else [ProbeSpec.from_dict(p) for p in probes]
    return estimate_mueller(
        channel,
        probes,
        shots=int(shots if shots is not None else doc.get("shots", 100_000)),
        seed=int(seed if seed is not None else doc.get("seed", 0)),
        config=ch_doc,
    )
