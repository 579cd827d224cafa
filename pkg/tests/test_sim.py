import math

import numpy as np
import pytest

from qmueller import channels as chn
from qmueller import sim
from qmueller import stokes as sc
from qmueller.errors import DegenerateProbeSet, SchemaVersionError, TruncationViolation
from qmueller.fock import DensityMatrix, make_basis, stokes_expectations
from qmueller.stokes import EulerAngles

B1 = make_basis(2, 1)


def test_standard_probes_hit_the_axes():
    want = [(1, 0, 0, 1), (1, 0, 0, -1), (1, 1, 0, 0), (1, -1, 0, 0), (1, 0, 1, 0), (1, 0, -1, 0)]
    for spec, w in zip(sim.standard_probes(), want):
        assert np.abs(spec.stokes() - w).max() < 1e-15
        got = stokes_expectations(sim.make_probe(spec, B1))
        assert np.abs(np.array(got) - w).max() < 1e-15


def test_make_probe_examples():
    b = make_basis(2, 3)
    assert stokes_expectations(sim.make_probe(sim.ProbeSpec("fock", 1), b)) == (1, 0, 0, 1)
    spec = sim.ProbeSpec("fock", 3, angles=EulerAngles(0, math.pi / 2, 0))
    assert np.abs(np.array(stokes_expectations(sim.make_probe(spec, b))) - [3, 3, 0, 0]).max() < 1e-12
    spec = sim.ProbeSpec("coherent", alpha_l=1.0)
    got = stokes_expectations(sim.make_probe(spec, make_basis(2, 12)))
    assert np.abs(np.array(got) - [1, 0, 0, 1]).max() < 1e-8


def test_rotated_probe_matches_closed_form():
    rng = np.random.default_rng(0)
    b = make_basis(2, 4)
    for _ in range(10):
        e = EulerAngles.random(rng)
        spec = sim.ProbeSpec("fock", 4, angles=e)
        n = [math.sin(e.theta) * math.cos(e.psi), math.sin(e.theta) * math.sin(e.psi), math.cos(e.theta)]
        got = np.array(stokes_expectations(sim.make_probe(spec, b)))
        assert np.abs(got - 4 * np.array([1, *n])).max() < 1e-12
        assert np.abs(spec.stokes() - got).max() < 1e-12


def test_make_probe_truncation_checks():
    with pytest.raises(TruncationViolation):
        sim.make_probe(sim.ProbeSpec("fock", 3), make_basis(2, 2))
    with pytest.raises(TruncationViolation):
        sim.make_probe(sim.ProbeSpec("coherent", alpha_l=2.0), make_basis(2, 6))


def test_measurement_rotation_moves_component_to_three():
    rng = np.random.default_rng(1)
    b = make_basis(2, 3)
    z = rng.normal(size=(b.dim, b.dim)) + 1j * rng.normal(size=(b.dim, b.dim))
    rho = DensityMatrix(b, z @ z.conj().T / np.trace(z @ z.conj().T))
    s = stokes_expectations(rho)
    occ = np.array(b.states)
    for k in (1, 2, 3):
        p = sim.counting_distribution(rho, k)
        assert abs(p @ (occ[:, 0] - occ[:, 1]) - s[k]) < 1e-12


def test_sample_deterministic_state():
    rho = DensityMatrix.fock_state(B1, (1, 0))
    smp = sim.sample_stokes(rho, sim.MeasurementSetting(3, 1000, 5))
    assert smp.estimate == 1 and smp.stderr == 0
    assert smp.counts.tolist() == [[1, 0, 1000]]


def test_sample_unbiased_for_orthogonal_axis():
    rho = sim.make_probe(sim.standard_probes()[2], B1)  # along +1
    smp = sim.sample_stokes(rho, sim.MeasurementSetting(3, 40_000, 6))
    assert abs(smp.estimate) < 5 * smp.stderr
    assert abs(smp.stderr - 1 / math.sqrt(40_000)) < 1e-4
    assert smp.s0_estimate == 1


def test_sample_depolarized_output():
    ch = chn.haar_depolarizer(0.0, B1)
    rho = chn.apply(ch, sim.make_probe(sim.standard_probes()[4], B1))
    for k in (1, 2, 3):
        smp = sim.sample_stokes(rho, sim.MeasurementSetting(k, 20_000, k))
        assert abs(smp.estimate) < 5 * smp.stderr


def test_number_conserving_shots_keep_photon_number():
    b = make_basis(2, 3)
    ch = chn.retarder_channel(EulerAngles(1, 2, 3), b)
    rec = sim.estimate_mueller(ch, sim.standard_probes(3), shots=500, seed=2)
    for row in rec.counts:
        for c in row:
            assert (c[:, 0] + c[:, 1] == 3).all()


@pytest.mark.parametrize(
    "make,truth",
    [
        (lambda b: chn.identity_channel(b), np.eye(4)),
        (lambda b: chn.retarder_channel(EulerAngles(0.5, 1.0, 2.0), b), sc.retarder(EulerAngles(0.5, 1.0, 2.0))),
        (lambda b: chn.haar_depolarizer(0.5, b), np.diag([1, 0.5, 0.5, 0.5])),
    ],
)
def test_estimate_within_five_sigma(make, truth):
    rec = sim.estimate_mueller(make(B1), shots=100_000, seed=11)
    assert rec.z_scores(truth).max() < 5


def test_estimator_consistency():
    ch = chn.diattenuator_channel_two_vacuum(0.8, 0.3, 1.0, 0.5, B1)
    truth = sc.diattenuator(0.8, 0.3, 1.0, 0.5)
    errs = [np.abs(sim.estimate_mueller(ch, shots=n, seed=3).estimate - truth).max() for n in (10**3, 10**4, 10**5)]
    assert errs[2] < errs[0]


def test_degenerate_probe_set():
    probes = [sim.ProbeSpec("fock", 1)] * 5
    with pytest.raises(DegenerateProbeSet):
        sim.estimate_mueller(chn.identity_channel(B1), probes, shots=10)


def test_record_round_trip_and_determinism(tmp_path):
    ch = chn.haar_depolarizer(0.5, B1)
    a = sim.persist(sim.estimate_mueller(ch, shots=2000, seed=9), tmp_path / "a.record.json")
    b = sim.persist(sim.estimate_mueller(ch, shots=2000, seed=9), tmp_path / "b.record.json")
    assert a.read_bytes() == b.read_bytes()
    rec = sim.load(a)
    assert rec == sim.estimate_mueller(ch, shots=2000, seed=9)
    assert np.abs(rec.estimate - sim.estimate_mueller(ch, shots=2000, seed=9).estimate).max() == 0
    c = sim.persist(sim.estimate_mueller(ch, shots=2000, seed=10), tmp_path / "c.record.json")
    assert c.read_bytes() != a.read_bytes()


def test_record_unknown_schema(tmp_path):
    p = tmp_path / "bad.record.json"
    p.write_text('{"schema": "qmueller.record/99"}')
    with pytest.raises(SchemaVersionError):
        sim.load(p)


def test_wall_clock_optional():
    import time

    rec = sim.estimate_mueller(chn.identity_channel(B1), shots=10, seed=0, clock=time.perf_counter)
    assert rec.wall_clock is not None and rec.wall_clock >= 0
    assert sim.estimate_mueller(chn.identity_channel(B1), shots=10, seed=0).wall_clock is None
