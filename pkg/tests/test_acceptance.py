"""Acceptance suite, one test per criterion.

Each check produces one ``criterion N: PASS|FAIL ...`` line.  Under pytest
the lines are collected and printed in the terminal summary.  Run directly with
``python tests/test_acceptance.py`` to get the ten lines without pytest.
"""

import math
import sys
import time

import numpy as np

from qmueller import channels as chn
from qmueller import sim
from qmueller import stokes as sc
from qmueller.errors import NoSingleModeDilation, NotMuellerRepresentable
from qmueller.fock import DensityMatrix, make_basis, stokes_expectations, stokes_operators
from qmueller.stokes import EulerAngles


REPORT = {}


def report(n, ok, detail, t0):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}  ({time.perf_counter() - t0:.2f} s)"
    REPORT[n] = line
    print(line, flush=True)
    return ok


def random_state(rng, basis):
    z = rng.normal(size=(basis.dim, basis.dim)) + 1j * rng.normal(size=(basis.dim, basis.dim))
    rho = z @ z.conj().T
    return DensityMatrix(basis, rho / np.trace(rho))


# 1. su(2) algebra of the Stokes operators

def check_1():
    t0 = time.perf_counter()
    worst = 0.0
    for n_max in (4, 6):
        s = [op.matrix for op in stokes_operators(make_basis(2, n_max))]
        for a, b, c in ((1, 2, 3), (2, 3, 1), (3, 1, 2)):
            worst = max(worst, np.abs(s[a] @ s[b] - s[b] @ s[a] - 2j * s[c]).max())
        casimir = s[1] @ s[1] + s[2] @ s[2] + s[3] @ s[3]
        worst = max(worst, np.abs(casimir - s[0] @ s[0] - 2 * s[0]).max())
    return report(1, worst < 1e-12, f"max deviation {worst:.2e} (n_max 4, 6)", t0)


# 2. retarder channel extracts to the rotation Mueller matrix

def check_2():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2002)
    b = make_basis(2, 4)
    worst = 0.0
    for _ in range(50):
        e = EulerAngles.random(rng)
        worst = max(worst, np.abs(chn.extract_mueller(chn.retarder_channel(e, b)) - sc.retarder(e)).max())
    return report(2, worst < 1e-10, f"50 triples, max entry error {worst:.2e}", t0)


# 3. diattenuator: two-vacuum circuit and single-vacuum SU(3) dilation

def check_3():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2003)
    b = make_basis(2, 2)
    two_err, su3_err, agree, infeasible, svals = 0.0, 0.0, 0.0, 0, []
    for _ in range(20):
        q, r = rng.uniform(0, 1, size=2)
        theta, psi = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        closed = sc.diattenuator(q, r, theta, psi)
        m_two = chn.extract_mueller(chn.diattenuator_channel_two_vacuum(q, r, theta, psi, b))
        two_err = max(two_err, np.abs(m_two - closed).max())
        try:
            u3 = chn.complete_su3(sc.diattenuator_jones(q, r, theta, psi))
        except NoSingleModeDilation as exc:
            infeasible += 1
            svals.append(exc.singular_values)
            continue
        m_su3 = chn.extract_mueller(chn.nondepolarizing_channel_su3(u3, b))
        su3_err = max(su3_err, np.abs(m_su3 - closed).max())
        agree = max(agree, np.abs(m_su3 - m_two).max())
    ok = two_err < 1e-9 and infeasible == 0 and su3_err < 1e-9 and agree < 1e-10
    detail = f"two-vacuum max error {two_err:.2e}; SU(3) built for {20 - infeasible}/20"
    if infeasible:
        top = max(float(s[0]) for s in svals)
        detail += f" (no 3x3 unitary has this 2x2 block: largest singular value at most {top:.3f})"
    else:
        detail += f", SU(3) max error {su3_err:.2e}, agreement {agree:.2e}"
    return report(3, ok, detail, t0)


# 4. Haar depolarizer with exact quadrature

def check_4():
    t0 = time.perf_counter()
    b = make_basis(2, 3)
    worst = 0.0
    for p in (0.0, 0.25, 0.37, 1.0):
        m = chn.extract_mueller(chn.haar_depolarizer(p, b))
        worst = max(worst, np.abs(m - np.diag([1, p, p, p])).max())
    return report(4, worst < 1e-10, f"p in (0, .25, .37, 1), max entry error {worst:.2e}", t0)


# 5. weighted rotation average

def check_5():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2005)
    layout_err = 0.0
    for _ in range(20):
        c = rng.normal(size=10)
        spec = chn.WeightFunctionSpec(*c)
        want = np.zeros((4, 4))
        want[0, 0] = c[9]
        want[1:, 1:] = c[:9].reshape(3, 3)
        layout_err = max(layout_err, np.abs(chn.weighted_rotation_mueller(spec) - want).max())
    good = [
        chn.WeightFunctionSpec(),
        chn.WeightFunctionSpec(a=1 / 6, e=1 / 6, i=1 / 6),
        chn.WeightFunctionSpec(a=0.05, b=0.03, c=0.02, d=0.03, e=-0.05, f=0.02, g=0.02, h=0.02, i=0.04),
    ]
    b = make_basis(2, 2)
    chan_err = 0.0
    for spec in good:
        ch = chn.weighted_rotation_channel(spec, b)
        assert not isinstance(ch, chn.PositivityFailure)
        chan_err = max(chan_err, np.abs(chn.extract_mueller(ch) - chn.weighted_rotation_mueller(spec)).max())
    failures = [chn.weighted_rotation_channel(s, b) for s in (chn.WeightFunctionSpec(c=1.0), chn.WeightFunctionSpec(a=0.5, e=0.5, i=0.5))]
    n_fail = sum(isinstance(f, chn.PositivityFailure) for f in failures)
    ok = layout_err < 1e-15 and chan_err < 1e-8 and n_fail >= 1
    detail = (
        f"layout error {layout_err:.1e}; quadrature channel error {chan_err:.2e}; "
        f"{n_fail}/2 negative specs rejected (c=1 min f {failures[0].min_value:.4f})"
        if n_fail
        else f"layout error {layout_err:.1e}; channel error {chan_err:.2e}; no negative spec found"
    )
    return report(5, ok, detail, t0)


# 6. all-to-L polarizer with L phase labels

def check_6():
    t0 = time.perf_counter()
    L = 6
    b = make_basis(2, 5)
    ch = chn.polarizer_channel_finite(L, b)
    rep = chn.is_cptp(ch)
    polarized = True
    for occ in b.states:
        s = stokes_expectations(chn.apply(ch, DensityMatrix.fock_state(b, occ)))
        out = chn.apply(ch, DensityMatrix.fock_state(b, occ)).matrix
        want = DensityMatrix.fock_state(b, (sum(occ), 0)).matrix
        polarized &= abs(s[3] - s[0]) < 1e-12 and np.abs(out - want).max() < 1e-12
    m_err = np.abs(chn.extract_mueller(ch) - np.array([[1, 0, 0, 0], [0] * 4, [0] * 4, [1, 0, 0, 0]])).max()
    big = chn.is_cptp(chn.polarizer_channel_finite(L, make_basis(2, 6), strict=False))
    ok = rep.passed and rep.deviation < 1e-12 and polarized and m_err < 1e-10 and big.deviation > 0.1
    detail = (
        f"completeness deviation {rep.deviation:.1e}; outputs L-polarized {polarized}; "
        f"M error {m_err:.1e}; n_max 6 deviation {big.deviation:.3f}"
    )
    return report(6, ok, detail, t0)


# 7. unitary remixing of Kraus operators

def random_channel(rng, b):
    kind = rng.integers(4)
    if kind == 0:
        return chn.diattenuator_channel_two_vacuum(*rng.uniform(0, 1, 2), rng.uniform(0, math.pi), rng.uniform(0, 6), b)
    if kind == 1:
        return chn.haar_depolarizer(rng.uniform(), b)
    parts = [chn.retarder_channel(EulerAngles.random(rng), b) for _ in range(2)]
    if kind == 2:
        parts.append(chn.diattenuator_channel_two_vacuum(*rng.uniform(0, 1, 2), 1.0, 2.0, b))
    w = rng.dirichlet(np.ones(len(parts)))
    return chn.convex_combine_channels(w, parts)


def check_7():
    from scipy.stats import unitary_group

    t0 = time.perf_counter()
    rng = np.random.default_rng(2007)
    b = make_basis(2, 2)
    states = [random_state(rng, b) for _ in range(20)]
    out_err, m_err = 0.0, 0.0
    for _ in range(10):
        ch = random_channel(rng, b)
        base_out = [chn.apply(ch, rho).matrix for rho in states]
        base_m = chn.extract_mueller(ch)
        for _ in range(10):
            mixed = chn.remix_kraus(ch, unitary_group.rvs(len(ch) + int(rng.integers(3)), random_state=rng))
            out_err = max(out_err, max(np.abs(chn.apply(mixed, rho).matrix - o).max() for rho, o in zip(states, base_out)))
            m_err = max(m_err, np.abs(chn.extract_mueller(mixed) - base_m).max())
    # a single remixed operator of a depolarizing mixture, renormalized
    ch = chn.convex_combine_channels(
        [0.5, 0.5], [chn.retarder_channel(EulerAngles(0, 0, 0), b), chn.retarder_channel(EulerAngles(0, math.pi / 2, 0), b)]
    )
    k = chn.remix_kraus(ch, np.array([[1, 1], [1, -1]]) / math.sqrt(2)).kraus[0]
    lone = chn.KrausChannel(b, (k / np.linalg.norm(k, 2),), "conserving")
    try:
        chn.extract_mueller(lone)
        resid = 0.0
    except NotMuellerRepresentable as exc:
        resid = exc.residual
    ok = out_err < 1e-12 and m_err < 1e-10 and resid > 1e-3
    detail = f"output error {out_err:.1e}; Mueller error {m_err:.1e}; isolated component residual {resid:.3f}"
    return report(7, ok, detail, t0)


# 8. classification

def check_8():
    t0 = time.perf_counter()
    ratio, lorentz, n_nondep = 0.0, 0.0, 0
    for s in np.random.SeedSequence(2008).spawn(1000):
        c = sc.classify(chn.random_nondepolarizing_mueller(s))
        n_nondep += c.nondepolarizing
        ratio, lorentz = max(ratio, c.eigen_ratio), max(lorentz, c.lorentz_residual)
    rng = np.random.default_rng(2008)
    n_mix, n_dep = 200, 0
    for _ in range(n_mix):
        k = int(rng.integers(2, 5))
        w = 0.1 + (1 - 0.1 * k) * rng.dirichlet(np.ones(k))
        ms = [sc.retarder(EulerAngles.random(rng)) for _ in range(k)]
        n_dep += sc.classify(sc.convex_combine(w, ms)).label == "depolarizing"
    ok = n_nondep == 1000 and ratio < 1e-8 and lorentz < 1e-8 and n_dep == n_mix
    detail = (
        f"{n_nondep}/1000 nondepolarizing, max ratio {ratio:.1e}, max Lorentz residual {lorentz:.1e}; "
        f"{n_dep}/{n_mix} retarder mixtures depolarizing"
    )
    return report(8, ok, detail, t0)


# 9. decomposition round trips

def check_9():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2009)
    cl, lc = 0.0, 0.0
    for _ in range(100):
        m = sc.random_physical_mueller(rng)
        cl = max(cl, np.abs(sum(w * mk for w, mk in sc.cloude_decompose(m)) - m).max())
        dep, dia, ret = sc.lu_chipman(m)
        lc = max(lc, np.abs(dep @ dia @ ret - m).max())
    ok = cl < 1e-10 and lc < 1e-9
    return report(9, ok, f"Cloude max error {cl:.1e}; Lu-Chipman max error {lc:.1e}", t0)


# 10. shot-noise estimator

def check_10():
    t0 = time.perf_counter()
    b = make_basis(2, 1)
    e = EulerAngles(0.5, 1.0, 2.0)
    cases = {
        "identity": (chn.identity_channel(b), np.eye(4)),
        "retarder": (chn.retarder_channel(e, b), sc.retarder(e)),
        "diattenuator": (chn.diattenuator_channel_two_vacuum(0.8, 0.3, 1.0, 0.5, b), sc.diattenuator(0.8, 0.3, 1.0, 0.5)),
        "haar(0.5)": (chn.haar_depolarizer(0.5, b), np.diag([1, 0.5, 0.5, 0.5])),
    }
    passes = {}
    for name, (ch, truth) in cases.items():
        passes[name] = sum(sim.estimate_mueller(ch, shots=100_000, seed=s).z_scores(truth).max() < 5 for s in range(100))
    ch = cases["diattenuator"][0]
    same = sim.estimate_mueller(ch, seed=77) == sim.estimate_mueller(ch, seed=77)
    ok = all(v >= 99 for v in passes.values()) and same
    detail = ", ".join(f"{k} {v}/100" for k, v in passes.items()) + f"; byte-identical records {same}"
    return report(10, ok, detail, t0)


def test_criterion_1():
    assert check_1()


def test_criterion_2():
    assert check_2()


def test_criterion_3():
    assert check_3()


def test_criterion_4():
    assert check_4()


def test_criterion_5():
    assert check_5()


def test_criterion_6():
    assert check_6()


def test_criterion_7():
    assert check_7()


def test_criterion_8():
    assert check_8()


def test_criterion_9():
    assert check_9()


def test_criterion_10():
    assert check_10()


if __name__ == "__main__":
    results = [globals()[f"check_{n}"]() for n in range(1, 11)]
    sys.exit(0 if all(results) else 1)
