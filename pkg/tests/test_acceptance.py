"""Acceptance criteria, one test and one PASS/FAIL line each."""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from qerrdist import hilbert as hb
from qerrdist import measurement as ms
from qerrdist import metrics as mt
from qerrdist import oscillator as osc
from qerrdist import scenarios as sc

S2 = math.sqrt(2.0)
TIGHT = 1e-12


def _bell(a, b):
    psi = (np.kron(a, a) + np.kron(b, b)) / S2
    return np.outer(psi, psi.conj())


ZB = (np.array([1, 0], complex), np.array([0, 1], complex))
XB = (np.array([1, 1], complex) / S2, np.array([1, -1], complex) / S2)


def _status(res, detail):
    return [a.status == "PASS" for a in res.assertions if a.detail == detail]


def test_criterion_1_rotation_counterexample(verdict, scenario):
    res = scenario("counterexamples")
    rep = osc.OscillatorRep(40)
    rot = ms.rotation_model(rep)
    g = osc.fock_state(rep, 0)
    checks = {
        "epsilon(x) <= 1e-6": mt.o_error(rot, g) <= 1e-6,
        "eta(p) = 1 +- 1e-5": abs(mt.o_disturbance(rot, g) - 1.0) <= 1e-5,
        "25 members": res.quantity("members") == 25,
        "epsilon(x) epsilon(p) < hbar/2 on every member": res.quantity("max epsilon(x)*epsilon(p)") < 0.5,
        "scenario assertions": res.passed,
    }
    assert verdict(1, checks)


def test_criterion_2_example7(verdict, scenario):
    res = scenario("example7")
    spec = sc.Example7Spec(dim=60)
    model, rep = sc.example7_model(spec)
    g = osc.fock_state(rep, 0)
    ptr = mt.pointer_distribution(model, g)
    idx = np.clip(np.rint(ptr.support + 0.5 * spec.shift).astype(int), 0, None)
    support, weights = spec.oracle(int(idx.max()) + 1)
    heavy = ptr.weights > 1e-12
    pos = res.distributions[0]
    v80 = sc._example7_values(spec, 80, 16384)
    w2_60 = res.quantity("W2(position, pointer)")
    checks = {
        "epsilon(x) <= 1e-8": mt.o_error(model, g) <= 1e-8,
        "Poisson weights within 1e-8": float(np.max(np.abs(ptr.weights - weights[idx]))) <= 1e-8,
        "support n - 1/2 within 1e-8": float(np.max(np.abs(ptr.support[heavy] - support[idx[heavy]]))) <= 1e-8,
        "pointer mean 0 +- 1e-8": abs(mt.moments(ptr)[0]) <= 1e-8,
        "pointer variance 0.5 +- 1e-6": abs(mt.moments(ptr)[1] - 0.5) <= 1e-6,
        "position mean 0 +- 1e-8": abs(mt.moments(pos)[0]) <= 1e-8,
        "position variance 0.5 +- 1e-6": abs(mt.moments(pos)[1] - 0.5) <= 1e-6,
        "W2 > 0": w2_60 > 0,
        "W2 stable 60 -> 80 within 1e-3": abs(v80["w2"] - w2_60) <= 1e-3,
        "scenario assertions": res.passed,
    }
    assert verdict(2, checks)


def test_criterion_3_spin_suite(verdict):
    cfg = mt.ExtensionSearchConfig()
    I2 = np.eye(2) / 2
    plus = XB[0]
    copy = ms.spin_model("identity_coupling", state=plus)
    mixed = ms.spin_model("identity_coupling", state=I2)
    sy = ms.spin_model("sigma_y_evolution")
    kz = ms.korzekwa_model()
    up = ZB[0]
    rng = np.random.default_rng(0)
    gaps = []
    for _ in range(20):
        psi = hb.random_ket(2, rng)
        m = ms.spin_model("identity_coupling", state=psi)
        gaps.append(abs(ms.double_measurement_model(m).rms_difference() - mt.o_error(m, psi)))
    checks = {
        "copy |+x>: O error = 1": abs(mt.o_error(copy, plus) - 1.0) <= TIGHT,
        "copy |+x>: D error = 0": abs(mt.d_error(copy, plus)) <= TIGHT,
        "copy |+x>: C error = 0": abs(mt.c_error(copy, plus, cfg)) <= TIGHT,
        "mixed: C error at maximizer = sqrt 2": abs(mt.c_value_at(mixed, I2, _bell(*ZB)) - S2) <= TIGHT,
        "mixed: optimizer >= sqrt 2 - 1e-6": mt.c_search(mixed, I2, "pointer", cfg).optimizer_value >= S2 - 1e-6,
        "sigma_y: C disturbance at maximizer = sqrt 2": abs(mt.c_value_at(sy, I2, _bell(*XB), "p") - S2) <= TIGHT,
        "sigma_y: optimizer >= sqrt 2 - 1e-6": mt.c_search(sy, I2, "p", cfg).optimizer_value >= S2 - 1e-6,
        "projective: O disturbance > 0": mt.o_disturbance(kz, up) > 0,
        "projective: D disturbance = 0": abs(mt.d_disturbance(kz, up)) <= TIGHT,
        "projective: C disturbance = 0": abs(mt.c_disturbance(kz, up, cfg)) <= TIGHT,
        "double readout identity over 20 states": max(gaps) <= TIGHT,
    }
    assert verdict(3, checks)


def test_criterion_4_inequality_sweeps(verdict, scenario):
    res = scenario("sweeps")
    tol = -1e-9
    checks = {
        "1000 Ozawa ED pairs": res.quantity("ozawa_ed pairs") >= 1000,
        "1000 Ozawa EE pairs": res.quantity("ozawa_ee pairs") >= 1000,
        "Ozawa ED min slack": res.quantity("ozawa_ed min slack") >= tol,
        "Ozawa EE min slack": res.quantity("ozawa_ee min slack") >= tol,
        "50 closed families": res.quantity("restricted families") >= 50,
        "restricted ED min slack": res.quantity("restricted_ed min slack") >= tol,
        "restricted EE min slack": res.quantity("restricted_ee min slack") >= tol,
        "large box: supremum form weaker": all(_status(res, "large box: weaker_than_restricted")),
        "small box: supremum form stronger": all(_status(res, "small box: stronger_than_restricted")),
        "sup form holds on both boxes": all(_status(res, "large box: sup-ozawa slack"))
        and all(_status(res, "small box: sup-ozawa slack")),
    }
    assert verdict(4, checks)


def test_criterion_5_bound_chains(verdict, scenario):
    res = scenario("sweeps")
    chain = {q.name: q.value for q in res.quantities if q.name.endswith(" min slack")
             and q.name.split(" ")[0] in ("spin", "oscillator")}
    checks = {
        "1000 spin models": res.quantity("spin chain models") >= 1000,
        "200 oscillator models": res.quantity("oscillator chain models") >= 200,
        "spin chain keys present": any(k.startswith("spin ") for k in chain),
        "oscillator chain keys present": any(k.startswith("oscillator ") for k in chain),
    }
    for name, v in sorted(chain.items()):
        checks[name] = v >= -1e-9
    # upper C bound at the known maximizer
    I2 = np.eye(2) / 2
    mixed = ms.spin_model("identity_coupling", state=I2)
    rep = mt.metrics_report(mixed, I2, mt.ExtensionSearchConfig(restarts=1, mixture_size=1),
                            candidates={"pointer": {"bell": _bell(*ZB)}})
    checks["chain at maximizer"] = min(mt.bound_chain(rep).values()) >= -1e-9
    assert verdict(5, checks)


def test_criterion_6_classical_bridge(verdict, scenario):
    res = scenario("classical")
    checks = {
        "200 kernels": res.quantity("kernels") >= 200,
        "error equivalence <= 1e-9": res.quantity("max |variational - sup| error") <= 1e-9,
        "disturbance equivalence <= 1e-9": res.quantity("max |variational - sup| disturbance") <= 1e-9,
        "sup at point mass": all(_status(res, "argmax at point mass")),
        "one-sided bound": res.quantity("min one-sided slack") >= -1e-9,
    }
    assert verdict(6, checks)


def test_criterion_7_appendix_numerics(verdict, scenario):
    t0 = time.perf_counter()
    res = scenario("appendix")
    elapsed = time.perf_counter() - t0
    checks = {
        "halving ratio >= 3.5": res.quantity("min halving ratio") >= 3.5,
        "halving ratio <= 4.5": res.quantity("max halving ratio") <= 4.5,
        "commutator residual <= 1e-6 hbar": res.quantity("commutator identity residual") <= 1e-6,
        "Green agreement <= 1e-4": res.quantity("green relative gap") <= 1e-4,
        "runtime <= 300 s": max(elapsed, res.runtime) <= 300,
    }
    assert verdict(7, checks)


@pytest.mark.slow
def test_criterion_8_determinism(verdict, tmp_path):
    outs = [tmp_path / "a", tmp_path / "b"]
    codes = []
    for out in outs:
        proc = subprocess.run([sys.executable, "-m", "qerrdist", "verify", "--seed", "7", "--out", str(out)],
                              capture_output=True, text=True)
        codes.append(proc.returncode)
    a = sorted(p.name for p in outs[0].iterdir())
    b = sorted(p.name for p in outs[1].iterdir())
    same = a == b and all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes() for n in a)
    checks = {
        "bundles written": "bundle.json" in a,
        "same exit code": codes[0] == codes[1] and codes[0] in (0, 1),
        "byte-identical bundles": same,
    }
    assert verdict(8, checks)
