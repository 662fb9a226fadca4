"""Acceptance criteria, each checked at its stated tolerance.

Every test records a single ``PASS``/``FAIL`` line (shown in the terminal
summary and on stdout) before asserting.
"""
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from shadow_forge.adapted_norms import AdaptedNorm, verify_norm_lemma
from shadow_forge.examples import (example_discrete_diagonal, example_partial_exponential_3d,
                                   example_polynomial_2d, example_tempered_scalar, get_example)
from shadow_forge.higher_order import (damped_oscillator_system, extract_shadow,
                                       second_order_check)
from shadow_forge.linear_continuous import default_cert_grid
from shadow_forge.oracle import BvpInstance, bvp_solve, compare
from shadow_forge.pseudo_orbits import bump, bump_lifted, impulse, noise, solution
from shadow_forge.shadow_continuous import (apply_T_continuous,
                                            residual_budget, solve_shadow_continuous,
                                            verify_shadow_continuous)
from shadow_forge.shadow_discrete import (apply_T, measure_contraction, residuals,
                                          solve_shadow, theoretical_constants, verify_shadow)

from conftest import ACCEPTANCE_LINES, random_center_system


def report(n, name, ok, detail):
    line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def worst(cert):
    return max(ch.worst_ratio for ch in cert.inequalities)


def off_center(res, P3):
    return np.linalg.norm(res - np.einsum("nij,nj->ni", P3, res), axis=1)


# 1 ---------------------------------------------------------------------------

CATALOG_CONSTANTS = {
    "partial_exponential_3d": (1.0, 1.0, 0.0),
    "tempered_scalar": (1.0, 0.5, 2.0),
    "polynomial_2d": (1.0, 0.5, 1.0),
}


def test_criterion_01_dichotomy_certificates():
    details, ok = [], True
    for name, (D, lam, d) in CATALOG_CONSTANTS.items():
        e = get_example(name)
        k = e.constants
        t0 = time.perf_counter()
        cert = e.certify()
        dt = time.perf_counter() - t0
        good = ((k.D, k.lam, k.d) == (D, lam, d) and cert.overall
                and worst(cert) <= 1 + 1e-8 and dt < 10.0)
        ok &= good
        details.append(f"{name} worst={worst(cert):.6g} t={dt:.2f}s")
    report(1, "dichotomy certificates", ok, "; ".join(details))


# 2 ---------------------------------------------------------------------------

def _norm_for_entry(name):
    e = get_example(name)
    s = e.system
    if e.kind == "discrete":
        return AdaptedNorm(s.chain, s.constants)
    grid = default_cert_grid(s.rate, e.window)
    return AdaptedNorm.continuous(s.family, s.projections, s.rate, s.constants, grid=grid)


def test_criterion_02_norm_lemmas():
    details, ok = [], True
    for name in ("partial_exponential_3d", "tempered_scalar", "polynomial_2d",
                 "discrete_diagonal", "partial_exponential_3d_sampled"):
        cert = verify_norm_lemma(_norm_for_entry(name), samples=1000, seed=0, rel_tol=1e-8)
        ok &= cert.overall
        details.append(f"{name} worst={worst(cert):.3g}")
    report(2, "norm lemmas (1000 samples per entry)", ok, "; ".join(details))


# 3 ---------------------------------------------------------------------------

def test_criterion_03_contraction():
    # D = 1 so q = 5c; c = 0.1 gives q = 0.5
    sys = example_discrete_diagonal(0.5, 2.0, N=64, c=0.1).system
    k = theoretical_constants(sys.c, sys.constants.D)
    po = impulse(sys, 1e-3, index=5)
    m = measure_contraction(po.y, sys, pairs=100, seed=0)
    # the adapted norm is exact here (no truncated sums), so no slack is needed
    slack = 1e-3 if m["approximate"] else 0.0
    r = solve_shadow(po.y, sys)
    ok = (k.q == pytest.approx(0.5) and m["max_ratio"] <= 0.5 * (1 + 1e-6) + slack
          and r.iteration_bound is not None and r.iterations <= r.iteration_bound)
    report(3, "contraction on diagonal model", ok,
           f"max ratio {m['max_ratio']:.6g} over {m['ratios'].size} pairs, "
           f"iterations {r.iterations} <= {r.iteration_bound}")


# 4 ---------------------------------------------------------------------------

@pytest.mark.parametrize("entry", ["discrete_diagonal", "partial_exponential_3d_sampled"])
def test_criterion_04_shadowing_bound(entry):
    if entry == "discrete_diagonal":
        sys = example_discrete_diagonal(0.5, 2.0, N=64, c=0.1).system
    else:
        sys = get_example(entry, N=12, c=0.05).system
    # an unstable component would be amplified by e^(2n+1) in one step and swamp delta
    direction = None if entry == "discrete_diagonal" else [1.0, 0.0, 1.0]
    k = theoretical_constants(sys.c, sys.constants.D)
    sups, ok, details = [], True, []
    for delta in (1e-2, 1e-3, 1e-4):
        t0 = time.perf_counter()
        po = impulse(sys, delta, index=5, direction=direction)
        r = solve_shadow(po.y, sys)
        dt = time.perf_counter() - t0
        sup = float(r.distance.max())
        sups.append(sup)
        ok &= r.C == k.C and sup <= k.C * delta and dt < 30.0
        details.append(f"delta={delta:g} sup={sup:.4g} C*delta={k.C * delta:.4g} t={dt:.2f}s")
    scaled = np.array(sups) / np.array([1e-2, 1e-3, 1e-4])
    spread = scaled.max() / scaled.min() - 1
    ok &= spread <= 0.05
    details.append(f"sup/delta spread {spread:.3%}")
    report(4, f"shadowing bound ({entry})", ok, "; ".join(details))


# 5 ---------------------------------------------------------------------------

def test_criterion_05_oracle_equivalence():
    rng = np.random.default_rng(2024)
    dims_choices = [(1, 1, 1), (1, 1, 0), (2, 1, 1), (1, 2, 1), (1, 1, 2), (2, 2, 0)]
    diffs = []
    for i in range(24):
        dims = dims_choices[i % len(dims_choices)]
        N = int(rng.integers(8, 33))
        q = float(rng.uniform(0.05, 0.5))
        sys = random_center_system(int(rng.integers(0, 10_000)), N=N, dims=dims, q=q)
        po = noise(sys, float(10.0 ** rng.uniform(-4, -2)), seed=i)
        z_ref, _ = bvp_solve(BvpInstance(sys, po.y))
        diffs.append(compare(z_ref, solve_shadow(po.y, sys).z))
    ok = len(diffs) >= 20 and max(diffs) <= 1e-8
    report(5, "oracle equivalence", ok, f"{len(diffs)} instances, max sup diff {max(diffs):.3g}")


# 6 ---------------------------------------------------------------------------

def test_criterion_06_exactness_discrete():
    details, ok = [], True
    for name, kw in (("tempered_scalar_sampled", {"N": 16, "c": 0.02}),
                     ("polynomial_2d_sampled", {"N": 32, "c": 0.02})):
        sys = get_example(name, **kw).system
        assert np.all(sys.projections.P3 == 0)
        po = noise(sys, 1e-3, seed=1)
        r = solve_shadow(po.y, sys)
        res = np.linalg.norm(residuals(r.x, sys), axis=1).max()
        bound = 1e-6 * (1 + r.C * r.delta)
        ok &= res <= bound and verify_shadow(r, sys).overall
        details.append(f"{name} residual {res:.3g} <= {bound:.3g}")
    report(6, "exactness without center (discrete)", ok, "; ".join(details))


def test_criterion_06_exactness_continuous():
    details, ok = [], True
    cases = ((example_tempered_scalar(c=0.02, t_max=8.0), np.linspace(0, 8.0, 4001), 0.3),
             (example_polynomial_2d(c=0.02, t_max=20.0), np.linspace(0, 20.0, 4001), None))
    for e, grid, x0 in cases:
        s = e.system
        if x0 is None:
            po = bump(s, grid, 1e-3, center=4.0, width=1.0, direction=[1.0, 1.0])
        else:
            Y, Yp = solution(s, grid, [x0])
            po = bump(s, grid, 1e-3, center=2.0, width=0.5, base=(Y, Yp))
        r = solve_shadow_continuous(po, s)
        res, budget = residual_budget(r, po, s)
        rn = np.linalg.norm(res, axis=1)
        bound = 1e-6 * (1 + r.C * r.delta)
        ok &= bool(np.all(rn <= budget)) and rn.max() <= bound
        ok &= verify_shadow_continuous(r, po, s).overall
        details.append(f"{e.name} residual {rn.max():.3g} <= {bound:.3g}, "
                       f"budget ratio {(rn / budget).max():.3g}")
    report(6, "exactness without center (continuous)", ok, "; ".join(details))


# 7 ---------------------------------------------------------------------------

def test_criterion_07_center_conclusions():
    e = example_partial_exponential_3d(c=0.05, t_max=4.0)
    s = e.system
    grid = np.linspace(0, 4.0, 8001)
    po = bump(s, grid, 1e-3, center=1.0, width=0.3, direction=[1.0, 1.0, 1.0])
    r = solve_shadow_continuous(po, s)
    P = s.chain(grid).P
    center = np.linalg.norm(np.einsum("nij,nj->ni", P[2], r.x - r.y), axis=1).max()
    res, budget = residual_budget(r, po, s)
    rn = np.linalg.norm(res, axis=1)
    off = off_center(res, P[2])
    cert = verify_shadow_continuous(r, po, s)
    k = s.constants
    est = r.C * r.delta * (2 * k.D + 1) * np.maximum(1.0, np.asarray(s.rate.mu_prime(grid)
                                                                     / s.rate.mu(grid)))
    ok = (center <= 1e-10 and bool(np.all(off <= 1e-8 * (1 + rn)))
          and bool(np.all(rn <= est + budget)) and cert.overall)

    # the sampled map on the same example
    sd = get_example("partial_exponential_3d_sampled", N=12, c=0.05).system
    pd = impulse(sd, 1e-3, index=4, direction=[1.0, 1.0, 1.0])
    rd = solve_shadow(pd.y, sd)
    resd = residuals(rd.x, sd)
    rdn = np.linalg.norm(resd, axis=1)
    P3d = sd.projections.P3
    centerd = np.linalg.norm(np.einsum("nij,nj->ni", P3d, rd.x - rd.y), axis=1).max()
    offd = off_center(resd, P3d[1:])
    ok &= (centerd <= 1e-10 and bool(np.all(offd <= 1e-8 * (1 + rdn)))
           and verify_shadow(rd, sd).overall)
    report(7, "center conclusions (3D partial)", ok,
           f"continuous |P3(x-y)| {center:.3g}, off-center residual {off.max():.3g}, "
           f"residual/bound {(rn / (est + budget)).max():.3g}; "
           f"sampled |P3(x-y)| {centerd:.3g}, off-center residual {offd.max():.3g}")


# 8 ---------------------------------------------------------------------------

def test_criterion_08_higher_order():
    sys2, _, sys = damped_oscillator_system()
    grid = np.linspace(0, 60.0, 60001)
    po = bump_lifted(sys, grid, 1e-3, base=solution(sys, grid, [0.0, 1.0]))
    r = solve_shadow_continuous(po, sys)
    x = extract_shadow(r, sys2.dim)
    dist = np.abs(x - po.y[:, sys2.dim:]).max()
    _, R, budget = second_order_check(r, po, sys2, sys)
    ok = (dist <= r.C * r.delta and bool(np.all(R <= budget))
          and verify_shadow_continuous(r, po, sys).overall)
    report(8, "higher-order round trip", ok,
           f"sup|x-y| {dist:.4g} <= C*delta {r.C * r.delta:.4g}; "
           f"second-order residual {R.max():.3g}, budget ratio {(R / budget).max():.3g}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_linear_case():
    sys = example_discrete_diagonal(0.5, 2.0, N=64, c=0.0).system
    po = noise(sys, 1e-3, seed=3)
    r = solve_shadow(po.y, sys)
    fp = np.abs(apply_T(r.z, po.y, sys) - r.z).max()
    res = np.linalg.norm(residuals(r.x, sys), axis=1).max()
    ok = r.iterations == 1 and fp <= 1e-10 and res <= 1e-10 and verify_shadow(r, sys).overall

    e = example_tempered_scalar(c=0.0, t_max=8.0)
    s = e.system
    grid = np.linspace(0, 8.0, 4001)
    pc = bump(s, grid, 1e-3, center=2.0, width=0.5)
    rc = solve_shadow_continuous(pc, s)
    fpc = np.abs(apply_T_continuous(rc.z, pc, s) - rc.z).max()
    resc, budget = residual_budget(rc, pc, s)
    rcn = np.linalg.norm(resc, axis=1)
    ok &= (rc.iterations == 1 and fpc <= 1e-10 and bool(np.all(rcn <= budget))
           and verify_shadow_continuous(rc, pc, s).overall)
    report(9, "linear case", ok,
           f"discrete: one application, fixed-point defect {fp:.3g}, residual {res:.3g}; "
           f"continuous: fixed-point defect {fpc:.3g}, residual/budget {(rcn / budget).max():.3g}")


# 10 --------------------------------------------------------------------------

def test_criterion_10_reproducibility(tmp_path):
    cfg = {
        "mode": "verify",
        "system": {"catalog": "discrete_diagonal", "params": {"N": 32}},
        "nonlinearity": {"name": "sine", "c": 0.1},
        "pseudo_orbit": {"generate": {"perturbation": {"kind": "noise", "magnitude": 1e-3}}},
    }
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for run in ("a", "b"):
        out = tmp_path / run
        proc = subprocess.run([sys.executable, "-m", "shadow_forge", "--config", str(path),
                               "--out", str(out), "--seed", "12345", "--quiet"],
                              capture_output=True, text=True, env=dict(os.environ))
        assert proc.returncode == 0, proc.stderr
        outs.append({p.name: p.read_bytes() for p in sorted(Path(out).iterdir())})
    ok = outs[0] == outs[1] and len(outs[0]) == 3
    report(10, "reproducibility", ok, f"{len(outs[0])} files byte-identical across two runs")
