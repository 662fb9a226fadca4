"""Command-line front end.

``shadow-forge --config run.json [--mode M] [--out DIR] [--oracle-check] [--seed S] [--quiet]``

Modes: ``certify`` (dichotomy certificate and sampled Lipschitz bound),
``generate`` (write a pseudo-orbit file), ``shadow`` (solve and verify the
conclusions), ``verify`` (``shadow`` plus the dichotomy, Lipschitz,
norm-lemma and contraction checks) and ``oracle-check`` (discrete systems:
compare the fixed point with the dense reference solver).

Exit status: 0 when every requested certificate passes, 1 when one fails,
2 for configuration errors, 3 when the contraction condition fails and 4
for numerical failures.  Outputs (``report.json``, ``trajectory.csv``,
``summary.json``, ``pseudo_orbit.csv``) are written atomically with 17
significant digits and contain no timestamps, so equal inputs give
byte-identical files.
"""
from __future__ import annotations

import argparse
import contextlib
import io as _io
import json
import os
import sys as _sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import pseudo_orbits as gen
from .adapted_norms import AdaptedNorm, verify_norm_lemma
from .certificate import Certificate, Check
from .examples import CATALOG, _weights_fn, get_example
from .exceptions import (ConfigError, NewtonStalled, NotContractive, ShadowForgeError,
                         SingularAssembly)
from .higher_order import (companion_with_dichotomy, constant_family, extract_shadow,
                           second_order_check, sine_second_order)
from .io import atomic_write_text, format_float, write_json
from .linear_continuous import (ContinuousProjectionField, certify_dichotomy_continuous,
                                fit_min_D_continuous, structural_certificate_continuous)
from .linear_discrete import (DichotomyConstants, DiscreteCocycle, ProjectionField,
                              certify_dichotomy, fit_min_D, structural_certificate)
from .nonlinearity import sine_nonlinearity, sine_nonlinearity_continuous
from .oracle import BvpInstance, bvp_solve, compare
from .rates import make_rate, sample_rate
from .shadow_continuous import (ContinuousPseudoOrbit, QuadraturePolicy, residual_budget,
                                solve_shadow_continuous, verify_shadow_continuous,
                                weighted_defect_continuous, measure_contraction_continuous)
from .shadow_discrete import (PseudoOrbit, TruncationPolicy, measure_contraction, residuals,
                              solve_shadow, theoretical_constants, verify_shadow)
from .systems import ContinuousSystem, DiscreteSystem

MODES = ("certify", "generate", "shadow", "verify", "oracle-check")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NOT_CONTRACTIVE, EXIT_NUMERICAL = 0, 1, 2, 3, 4
ORACLE_TOL = 1e-8
THREADS_ENV = "SHADOW_FORGE_THREADS"


@dataclass
class Problem:
    """A configured system ready to run."""

    name: str
    kind: str
    system: object
    window: float
    second_order: object = None
    grid: np.ndarray | None = None
    extra: dict = field(default_factory=dict)


# -- configuration -------------------------------------------------------------

def _require(cond, msg):
    if not cond:
        raise ConfigError(msg)


def _one_of(section: dict, keys, where: str) -> str:
    present = [k for k in keys if k in section]
    _require(len(present) == 1, f"{where}: exactly one of {list(keys)} is required, "
                                f"got {present or 'none'}")
    return present[0]


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    _require(isinstance(cfg, dict), "config must be a JSON object")
    return cfg


def _constants(spec, fitter, default=None) -> DichotomyConstants:
    if spec is None:
        _require(default is not None, "constants {D, lam, d} are required for this system")
        return default
    _require(isinstance(spec, dict) and "lam" in spec,
             "constants must be an object with at least 'lam'")
    lam, d = float(spec["lam"]), float(spec.get("d", 0.0))
    D = spec.get("D", "fit")
    if D == "fit":
        D = fitter(lam, d)
    return DichotomyConstants(float(D), lam, d)


def _c_value(cfg) -> float:
    nl = cfg.get("nonlinearity", {"name": "zero"})
    _require(isinstance(nl, dict), "nonlinearity must be an object")
    name = nl.get("name", "sine")
    _require(name in ("sine", "zero"), f"unknown nonlinearity {name!r}; use 'sine' or 'zero'")
    c = 0.0 if name == "zero" else float(nl.get("c", 0.0))
    _require(c >= 0, "nonlinearity c must be >= 0")
    return c


def _matrices(value, name):
    M = np.asarray(value, dtype=float)
    _require(M.ndim in (2, 3) and M.shape[-1] == M.shape[-2],
             f"{name} must be a square matrix or a list of square matrices")
    return M


def _grid(cfg, window) -> np.ndarray:
    g = cfg.get("grid", {})
    t_max = float(g.get("t_max", window))
    h = float(g.get("h", 1e-3))
    _require(t_max > 0 and h > 0, "grid t_max and h must be positive")
    n = int(round(t_max / h))
    _require(n >= 4, "grid needs at least 5 nodes")
    _require(n <= 200_000, f"grid has {n + 1} nodes; the limit is 200001")
    return np.linspace(0.0, t_max, n + 1)


def _inline_discrete(spec, cfg, c) -> Problem:
    A = _matrices(spec["A"], "A")
    if A.ndim == 2:
        _require("N" in spec, "inline discrete system with a constant A needs N")
        N = int(spec["N"])
        A = np.tile(A, (N, 1, 1))
    N, dim = A.shape[0], A.shape[1]
    rs = spec.get("rate", {"kind": "exponential"})
    rate = make_rate(rs.get("kind", "exponential"), rs.get("params"))
    P = ProjectionField.coordinate(dim, spec.get("stable", []), spec.get("unstable", []), N + 1)
    rates = sample_rate(rate, N + 1)
    cocycle = DiscreteCocycle(A)
    k = _constants(cfg.get("constants"), lambda lam, d: fit_min_D(cocycle, P, rates, lam, d))
    f = sine_nonlinearity(c, _weights_fn(rate, k))
    sys = DiscreteSystem(cocycle, P, rates, k, f, name=spec.get("name", "inline"))
    return Problem(sys.name, "discrete", sys, N)


def _inline_continuous(spec, cfg, c) -> Problem:
    A = _matrices(spec["A"], "A")
    _require(A.ndim == 2, "inline continuous systems take a constant generator A")
    dim = A.shape[0]
    rs = spec.get("rate", {"kind": "exponential"})
    rate = make_rate(rs.get("kind", "exponential"), rs.get("params"))
    fam = constant_family(A, spec.get("name", "inline"))
    P = ContinuousProjectionField.coordinate(dim, spec.get("stable", []), spec.get("unstable", []))
    window = float(spec.get("t_max", cfg.get("grid", {}).get("t_max", 10.0)))
    k = _constants(cfg.get("constants"),
                   lambda lam, d: fit_min_D_continuous(fam, P, rate, lam, d, t_max=window))
    f = sine_nonlinearity_continuous(c, lambda t: rate.defect_weight(t, k.d))
    sys = ContinuousSystem(fam, P, rate, k, f, name=spec.get("name", "inline"))
    return Problem(sys.name, "continuous", sys, window)


def _second_order(spec, cfg, c) -> Problem:
    _require("A" in spec and "B" in spec, "second_order needs A and B")
    rs = spec.get("rate", {"kind": "exponential"})
    rate = make_rate(rs.get("kind", "exponential"), rs.get("params"))
    ks = cfg.get("constants", {"lam": 0.04})
    d = float(ks.get("d", 0.0))
    sys2 = sine_second_order(spec["A"], spec["B"], c, rate, d, spec.get("name", "second_order"))
    window = float(spec.get("t_max", cfg.get("grid", {}).get("t_max", 30.0)))
    D = ks.get("D", "fit")
    _, sys = companion_with_dichotomy(sys2, float(ks["lam"]), spec.get("stable"),
                                      spec.get("unstable", ()),
                                      None if D == "fit" else float(D), t_max=window)
    return Problem(sys2.name, "second_order", sys, window, second_order=sys2)


def build_problem(cfg: dict) -> Problem:
    """System, constants and window from the ``system`` section."""
    s = cfg.get("system")
    _require(isinstance(s, dict), "config needs a 'system' object")
    key = _one_of(s, ("catalog", "inline", "second_order"), "system")
    c = _c_value(cfg)
    try:
        if key == "catalog":
            name = s["catalog"]
            if name == "damped_oscillator":
                spec = {"A": [[-0.1]], "B": [[-1.0]], "name": name, **s.get("params", {})}
                prob = _second_order(spec, cfg, c)
            else:
                base = name[: -len("_sampled")] if name.endswith("_sampled") else name
                _require(base in CATALOG, f"unknown catalog entry {name!r}; available: "
                                          f"{sorted(CATALOG) + ['damped_oscillator']}")
                _require("constants" not in cfg,
                         "catalog entries carry their own constants; use an inline system "
                         "to supply or fit others")
                entry = get_example(name, c=c, **s.get("params", {}))
                prob = Problem(entry.name, entry.kind, entry.system, entry.window)
        elif key == "inline":
            spec = s["inline"]
            kind = spec.get("kind", "discrete")
            _require(kind in ("discrete", "continuous"), f"unknown inline kind {kind!r}")
            prob = (_inline_discrete if kind == "discrete" else _inline_continuous)(spec, cfg, c)
        else:
            prob = _second_order(s["second_order"], cfg, c)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid system specification: {e}") from None
    if prob.kind != "discrete":
        prob.grid = _grid(cfg, prob.window)
    return prob


def _truncation(cfg) -> TruncationPolicy:
    so = cfg.get("solver", {})
    kind = so.get("truncation", "finite_horizon")
    _require(kind in ("finite_horizon", "strict", "extended"),
             f"unknown truncation policy {kind!r}")
    return TruncationPolicy(kind, so.get("truncation_tol"))


def make_pseudo_orbit(cfg: dict, prob: Problem, seed=None):
    """Load or generate the pseudo-orbit described by the ``pseudo_orbit`` section."""
    po_cfg = cfg.get("pseudo_orbit", {"generate": {"perturbation": {"kind": "none"}}})
    key = _one_of(po_cfg, ("file", "generate"), "pseudo_orbit")
    sys = prob.system
    if key == "file":
        try:
            po = gen.read_pseudo_orbit(po_cfg["file"])
        except FileNotFoundError:
            raise ConfigError(f"pseudo-orbit file {po_cfg['file']} not found") from None
        _require(po.y.shape[1] == sys.dim,
                 f"pseudo-orbit dimension {po.y.shape[1]} differs from the system's {sys.dim}")
        if prob.kind == "discrete":
            _require(po.y.shape[0] == sys.horizon + 1,
                     f"pseudo-orbit has {po.y.shape[0]} states, the system needs {sys.horizon + 1}")
            return po.measured(sys)
        po.delta = weighted_defect_continuous(po, sys)[0]
        prob.grid = po.grid
        return po
    g = po_cfg["generate"]
    pert = dict(g.get("perturbation", {"kind": "none"}))
    kind = pert.get("kind", "none")
    _require(kind in gen.KINDS, f"unknown perturbation kind {kind!r}; expected one of {gen.KINDS}")
    if seed is not None:
        pert["seed"] = seed
    if kind in gen.RANDOM_KINDS:
        _require("seed" in pert, f"perturbation {kind!r} is random and needs a seed")
    mag = float(pert.get("magnitude", 0.0))
    _require(mag >= 0, "perturbation magnitude must be >= 0")
    base_kind = g.get("base", "exact")
    _require(base_kind in ("exact", "integrated"), f"unknown base {base_kind!r}")
    x0 = g.get("x0")
    _require(base_kind == "exact" or x0 is not None, "an integrated base needs x0")
    try:
        if prob.kind == "discrete":
            base = gen.exact_orbit(sys, x0)
            if kind == "impulse":
                return gen.impulse(sys, mag, int(pert.get("index", 5)), pert.get("direction"), base)
            if kind == "noise":
                return gen.noise(sys, mag, int(pert["seed"]), base)
            _require(kind == "none", f"perturbation {kind!r} applies to continuous systems only")
            return PseudoOrbit(base).measured(sys)
        grid = prob.grid
        base = None if x0 is None else gen.solution(sys, grid, x0)
        if kind == "integrator_drift":
            _require(x0 is not None, "integrator_drift needs x0")
            return gen.integrator_drift(sys, grid, x0)
        if kind == "bump":
            make = gen.bump_lifted if prob.kind == "second_order" else gen.bump
            return make(sys, grid, mag, pert.get("center"), pert.get("width"),
                        pert.get("direction"), base)
        if kind == "noise":
            _require(prob.kind != "second_order",
                     "noise is not lifted for second-order systems; use bump")
            return gen.smooth_noise(sys, grid, mag, int(pert["seed"]), base=base)
        _require(kind == "none", f"perturbation {kind!r} applies to discrete systems only")
        Y, Yp = base if base is not None else (np.zeros((grid.size, sys.dim)),) * 2
        po = ContinuousPseudoOrbit(grid, Y, Yp)
        po.delta = weighted_defect_continuous(po, sys)[0]
        return po
    except (KeyError, TypeError) as e:
        raise ConfigError(f"invalid perturbation specification: {e}") from None


# -- runs ----------------------------------------------------------------------

def _theory(prob: Problem) -> dict:
    k = prob.system.constants
    mode = "discrete" if prob.kind == "discrete" else "continuous"
    t = theoretical_constants(prob.system.c, k.D, k.lam, mode)
    return {"q": t.q, "D_bar": t.D_bar, "C": t.C if t.contractive else float("inf"),
            "contractive": t.contractive}


def _dichotomy_cert(prob: Problem) -> Certificate:
    s = prob.system
    if prob.kind == "discrete":
        return certify_dichotomy(s.cocycle, s.projections, s.rates, s.constants, norm=s.norm)
    return certify_dichotomy_continuous(s.family, s.projections, s.rate, s.constants,
                                        norm=s.norm, t_max=min(prob.window, s.family.t_max))


def _structure_cert(prob: Problem) -> Certificate:
    """Projection algebra and invariance; a shadow built on wrong projections is meaningless."""
    s = prob.system
    if prob.kind == "discrete":
        return structural_certificate(s.cocycle, s.projections)
    grid = prob.grid
    if grid.size > 257:
        grid = grid[np.unique(np.linspace(0, grid.size - 1, 257).round().astype(int))]
    return structural_certificate_continuous(s.family, s.projections, grid)


def _lipschitz_cert(prob: Problem, samples: int, seed: int) -> Certificate:
    s = prob.system
    cert = Certificate(checked_window=(0.0, float(prob.window)))
    if prob.kind == "discrete":
        chk = s.f.check_lipschitz(s.weights, s.dim, samples=samples, seed=seed, norm=s.norm)
    else:
        grid = np.linspace(0.0, float(prob.window), 257)
        chk = s.f.check_lipschitz(s.rate, s.constants.d, s.dim, grid, samples=samples,
                                  seed=seed, norm=s.norm)
    cert.add_check(chk)
    return cert


def _adapted_norm(prob: Problem) -> AdaptedNorm:
    s = prob.system
    if prob.kind == "discrete":
        return AdaptedNorm(s.chain, s.constants)
    from .shadow_continuous import norm_for
    return norm_for(s, prob.grid)


def _solve(prob: Problem, po, cfg):
    so = cfg.get("solver", {})
    tol = float(so.get("tol", 1e-12))
    max_iter = int(so.get("max_iter", 2000))
    trunc = _truncation(cfg)
    if prob.kind == "discrete":
        r = solve_shadow(po.y, prob.system, tol=tol, max_iter=max_iter, trunc=trunc)
        return r, verify_shadow(r, prob.system)
    quad = QuadraturePolicy(so.get("quadrature_tol"), True, trunc)
    r = solve_shadow_continuous(po, prob.system, tol=tol, max_iter=max_iter, quad=quad)
    cert = verify_shadow_continuous(r, po, prob.system)
    if prob.kind == "second_order":
        nodes, R, budget = second_order_check(r, po, prob.second_order, prob.system)
        x = extract_shadow(r, prob.second_order.dim)
        y = po.y[:, prob.second_order.dim:]
        cert.add("second-order distance bound", np.linalg.norm(x - y, axis=1), r.C * r.delta,
                 where=[float(t) for t in po.grid])
        cert.add("second-order residual budget", R, budget,
                 where=[float(po.grid[j]) for j in nodes])
    return r, cert


def trajectory_csv(prob: Problem, r, po) -> str:
    """Columns ``n|t, y[*], x[*], dist, residual, center_residual``.

    ``residual`` is the norm of the equation residual of ``x`` (discrete: of
    the step from ``n`` to ``n+1``, empty on the last row; continuous: on the
    grid), ``center_residual`` the norm of its component in the center fiber.
    """
    s = prob.system
    dim = r.y.shape[1]
    out = _io.StringIO()
    first = "n" if prob.kind == "discrete" else "t"
    cols = [first] + [f"y[{i}]" for i in range(dim)] + [f"x[{i}]" for i in range(dim)]
    out.write(",".join(cols + ["dist", "residual", "center_residual"]) + "\n")
    if prob.kind == "discrete":
        res = residuals(r.x, s)
        P3 = s.chain.P[2][1:]
        rn = np.append(s.norm.vecs(res), np.nan)
        cn = np.append(s.norm.vecs(np.einsum("nij,nj->ni", P3, res)), np.nan)
        labels = [str(n) for n in range(r.x.shape[0])]
    else:
        res, _ = residual_budget(r, po, s)
        P3 = s.chain(po.grid).P[2]
        rn = s.norm.vecs(res)
        cn = s.norm.vecs(np.einsum("nij,nj->ni", P3, res))
        labels = [format_float(t) for t in po.grid]
    dist = s.norm.vecs(r.x - r.y)
    for j, lab in enumerate(labels):
        row = [lab] + [format_float(v) for v in r.y[j]] + [format_float(v) for v in r.x[j]]
        row += [format_float(dist[j]),
                "" if np.isnan(rn[j]) else format_float(rn[j]),
                "" if np.isnan(cn[j]) else format_float(cn[j])]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def run(cfg: dict, mode: str | None = None, out_dir=None, oracle_check: bool = False,
        seed=None, log=print) -> int:
    """Execute one configuration and write its artifacts; returns the exit status."""
    mode = mode or cfg.get("mode", "shadow")
    _require(mode in MODES, f"unknown mode {mode!r}; expected one of {MODES}")
    out = Path(out_dir or cfg.get("output", {}).get("dir", "shadow_forge_out"))
    checks = cfg.get("checks", {})
    samples = int(checks.get("samples", 1000))
    check_seed = int(checks.get("seed", 0))
    oracle_check = oracle_check or bool(checks.get("oracle", False)) or mode == "oracle-check"

    prob = build_problem(cfg)
    k = prob.system.constants
    report = {"mode": mode, "system": prob.name, "kind": prob.kind,
              "constants": {"D": k.D, "lam": k.lam, "d": k.d, "c": prob.system.c},
              "theory": _theory(prob), "certificates": {}}
    certs = report["certificates"]
    summary = {"mode": mode, "system": prob.name, "kind": prob.kind}

    if mode in ("certify", "verify"):
        certs["dichotomy"] = _dichotomy_cert(prob)
        certs["lipschitz"] = _lipschitz_cert(prob, samples, check_seed)
        if mode == "certify":
            return _finish(out, report, summary, None, log)

    if oracle_check and prob.kind != "discrete":
        raise ConfigError("the oracle check applies to discrete systems only")

    po = make_pseudo_orbit(cfg, prob, seed)
    summary["delta"] = report["delta"] = po.delta
    if mode == "generate":
        gen.write_pseudo_orbit(out / "pseudo_orbit.csv", po)
        summary["pass"] = True
        summary["exit_status"] = EXIT_OK
        summary["files"] = ["pseudo_orbit.csv", "summary.json"]
        write_json(out / "summary.json", summary)
        log(f"generate: delta = {po.delta:.6g} -> {out / 'pseudo_orbit.csv'}")
        return EXIT_OK

    certs["structure"] = _structure_cert(prob)
    r, shadow_cert = _solve(prob, po, cfg)
    certs["shadow"] = shadow_cert
    report["result"] = r.summary()
    if prob.kind != "discrete":
        report["result"]["quadrature_error"] = float(getattr(r, "quadrature_error", 0.0))
    summary.update({"q": r.q, "D_bar": r.D_bar, "C": r.C, "C_delta": r.C * r.delta,
                    "sup_distance": float(prob.system.norm.vecs(r.x - r.y).max()),
                    "iterations": r.iterations})

    if mode == "verify":
        certs["norm_lemma"] = verify_norm_lemma(_adapted_norm(prob), samples=samples,
                                                seed=check_seed)
        cc = Certificate(checked_window=(0.0, float(prob.window)))
        if prob.kind == "discrete":
            m = measure_contraction(po.y, prob.system, pairs=100, seed=check_seed)
        else:
            m = measure_contraction_continuous(po, prob.system, seed=check_seed)
        slack = 1e-6 * m["q"] + (1e-8 if m["approximate"] else 0.0)
        cc.add("measured contraction", m["max_ratio"], m["q"] + slack, abs_floor=0.0)
        certs["contraction"] = cc

    if oracle_check:
        oc = Certificate(checked_window=(0, prob.system.horizon))
        try:
            z_ref, _ = bvp_solve(BvpInstance(prob.system, po.y))
        except (NewtonStalled, SingularAssembly) as e:
            oc.add_check(Check("oracle agreement", float("inf"), False, None,
                               f"{type(e).__name__}: {e}"))
        else:
            diff = compare(z_ref, r.z)
            oc.add("oracle agreement", diff, ORACLE_TOL, abs_floor=0.0)
            report["oracle_sup_diff"] = summary["oracle_sup_diff"] = diff
        certs["oracle"] = oc

    return _finish(out, report, summary, trajectory_csv(prob, r, po), log)


def _finish(out: Path, report, summary, trajectory, log) -> int:
    certs = report["certificates"]
    ok = all(c.overall for c in certs.values())
    report["bullets"] = [{"certificate": name, "name": ch.name, "pass": ch.passed,
                          "worst_ratio": ch.worst_ratio}
                         for name, c in certs.items() for ch in c.inequalities]
    report["certificates"] = {name: c.to_dict() for name, c in certs.items()}
    report["pass"] = ok
    status = EXIT_OK if ok else EXIT_FAIL
    summary["pass"] = ok
    summary["exit_status"] = status
    summary["failed"] = [f"{b['certificate']}: {b['name']}" for b in report["bullets"]
                         if not b["pass"]]
    files = ["report.json", "summary.json"]
    write_json(out / "report.json", report)
    if trajectory is not None:
        atomic_write_text(out / "trajectory.csv", trajectory)
        files.insert(1, "trajectory.csv")
    summary["files"] = files
    write_json(out / "summary.json", summary)
    for b in report["bullets"]:
        log(f"[{'pass' if b['pass'] else 'FAIL'}] {b['certificate']}: {b['name']} "
            f"(worst ratio {b['worst_ratio']:.3g})")
    log(f"{'PASS' if ok else 'FAIL'} -> {out}")
    return status


def _thread_limit():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return contextlib.nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {value!r}") from None
    _require(n >= 1, f"{THREADS_ENV} must be a positive integer, got {value!r}")
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=n)


def _write_error(out_dir, cfg, mode, status, message):
    try:
        out = Path(out_dir or (cfg or {}).get("output", {}).get("dir", "shadow_forge_out"))
        write_json(out / "summary.json", {"mode": mode, "pass": False, "exit_status": status,
                                          "error": message})
    except (OSError, AttributeError, TypeError):
        pass


def main(argv=None) -> int:
    p = argparse.ArgumentParser(prog="shadow-forge",
                                description="Certify dichotomies and compute shadowing orbits.")
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--mode", choices=MODES, help="overrides the config's mode")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--oracle-check", action="store_true",
                   help="also compare with the dense reference solver (discrete)")
    p.add_argument("--seed", type=int, help="seed for random perturbations")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    args = p.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        p.error("--seed must be an unsigned 64-bit integer")
    log = (lambda *a, **k: None) if args.quiet else print
    cfg = None
    mode = args.mode
    try:
        cfg = load_config(args.config)
        mode = mode or cfg.get("mode", "shadow")
        with _thread_limit():
            return run(cfg, args.mode, args.out, args.oracle_check, args.seed, log)
    except ConfigError as e:
        status, msg = EXIT_CONFIG, f"configuration error: {e}"
    except NotContractive as e:
        status, msg = EXIT_NOT_CONTRACTIVE, f"not contractive: {e}"
    except (ShadowForgeError, ArithmeticError, np.linalg.LinAlgError) as e:
        status, msg = EXIT_NUMERICAL, f"numerical failure ({type(e).__name__}): {e}"
    print(msg, file=_sys.stderr)
    _write_error(args.out, cfg, mode, status, msg)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
