"""Pseudo-orbits with a prescribed weighted defect, and their file format.

Generators start from an exact orbit (by default the zero orbit, which is
exact for every catalog perturbation) and add a perturbation whose overall
scale is tuned so that the measured weighted defect equals the requested
value.

File format: CSV with ``#`` header lines ``kind``, ``delta``, ``dim`` and a
column header; discrete files have columns ``n, y[0..]`` and continuous
files ``t, y[0..], yp[0..]`` (``yp`` is ``y'``).  Numbers use 17
significant digits.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from ._validation import check_grid, check_random_state
from .exceptions import ConfigError
from .io import atomic_write_text
from .shadow_continuous import ContinuousPseudoOrbit, weighted_defect_continuous
from .shadow_discrete import PseudoOrbit, weighted_defect
from .systems import ContinuousSystem, DiscreteSystem

KINDS = ("impulse", "noise", "bump", "integrator_drift", "none")
RANDOM_KINDS = ("noise",)


def exact_orbit(sys: DiscreteSystem, x0=None) -> np.ndarray:
    """Forward orbit of ``x_{n+1} = A_n x_n + f_n(x_n)`` from ``x0`` (default 0)."""
    x = np.zeros((sys.horizon + 1, sys.dim))
    if x0 is not None:
        x[0] = np.asarray(x0, dtype=float).reshape(sys.dim)
    for n in range(sys.horizon):
        x[n + 1] = sys.cocycle.A[n] @ x[n] + sys.f(n, x[n])
    return x


def _scale_to(measure, target: float, guess: float) -> float:
    """Scale ``s >= 0`` with ``measure(s) = target``; ``measure`` is increasing with ``measure(0) = 0``."""
    if target == 0.0:
        return 0.0
    lo, hi = 0.0, guess
    for _ in range(200):
        if measure(hi) >= target:
            break
        lo, hi = hi, 2 * hi
    else:
        raise ValueError(f"cannot reach weighted defect {target:g}")
    s = brentq(lambda v: measure(v) - target, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps,
               maxiter=500)
    return s


def _unit(direction, dim):
    u = np.ones(dim) if direction is None else np.asarray(direction, dtype=float).reshape(dim)
    n = np.linalg.norm(u)
    if n == 0:
        raise ValueError("direction must be nonzero")
    return u / n


def impulse(sys: DiscreteSystem, magnitude: float, index: int = 5, direction=None,
            base=None) -> PseudoOrbit:
    """Exact orbit displaced at a single index, scaled to weighted defect ``magnitude``."""
    N = sys.horizon
    if not 0 <= index <= N:
        raise ValueError(f"impulse index {index} outside [0, {N}]")
    base = exact_orbit(sys) if base is None else np.asarray(base, dtype=float)
    u = _unit(direction, sys.dim)

    def build(s):
        y = base.copy()
        y[index] += s * u
        return y

    s = _scale_to(lambda v: weighted_defect(build(v), sys)[0], magnitude, magnitude)
    y = build(s)
    delta, per = weighted_defect(y, sys)
    return PseudoOrbit(y, delta, per, f"impulse(index={index})")


def noise(sys: DiscreteSystem, magnitude: float, seed, base=None) -> PseudoOrbit:
    """Exact orbit plus uniform noise scaled by the step weights, tuned to ``magnitude``."""
    rng = check_random_state(seed)
    N = sys.horizon
    base = exact_orbit(sys) if base is None else np.asarray(base, dtype=float)
    w = np.concatenate([[sys.weights[0]], sys.weights])
    E = rng.uniform(-1.0, 1.0, size=(N + 1, sys.dim)) * w[:, None]
    s = _scale_to(lambda v: weighted_defect(base + v * E, sys)[0], magnitude, magnitude)
    y = base + s * E
    delta, per = weighted_defect(y, sys)
    return PseudoOrbit(y, delta, per, "noise")


def _base(sys, grid, base):
    if base is None:
        Z = np.zeros((grid.size, sys.dim))
        return Z, Z
    Y, Yp = (np.asarray(b, dtype=float) for b in base)
    return Y, Yp


def bump(sys: ContinuousSystem, grid, magnitude: float, center: float | None = None,
         width: float | None = None, direction=None, base=None) -> ContinuousPseudoOrbit:
    """``y = base + eps exp(-((t - t0)/w)^2) u`` with exact ``y'``.

    ``base`` is a pair ``(Y, Y')`` of a solution on the grid (default zero).
    """
    grid = check_grid(grid)
    Y0, Yp0 = _base(sys, grid, base)
    t0 = 0.25 * grid[-1] if center is None else float(center)
    w = 0.1 * grid[-1] if width is None else float(width)
    u = _unit(direction, sys.dim)
    phi = np.exp(-((grid - t0) / w) ** 2)
    dphi = -2 * (grid - t0) / w ** 2 * phi

    def build(eps):
        return ContinuousPseudoOrbit(grid, Y0 + eps * phi[:, None] * u,
                                     Yp0 + eps * dphi[:, None] * u)

    eps = _scale_to(lambda v: weighted_defect_continuous(build(v), sys)[0], magnitude,
                    magnitude)
    po = build(eps)
    po.delta = weighted_defect_continuous(po, sys)[0]
    po.source = f"bump(t0={t0:g}, width={w:g})"
    return po


def smooth_noise(sys: ContinuousSystem, grid, magnitude: float, seed,
                 modes: int = 4, base=None) -> ContinuousPseudoOrbit:
    """Random trigonometric perturbation of ``base`` (default zero), tuned to ``magnitude``."""
    rng = check_random_state(seed)
    grid = check_grid(grid)
    Y0, Yp0 = _base(sys, grid, base)
    amp = rng.uniform(-1, 1, size=(modes, sys.dim))
    freq = rng.uniform(0.2, 2.0, size=modes)
    phase = rng.uniform(0, 2 * np.pi, size=modes)
    arg = np.outer(grid, freq) + phase
    Y = np.sin(arg) @ amp
    dY = (np.cos(arg) * freq) @ amp
    w = sys.weight(grid)[:, None]

    def build(eps):
        return ContinuousPseudoOrbit(grid, Y0 + eps * w * Y, Yp0 + eps * w * dY
                                     + eps * np.gradient(w[:, 0], grid)[:, None] * Y)

    eps = _scale_to(lambda v: weighted_defect_continuous(build(v), sys)[0], magnitude,
                    magnitude)
    po = build(eps)
    po.delta = weighted_defect_continuous(po, sys)[0]
    po.source = "smooth_noise"
    return po


def bump_lifted(sys: ContinuousSystem, grid, magnitude: float, center: float | None = None,
                width: float | None = None, direction=None, base=None) -> ContinuousPseudoOrbit:
    """Bump on the position block of a companion system, lifted as ``(y', y)``.

    With ``y = base + eps phi u`` the lifted pair keeps ``w2' = w1`` exactly,
    so the defect lives in the first block only.
    """
    grid = check_grid(grid)
    k = sys.dim // 2
    Y0, Yp0 = _base(sys, grid, base)
    t0 = 0.25 * grid[-1] if center is None else float(center)
    w = 0.1 * grid[-1] if width is None else float(width)
    u = _unit(direction, k)
    s = (grid - t0) / w
    phi = np.exp(-s ** 2)
    d1 = -2 * s / w * phi
    d2 = (4 * s ** 2 - 2) / w ** 2 * phi

    def build(eps):
        W = Y0 + eps * np.hstack([d1[:, None] * u, phi[:, None] * u])
        Wp = Yp0 + eps * np.hstack([d2[:, None] * u, d1[:, None] * u])
        return ContinuousPseudoOrbit(grid, W, Wp)

    eps = _scale_to(lambda v: weighted_defect_continuous(build(v), sys)[0], magnitude,
                    magnitude)
    po = build(eps)
    po.delta = weighted_defect_continuous(po, sys)[0]
    po.source = f"bump_lifted(t0={t0:g}, width={w:g})"
    return po


def integrator_drift(sys: ContinuousSystem, grid, x0) -> ContinuousPseudoOrbit:
    """Explicit Euler on the grid; ``y'`` from differences (their error is charged to delta)."""
    grid = check_grid(grid)
    y = np.zeros((grid.size, sys.dim))
    y[0] = np.asarray(x0, dtype=float).reshape(sys.dim)
    h = np.diff(grid)
    for j in range(grid.size - 1):
        y[j + 1] = y[j] + h[j] * sys.vector_field(grid[j], y[j])[0]
    po = ContinuousPseudoOrbit(grid, y)
    po.delta = weighted_defect_continuous(po, sys)[0]
    po.source = "integrator_drift(euler)"
    return po


def solution(sys: ContinuousSystem, grid, x0, rtol: float = 1e-12, atol: float = 1e-14):
    """Accurate solution through ``x0`` on the grid and its vector field, ``(Y, Y')``."""
    grid = check_grid(grid)
    x0 = np.asarray(x0, dtype=float).reshape(sys.dim)
    sol = solve_ivp(lambda t, x: sys.vector_field(t, x)[0], (grid[0], grid[-1]), x0,
                    method="DOP853", t_eval=grid, rtol=rtol, atol=atol)
    if not sol.success:
        raise ArithmeticError(f"reference integration failed: {sol.message}")
    Y = sol.y.T
    return Y, sys.vector_field(grid, Y)


# -- file format ---------------------------------------------------------------

def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def format_pseudo_orbit(po) -> str:
    out = io.StringIO()
    continuous = isinstance(po, ContinuousPseudoOrbit)
    dim = po.y.shape[1]
    out.write(f"# kind={'continuous' if continuous else 'discrete'}\n")
    out.write(f"# delta={_fmt(po.delta if po.delta is not None else float('nan'))}\n")
    out.write(f"# dim={dim}\n")
    if po.source:
        out.write(f"# source={po.source}\n")
    cols = ["t" if continuous else "n"] + [f"y[{i}]" for i in range(dim)]
    if continuous:
        cols += [f"yp[{i}]" for i in range(dim)]
    out.write(",".join(cols) + "\n")
    for j in range(po.y.shape[0]):
        row = [_fmt(po.grid[j]) if continuous else str(j)]
        row += [_fmt(v) for v in po.y[j]]
        if continuous:
            row += [_fmt(v) for v in po.y_prime[j]]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def write_pseudo_orbit(path, po) -> Path:
    return atomic_write_text(path, format_pseudo_orbit(po))


def read_pseudo_orbit(path):
    """Load a file written by :func:`write_pseudo_orbit`."""
    meta = {}
    lines = Path(path).read_text().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
        elif line.strip():
            body.append(line)
    if "kind" not in meta or "dim" not in meta or not body:
        raise ConfigError(f"{path}: not a pseudo-orbit file")
    dim = int(meta["dim"])
    data = np.array([[float(v) for v in line.split(",")] for line in body[1:]])
    delta = float(meta["delta"]) if "delta" in meta else None
    if delta is not None and np.isnan(delta):
        delta = None
    if meta["kind"] == "continuous":
        return ContinuousPseudoOrbit(data[:, 0], data[:, 1:1 + dim], data[:, 1 + dim:1 + 2 * dim],
                                     delta=delta, source=meta.get("source", ""))
    return PseudoOrbit(data[:, 1:1 + dim], delta, source=meta.get("source", ""))
