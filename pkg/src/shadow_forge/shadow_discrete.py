"""Shadowing of discrete pseudo-orbits by a contraction on the adapted sup-norm.

Given a pseudo-orbit ``y`` of ``x_{n+1} = A_n x_n + f_n(x_n)`` on ``[0, N]``,
the operator ``T`` below has a unique fixed point ``z`` in the ball of
radius ``C delta``, and ``x = y + (I - P3) z`` is a true orbit up to a
residual in the center fibers.  With

    g_m(z) = A_m y_m + f_m(y_m + (I - P3_m) z_m) - y_{m+1},

    (T z)_n = -P3_n g_{n-1}
              + sum_{m<n}  A(n, m+1) P1_{m+1} g_m
              - sum_{m>=n} A(n, m+1) P2_{m+1} g_m        (unstable pullback),

the shadow satisfies ``x_{n+1} - A_n x_n - f_n(x_n) = P3_{n+1} z_{n+1}``.
The unstable sum is cut at ``m = N - 1`` and the omitted tail is bounded.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_random_state, check_trajectory
from .adapted_norms import AdaptedNorm
from .certificate import Certificate
from .exceptions import Diverged, NotContractive, TailBoundTooLarge
from .systems import DiscreteSystem

DEFAULT_TOL = 1e-12
MAX_ITER = 2000
DIVERGENCE_RUN = 5
RATIO_FLOOR = 1e-3
CENTER_TOL = 1e-10
FIBER_RTOL = 1e-8
POLICIES = ("finite_horizon", "extended", "strict")


@dataclass(frozen=True)
class TheoreticalConstants:
    q: float
    D_bar: float
    C: float

    @property
    def contractive(self) -> bool:
        return self.q < 1.0

    def to_dict(self):
        return {"q": self.q, "D_bar": self.D_bar, "C": self.C, "contractive": self.contractive}


def theoretical_constants(c: float, D: float, lam: float | None = None,
                          mode: str = "discrete") -> TheoreticalConstants:
    """Contraction constant ``q``, ``D_bar`` and ``C = D_bar/(1-q)``.

    Discrete: ``q = c(4D+1)``, ``D_bar = 4D+1``.  Continuous:
    ``q = c(2D+1) + 2cD/lam``, ``D_bar = 2D + 2D/lam + 1``.  ``C`` is
    infinite when ``q >= 1`` (check :attr:`TheoreticalConstants.contractive`).
    """
    if c < 0 or D <= 0:
        raise ValueError(f"need c >= 0 and D > 0, got c={c}, D={D}")
    if mode == "discrete":
        q, D_bar = c * (4 * D + 1), 4 * D + 1
    elif mode == "continuous":
        if lam is None or lam <= 0:
            raise ValueError("continuous constants need lam > 0")
        q, D_bar = c * (2 * D + 1) + 2 * c * D / lam, 2 * D + 2 * D / lam + 1
    else:
        raise ValueError(f"mode must be 'discrete' or 'continuous', got {mode!r}")
    C = D_bar / (1 - q) if q < 1 else math.inf
    return TheoreticalConstants(float(q), float(D_bar), float(C))


@dataclass
class TruncationPolicy:
    """How the unstable sum beyond the window is handled.

    ``finite_horizon`` cuts it at the window end and records the analytic
    tail bound; ``strict`` does the same but raises when the bound exceeds
    ``tolerance``; ``extended`` lengthens the window (the system needs an
    extender) until the bound at the original window end is below
    ``tolerance``.  ``tolerance`` defaults to ``1e-6 * delta``.
    """

    kind: str = "finite_horizon"
    tolerance: float | None = None
    max_extension: int = 4096

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"truncation policy must be one of {POLICIES}")

    def tol_for(self, delta: float) -> float:
        return self.tolerance if self.tolerance is not None else 1e-6 * delta


@dataclass
class PseudoOrbit:
    """States ``y_0..y_N`` with their weighted defect (computed when omitted)."""

    y: np.ndarray
    delta: float | None = None
    per_step: np.ndarray | None = None
    source: str = ""

    def __post_init__(self):
        self.y = check_trajectory(self.y, name="pseudo-orbit")

    def measured(self, sys: DiscreteSystem) -> "PseudoOrbit":
        delta, per_step = weighted_defect(self.y, sys)
        return PseudoOrbit(self.y, delta, per_step, self.source)


@dataclass
class ShadowResult:
    """Fixed point, shadow and the bookkeeping needed to verify it."""

    nodes: np.ndarray
    y: np.ndarray
    z: np.ndarray
    z_bar: np.ndarray
    x: np.ndarray
    q: float
    D_bar: float
    C: float
    delta: float
    iterations: int
    fp_residual: float
    T0_norm: float
    measured_q: float
    tail_bound: float
    truncation_flag: bool
    iteration_bound: int | None = None
    update_norms: list = field(default_factory=list)
    tol: float = DEFAULT_TOL
    mode: str = "discrete"
    policy: str = "finite_horizon"
    horizon_used: float | None = None
    notes: list = field(default_factory=list)

    @property
    def distance(self) -> np.ndarray:
        return np.linalg.norm(self.x - self.y, axis=1)

    def summary(self) -> dict:
        return {
            "mode": self.mode, "q": self.q, "D_bar": self.D_bar, "C": self.C,
            "delta": self.delta, "C_delta": self.C * self.delta,
            "sup_distance": float(self.distance.max()) if self.distance.size else 0.0,
            "iterations": self.iterations, "iteration_bound": self.iteration_bound,
            "fp_residual": self.fp_residual, "T0_norm": self.T0_norm,
            "measured_q": self.measured_q, "tail_bound": self.tail_bound,
            "truncation_flag": self.truncation_flag, "policy": self.policy,
            "tol": self.tol,
        }


def weighted_defect(y, sys: DiscreteSystem):
    """``delta = max_n |y_{n+1} - A_n y_n - f_n(y_n)| / w_n`` and the per-step ratios."""
    y = check_trajectory(y, sys.horizon + 1, sys.dim, "pseudo-orbit")
    raw = sys.norm.vecs(y[1:] - sys.step(y[:-1]))
    w = sys.weights
    if np.any(w <= 0):
        raise ValueError("degenerate step weight; mu must be strictly increasing")
    per_step = raw / w
    return (float(per_step.max()) if per_step.size else 0.0), per_step


def _operator_parts(g, chain, N):
    """Stable sum ``S``, unstable sum ``U`` and center term from the defects ``g``."""
    dim = chain.dim
    P1, P2, P3 = chain.P
    S = np.zeros((N + 1, dim))
    U = np.zeros((N + 1, dim))
    for n in range(N):
        S[n + 1] = chain.Phi_s[n] @ S[n] + P1[n + 1] @ g[n]
    for n in range(N - 1, -1, -1):
        U[n] = chain.Psi[n] @ (U[n + 1] + P2[n + 1] @ g[n])
    center = np.zeros((N + 1, dim))
    center[1:] = -np.einsum("nij,nj->ni", P3[1:N + 1], g)
    return S, U, center


def defects(z, y, sys: DiscreteSystem) -> np.ndarray:
    """``g_m(z)`` for ``m = 0..N-1``."""
    N = sys.horizon
    z_bar = z - np.einsum("nij,nj->ni", sys.chain.P[2], z)
    return (np.einsum("nij,nj->ni", sys.cocycle.A[:N], y[:N])
            + sys.f.batch(np.arange(N), y[:N] + z_bar[:N]) - y[1:])


def apply_T(z, y, sys: DiscreteSystem, trunc: TruncationPolicy | None = None):
    """One application of the shadowing operator on ``[0, N]``.

    The unstable sum stops at ``m = N - 1``; under the ``strict`` policy a
    tail bound above the tolerance raises :class:`TailBoundTooLarge`.
    """
    N = sys.horizon
    z = check_trajectory(z, N + 1, sys.dim, "z")
    y = check_trajectory(y, N + 1, sys.dim, "pseudo-orbit")
    S, U, center = _operator_parts(defects(z, y, sys), sys.chain, N)
    if trunc is not None and trunc.kind == "strict":
        delta = weighted_defect(y, sys)[0]
        tail = tail_bounds(sys, delta).max()
        if tail > trunc.tol_for(delta):
            raise TailBoundTooLarge(
                f"unstable tail bound {tail:.3g} exceeds tolerance {trunc.tol_for(delta):.3g}")
    return center + S - U


def tail_bounds(sys: DiscreteSystem, delta: float, N_end: int | None = None) -> np.ndarray:
    """``D delta (1 + cC) (mu_n/mu_N)^lam`` at every node: bound on the omitted unstable tail."""
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "discrete")
    C = consts.C if consts.contractive else 0.0
    lm = sys.rates.log_mu
    N_end = sys.horizon if N_end is None else N_end
    n = np.arange(sys.horizon + 1)
    return k.D * delta * (1 + sys.c * C) * np.exp(k.lam * (lm[n] - lm[N_end]))


def _iteration_bound(tol, C, delta, q):
    if delta <= 0 or C * delta <= tol:
        return 0
    if not 0 < q <= 0.9:
        return None
    return int(math.ceil(math.log(tol / (C * delta)) / math.log(q))) + 2


def _fixed_point(op, sup, z0, q, tol, max_iter, linear):
    """Picard iteration with the a-posteriori stopping rule.

    Returns ``(z, iterations, update_norms, ratios)``.
    """
    z = z0
    updates, ratios = [], []
    run = 0
    for it in range(1, max_iter + 1):
        z_new = op(z)
        upd = sup(z_new - z)
        updates.append(upd)
        z_scale = sup(z_new)
        if linear:
            return z_new, it, updates, ratios
        if len(updates) > 1 and updates[-2] > 0:
            ratios.append(upd / updates[-2])
            run = run + 1 if ratios[-1] > 1.0 else 0
            if run >= DIVERGENCE_RUN:
                raise Diverged(f"update norm grew for {run} consecutive iterations "
                               f"(last ratio {ratios[-1]:.3g})")
        q_hat = max(ratios[-1] if ratios else q, RATIO_FLOOR)
        z = z_new
        if upd <= tol * (1 - min(q_hat, 0.999)) / q_hat or upd <= 64 * np.finfo(float).eps * z_scale:
            return z, it, updates, ratios
    raise Diverged(f"no convergence within {max_iter} iterations "
                   f"(last update {updates[-1]:.3g})")


def solve_shadow(y, sys: DiscreteSystem, tol: float = DEFAULT_TOL,
                 max_iter: int = MAX_ITER, trunc: TruncationPolicy | None = None) -> ShadowResult:
    """Fixed point of :func:`apply_T` by Picard iteration from ``z = 0``.

    Stops when the adapted sup-norm update is at most
    ``tol (1 - q_hat)/q_hat`` with ``q_hat`` the last measured update ratio
    (at least ``1e-3``).  Raises :class:`NotContractive` when
    ``q = c(4D + 1) >= 1`` and :class:`Diverged` when updates grow for five
    consecutive iterations.
    """
    trunc = trunc or TruncationPolicy()
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "discrete")
    if not consts.contractive:
        raise NotContractive(
            f"contraction constant q = c(4D+1) = {consts.q:.6g} >= 1 "
            f"(c={sys.c:g}, D={k.D:g})")
    y = check_trajectory(getattr(y, "y", y), sys.horizon + 1, sys.dim, "pseudo-orbit")
    delta, _ = weighted_defect(y, sys)
    N = sys.horizon

    work_sys, work_y, N_end = sys, y, N
    tails = tail_bounds(sys, delta)
    if trunc.kind == "extended" and tails.max() > trunc.tol_for(delta) and delta > 0:
        work_sys, work_y = _extend(sys, y, delta, trunc)
        N_end = work_sys.horizon
        tails = tail_bounds(work_sys, delta)[:N + 1]
    elif trunc.kind == "strict" and tails.max() > trunc.tol_for(delta):
        raise TailBoundTooLarge(
            f"unstable tail bound {tails.max():.3g} exceeds tolerance "
            f"{trunc.tol_for(delta):.3g}; use the extended policy or a longer window")

    norm = AdaptedNorm(work_sys.chain, k)
    approx = [False]

    def sup(Z):
        v = norm.sup(Z)
        approx[0] = approx[0] or v.approximate
        return v.value

    def op(Z):
        return apply_T(Z, work_y, work_sys)

    z0 = np.zeros_like(work_y)
    T0 = op(z0)
    T0_norm = sup(T0)
    notes = []
    if delta == 0.0 and T0_norm == 0.0:
        z, iters, updates, ratios = z0, 0, [], []
    else:
        z, iters, updates, ratios = _fixed_point(op, sup, z0, consts.q, tol, max_iter,
                                                 linear=(sys.c == 0.0))
        if sys.c == 0.0:
            idem = sup(op(z) - z)
            notes.append(f"linear case: one application, idempotence defect {idem:.3g}")
    fp_residual = sup(op(z) - z)
    measured = max(ratios) if ratios else 0.0

    z = z[:N + 1]
    P3 = sys.chain.P[2]
    z_bar = z - np.einsum("nij,nj->ni", P3, z)
    tail = float(tails.max()) if tails.size else 0.0
    return ShadowResult(
        nodes=np.arange(N + 1, dtype=float), y=y, z=z, z_bar=z_bar, x=y + z_bar,
        q=consts.q, D_bar=consts.D_bar, C=consts.C, delta=delta, iterations=iters,
        fp_residual=fp_residual, T0_norm=T0_norm, measured_q=measured,
        tail_bound=tail, truncation_flag=bool(approx[0] or tail > trunc.tol_for(delta)),
        iteration_bound=_iteration_bound(tol, consts.C, delta, consts.q),
        update_norms=updates, tol=tol, mode="discrete", policy=trunc.kind,
        horizon_used=float(N_end), notes=notes)


def _extend(sys, y, delta, trunc):
    """Lengthen the window until the tail bound at the old end meets the tolerance."""
    k = sys.constants
    N = sys.horizon
    consts = theoretical_constants(sys.c, k.D, k.lam, "discrete")
    target = trunc.tol_for(delta)
    scale = k.D * delta * (1 + sys.c * consts.C)
    if scale <= target:
        return sys, y
    # (mu_N / mu_N')^lam <= target/scale
    need = math.log(scale / target) / k.lam
    N2 = N + 1
    while True:
        if N2 - N > trunc.max_extension:
            raise TailBoundTooLarge(
                f"tail bound cannot reach {target:.3g} within {trunc.max_extension} extra steps")
        try:
            big = sys.extended(N2)
        except ValueError as exc:
            raise TailBoundTooLarge(f"extended policy needs the system beyond N: {exc}") from None
        if big.rates.log_mu[N2] - big.rates.log_mu[N] >= need:
            break
        N2 = N + 2 * (N2 - N)
    # continue the pseudo-orbit as an exact orbit beyond N
    y2 = np.zeros((N2 + 1, sys.dim))
    y2[:N + 1] = y
    for m in range(N, N2):
        y2[m + 1] = big.cocycle.A[m] @ y2[m] + big.f(m, y2[m])
    if not np.all(np.isfinite(y2)):
        raise TailBoundTooLarge("exact continuation of the pseudo-orbit overflowed")
    return big, y2


def residuals(x, sys: DiscreteSystem) -> np.ndarray:
    """``r_n = x_{n+1} - A_n x_n - f_n(x_n)`` for ``n < N``."""
    x = check_trajectory(x, sys.horizon + 1, sys.dim, "x")
    return x[1:] - sys.step(x[:-1])


def verify_shadow(r: ShadowResult, sys: DiscreteSystem) -> Certificate:
    """Check the conclusions for a computed shadow on the window.

    (a) ``P3_n (x_n - y_n) = 0``; (b) ``|x_n - y_n| <= C delta``;
    (c) the residual lies in ``Im P3_{n+1}``; (d) ``|r_n| <= C delta (2D+1) nu_n^d``.
    Also recorded: ``||T 0|| <= D_bar delta`` and the fixed-point residual.
    """
    k = sys.constants
    N = sys.horizon
    chain = sys.chain
    P1, P2, P3 = chain.P
    cert = Certificate(checked_window=(0, N))
    where = list(range(N + 1))
    diff = r.x - r.y
    cert.add("center agreement", sys.norm.vecs(np.einsum("nij,nj->ni", P3, diff)),
             CENTER_TOL, where=where, abs_floor=0.0)
    cert.add("distance bound", sys.norm.vecs(diff), r.C * r.delta, where=where)
    res = residuals(r.x, sys)
    rn = sys.norm.vecs(res)
    off = sys.norm.vecs(np.einsum("nij,nj->ni", P1[1:] + P2[1:], res))
    steps = list(range(N))
    cert.add("residual in center fiber", off, FIBER_RTOL * (1 + rn), where=steps,
             abs_floor=0.0)
    bound = r.C * r.delta * (2 * k.D + 1) * sys.rates.nu[:N] ** k.d
    cert.add("residual bound", rn, bound, where=steps)
    cert.add("T0 bound", r.T0_norm, r.D_bar * r.delta + r.tail_bound)
    cert.add("fixed point", r.fp_residual,
             max(r.tol, 64 * np.finfo(float).eps * (1 + float(np.abs(r.z).max(initial=0)))))
    off_n = sys.norm.vecs(np.einsum("nij,nj->ni", P1[:-1] + P2[:-1], res))
    cert.notes.append(
        f"residual component outside Im P3 at the step's own index n: max {off_n.max(initial=0):.3g}")
    if r.truncation_flag:
        cert.approximate = True
        cert.notes.append(f"unstable sum truncated at the window end; tail bound {r.tail_bound:.3g}")
    cert.notes.append(f"checked on the finite window [0, {N}] only")
    return cert


def measure_contraction(y, sys: DiscreteSystem, pairs: int = 100, radius: float | None = None,
                        seed=0) -> dict:
    """Largest observed ``||T z1 - T z2|| / ||z1 - z2||`` over random pairs in the ball."""
    rng = check_random_state(seed)
    y = check_trajectory(getattr(y, "y", y), sys.horizon + 1, sys.dim, "pseudo-orbit")
    k = sys.constants
    consts = theoretical_constants(sys.c, k.D, k.lam, "discrete")
    delta = weighted_defect(y, sys)[0]
    norm = AdaptedNorm(sys.chain, k)
    R = radius if radius is not None else max(consts.C * delta, 1e-3)
    ratios = []
    approx = False
    for _ in range(pairs):
        Z = []
        for _ in range(2):
            W = rng.normal(size=y.shape)
            W *= rng.uniform(0, 1) * R / norm.sup(W).value
            Z.append(W)
        num = norm.sup(apply_T(Z[0], y, sys) - apply_T(Z[1], y, sys))
        den = norm.sup(Z[0] - Z[1])
        approx = approx or num.approximate or den.approximate
        if den.value > 0:
            ratios.append(num.value / den.value)
    return {"max_ratio": float(max(ratios)), "ratios": np.array(ratios), "q": consts.q,
            "approximate": approx}
