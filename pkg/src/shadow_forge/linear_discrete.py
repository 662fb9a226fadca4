"""Discrete linear cocycles, projection fields and dichotomy certification."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._validation import check_matrix_stack
from ._chain import NodeChain
from .certificate import Certificate, Check, holds, safe_ratio
from .exceptions import (IndexOutOfRange, NoFiniteD, ProjectionAlgebraError,
                         ShapeMismatch, SingularUnstableBlock)
from .norms import EuclideanNorm
from .rates import RateSequence

PROJ_TOL = 1e-10
EQUIV_TOL = 1e-8
SINGULAR_RTOL = 1e-12


class DiscreteCocycle:
    """Step matrices ``A_0, ..., A_{N-1}`` of ``x_{n+1} = A_n x_n``.

    ``generator`` (``n -> A_n``), when given, lets the horizon be extended
    beyond ``N``.
    """

    def __init__(self, matrices, generator: Callable | None = None):
        self.A = check_matrix_stack(matrices, name="A")
        self.A.flags.writeable = False
        self.generator = generator

    @classmethod
    def from_generator(cls, generator: Callable, horizon: int) -> "DiscreteCocycle":
        mats = np.array([np.atleast_2d(np.asarray(generator(n), dtype=float))
                         for n in range(int(horizon))])
        return cls(mats, generator=generator)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    @property
    def horizon(self) -> int:
        return self.A.shape[0]

    def extended(self, horizon: int) -> "DiscreteCocycle":
        if horizon <= self.horizon:
            return self
        if self.generator is None:
            raise IndexOutOfRange("cocycle has no generator to extend beyond its horizon")
        return DiscreteCocycle.from_generator(self.generator, horizon)

    def truncated(self, horizon: int) -> "DiscreteCocycle":
        return DiscreteCocycle(self.A[:horizon], generator=self.generator)

    def __repr__(self):
        return f"DiscreteCocycle(dim={self.dim}, horizon={self.horizon})"


class ProjectionField:
    """Projections ``P1_n, P2_n, P3_n`` (stable, unstable, center) on ``[0, N]``."""

    def __init__(self, P1, P2, P3=None, validate: bool = True):
        P1 = check_matrix_stack(P1, name="P1")
        P2 = check_matrix_stack(P2, name="P2")
        if P1.shape != P2.shape:
            raise ShapeMismatch("P1 and P2 must have the same shape")
        if P3 is None:
            P3 = np.eye(P1.shape[1])[None] - P1 - P2
        P3 = check_matrix_stack(P3, name="P3")
        if P3.shape != P1.shape:
            raise ShapeMismatch("P3 must match P1 and P2")
        self.P = np.stack([P1, P2, P3])      # (3, N+1, dim, dim)
        self.P.flags.writeable = False
        if validate:
            err = projection_algebra_error(self)
            if err > PROJ_TOL:
                raise ProjectionAlgebraError(
                    f"projection algebra violated by {err:.3g} (tolerance {PROJ_TOL})")

    @classmethod
    def constant(cls, P1, P2, P3=None, length: int = 1, validate: bool = True):
        tile = lambda P: None if P is None else np.repeat(np.atleast_2d(P)[None], length, axis=0)
        return cls(tile(P1), tile(P2), tile(P3), validate=validate)

    @classmethod
    def coordinate(cls, dim: int, stable, unstable, length: int):
        """Coordinate projections onto the listed axes; the rest is center."""
        def diag(idx):
            v = np.zeros(dim)
            v[list(idx)] = 1.0
            return np.diag(v)
        return cls.constant(diag(stable), diag(unstable), None, length)

    @property
    def P1(self):
        return self.P[0]

    @property
    def P2(self):
        return self.P[1]

    @property
    def P3(self):
        return self.P[2]

    def __len__(self):
        return self.P.shape[1]

    @property
    def dim(self):
        return self.P.shape[2]

    def rank(self, i: int, n: int = 0) -> int:
        return int(round(float(np.trace(self.P[i - 1, n]))))

    def truncated(self, length: int) -> "ProjectionField":
        return ProjectionField(self.P1[:length], self.P2[:length], self.P3[:length],
                               validate=False)


def projection_algebra_error(p: ProjectionField) -> float:
    """Largest operator-norm defect of ``sum P = I``, ``P^2 = P``, ``Pi Pj = 0``."""
    I = np.eye(p.dim)
    opn = lambda M: np.linalg.norm(M, ord=2, axis=(-2, -1))
    errs = [opn(p.P1 + p.P2 + p.P3 - I)]
    for i in range(3):
        Pi = p.P[i]
        errs.append(opn(Pi @ Pi - Pi))
        for j in range(3):
            if i != j:
                errs.append(opn(Pi @ p.P[j]))
    return float(max(e.max() for e in errs))


def _check_pair(c: DiscreteCocycle, p: ProjectionField):
    if c.dim != p.dim:
        raise ShapeMismatch(f"cocycle dim {c.dim} != projection dim {p.dim}")
    if len(p) < c.horizon + 1:
        raise ShapeMismatch(f"projection field needs {c.horizon + 1} entries, has {len(p)}")


def propagate(c: DiscreteCocycle, m: int, n: int) -> np.ndarray:
    """``A(m, n) = A_{m-1} ... A_n`` for ``m > n`` and the identity for ``m = n``."""
    if not (0 <= n <= m <= c.horizon):
        raise IndexOutOfRange(f"need 0 <= n <= m <= {c.horizon}, got m={m}, n={n}")
    M = np.eye(c.dim)
    for k in range(n, m):
        M = c.A[k] @ M
    return M


def _restricted_pinv(K, P_dom, P_cod, rank):
    """``P_dom pinv(K) P_cod`` with a singularity check on the top ``rank`` values."""
    if rank == 0:
        return np.zeros_like(K)
    U, s, Vt = np.linalg.svd(K)
    if not (np.isfinite(s[0]) and s[rank - 1] > SINGULAR_RTOL * s[0]):
        ratio = s[rank - 1] / s[0] if s[0] > 0 else 0.0
        raise SingularUnstableBlock(f"unstable block singular: sigma_min/sigma_max = {ratio:.3g}")
    inv = (Vt[:rank].T / s[:rank]) @ U[:, :rank].T
    return P_dom @ inv @ P_cod


def unstable_pullback(c: DiscreteCocycle, p: ProjectionField, m: int, n: int) -> np.ndarray:
    """Inverse of ``A(n, m)`` restricted to ``Im P2_m``, as an operator on ``X``.

    For ``m <= n`` returns ``M`` with ``A(n, m) M P2_n = P2_n`` and
    ``M = M P2_n`` (zero on ``Im(P1_n + P3_n)``).
    """
    _check_pair(c, p)
    if not (0 <= m <= n <= c.horizon):
        raise IndexOutOfRange(f"need 0 <= m <= n <= {c.horizon}, got m={m}, n={n}")
    if m == n:
        return np.array(p.P2[n])
    K = p.P2[n] @ propagate(c, n, m) @ p.P2[m]
    return _restricted_pinv(K, p.P2[m], p.P2[n], p.rank(2, m))


def unstable_steps(c: DiscreteCocycle, p: ProjectionField) -> np.ndarray:
    """One-step pullbacks ``B_k = A(k, k+1)`` on the unstable fibers, ``k < N``."""
    _check_pair(c, p)
    out = np.empty_like(c.A)
    for k in range(c.horizon):
        K = p.P2[k + 1] @ c.A[k] @ p.P2[k]
        out[k] = _restricted_pinv(K, p.P2[k], p.P2[k + 1], p.rank(2, k))
    return out


def check_projections(p: ProjectionField, tol: float = PROJ_TOL) -> Certificate:
    cert = Certificate((0, len(p) - 1))
    I = np.eye(p.dim)
    opn = lambda M: np.linalg.norm(M, ord=2, axis=(-2, -1))
    idx = list(range(len(p)))
    cert.add("P1+P2+P3=I", opn(p.P1 + p.P2 + p.P3 - I), tol, where=idx,
             rel_tol=0.0, abs_floor=0.0)
    for i in range(3):
        cert.add(f"P{i + 1}^2=P{i + 1}", opn(p.P[i] @ p.P[i] - p.P[i]), tol,
                 where=idx, rel_tol=0.0, abs_floor=0.0)
        for j in range(3):
            if i != j:
                cert.add(f"P{i + 1}P{j + 1}=0", opn(p.P[i] @ p.P[j]), tol,
                         where=idx, rel_tol=0.0, abs_floor=0.0)
    return cert


def check_equivariance(c: DiscreteCocycle, p: ProjectionField,
                       tol: float = EQUIV_TOL) -> Certificate:
    """``A_n Pi_n = Pi_{n+1} A_n`` for every ``n < N`` and ``i = 1, 2, 3``."""
    _check_pair(c, p)
    N = c.horizon
    cert = Certificate((0, N))
    opn = lambda M: np.linalg.norm(M, ord=2, axis=(-2, -1))
    scale = tol * np.maximum(1.0, opn(c.A))
    for i in range(3):
        lhs = opn(c.A @ p.P[i, :N] - p.P[i, 1:N + 1] @ c.A)
        cert.add(f"equivariance P{i + 1}", lhs, scale, where=list(range(N)),
                 rel_tol=0.0, abs_floor=0.0)
    return cert


def check_unstable_invertible(c: DiscreteCocycle, p: ProjectionField) -> Certificate:
    cert = Certificate((0, c.horizon))
    try:
        B = unstable_steps(c, p)
    except SingularUnstableBlock as exc:
        cert.add_check(Check("unstable block invertible", np.inf, False, None, str(exc)))
        return cert
    err = np.linalg.norm(c.A @ B @ p.P2[1:c.horizon + 1] - p.P2[1:c.horizon + 1],
                         ord=2, axis=(-2, -1))
    scale = 1e-8 * np.maximum(1.0, np.linalg.norm(c.A, ord=2, axis=(-2, -1)) *
                              np.linalg.norm(B, ord=2, axis=(-2, -1)))
    cert.add("unstable block invertible", err, scale, where=list(range(c.horizon)),
             rel_tol=0.0, abs_floor=0.0)
    return cert


@dataclass(frozen=True)
class DichotomyConstants:
    D: float
    lam: float
    d: float = 0.0

    def __post_init__(self):
        if not self.D > 0:
            raise ValueError(f"D must be > 0, got {self.D}")
        if not self.lam > 0:
            raise ValueError(f"lambda must be > 0, got {self.lam}")
        if not self.d >= 0:
            raise ValueError(f"d must be >= 0, got {self.d}")

    def to_dict(self):
        return {"D": self.D, "lambda": self.lam, "d": self.d}


def build_chain(c: DiscreteCocycle, p: ProjectionField, rates: RateSequence,
                lam: float | None = None, norm=None) -> NodeChain:
    """Node-chain view of ``(c, p, rates)`` on ``[0, N]``.

    Center weights need ``lam``; without it they are set to one.
    """
    N = c.horizon
    if len(rates) < N + 2 and lam is not None:
        rates = rates.extended(N + 1)
    if len(rates) < N + 1:
        raise ShapeMismatch(f"rates cover {len(rates)} indices, need {N + 1}")
    cw = rates.center_weights(lam)[:N + 1] if lam is not None else np.ones(N + 1)
    return NodeChain(nodes=np.arange(N + 1, dtype=float), Phi=c.A[:N],
                     Psi=unstable_steps(c, p), P=p.P[:, :N + 1],
                     log_mu=rates.log_mu[:N + 1], nu=rates.nu[:N + 1],
                     center_w=cw, norm=norm or EuclideanNorm())


def _pair_tables(c, p, rates, lam, d, norm):
    """Operator norms and rate bounds (with D = 1) for every index pair.

    Returns ``(stable_lhs, stable_rhs, unstable_lhs, unstable_rhs)`` as
    ``(N+1, N+1)`` arrays indexed ``[m, n]``, NaN outside the relevant triangle.
    """
    return build_chain(c, p, rates, norm=norm).pair_tables(lam, d)


def tables_certificate(cert: Certificate, tables, k: "DichotomyConstants", nodes=None):
    """Add the stable and unstable estimates from pair tables to ``cert``."""
    s_lhs, s_rhs, u_lhs, u_rhs = tables
    for name, lhs, rhs in (("stable estimate", s_lhs, s_rhs),
                           ("unstable estimate", u_lhs, u_rhs)):
        mask = ~np.isnan(rhs)
        pairs = np.argwhere(mask)
        if nodes is None:
            where = [tuple(int(v) for v in w) for w in pairs]
        else:
            where = [(float(nodes[a]), float(nodes[b])) for a, b in pairs]
        cert.add(name, lhs[mask], k.D * rhs[mask], where=where)
    return cert


def fit_D_from_tables(tables) -> float:
    """Smallest admissible ``D`` from pair tables, or :class:`NoFiniteD`."""
    s_lhs, s_rhs, u_lhs, u_rhs = tables
    ratios = np.fmax(safe_ratio(np.nan_to_num(s_lhs), np.nan_to_num(s_rhs, nan=1.0)),
                     safe_ratio(np.nan_to_num(u_lhs), np.nan_to_num(u_rhs, nan=1.0)))
    if not np.all(np.isfinite(ratios)):
        raise NoFiniteD("dichotomy ratio is not finite on the window")
    K = ratios.shape[0]
    by_sep = np.array([max(np.diagonal(ratios, -k).max(), np.diagonal(ratios, k).max())
                       for k in range(K)])
    if K >= 5:
        half = by_sep[: K // 2].max()
        tail = by_sep[-max(2, K // 4):]
        if np.all(np.diff(tail) > 0) and by_sep[-1] > 10.0 * half:
            raise NoFiniteD(
                f"required D grows with separation ({half:.3g} -> {by_sep[-1]:.3g} "
                f"across a window of {K} nodes)")
    return float(ratios.max())


def structural_certificate(c: DiscreteCocycle, p: ProjectionField) -> Certificate:
    cert = check_projections(p)
    cert.extend(check_equivariance(c, p))
    cert.extend(check_unstable_invertible(c, p))
    cert.checked_window = (0, c.horizon)
    return cert


def certify_dichotomy(c: DiscreteCocycle, p: ProjectionField, rates: RateSequence,
                      k: DichotomyConstants, norm=None) -> Certificate:
    """Check both dichotomy estimates on every index pair of ``[0, N]``.

    Stable: ``||A(m,n) P1_n|| <= D (mu_m/mu_n)^-lam nu_n^d`` for ``m >= n``.
    Unstable: ``||A(m,n) P2_n|| <= D (mu_n/mu_m)^-lam nu_n^d`` for ``m <= n``,
    with ``A(m,n)`` the unstable pullback.  Structural checks are included.
    """
    _check_pair(c, p)
    norm = norm or EuclideanNorm()
    cert = structural_certificate(c, p)
    if not cert.overall:
        cert.notes.append("structural checks failed; dichotomy estimates not evaluated")
        return cert
    tables_certificate(cert, _pair_tables(c, p, rates, k.lam, k.d, norm), k)
    cert.notes.append(f"certified on the finite window [0, {c.horizon}] only")
    return cert


def fit_min_D(c: DiscreteCocycle, p: ProjectionField, rates: RateSequence,
              lam: float, d: float, norm=None) -> float:
    """Smallest ``D`` for which both estimates hold on the window.

    Raises :class:`NoFiniteD` when the required ``D`` keeps growing with
    the pair separation, which signals that no finite constant works.
    """
    _check_pair(c, p)
    norm = norm or EuclideanNorm()
    return fit_D_from_tables(_pair_tables(c, p, rates, lam, d, norm))


def dichotomy_holds(lhs, rhs) -> bool:
    return bool(np.all(holds(lhs, rhs)))
