"""Dense complex factorization kernels.

Everything downstream (rank analysis, deflation, eigenvector recovery) is
built on the routines here: column-pivoted rank-revealing QR with pluggable
truncation strategies, complete orthogonal (URV) decomposition, SVD, joint
triangular/Hessenberg reduction of a matrix pair, and O(n^2) shifted
Hessenberg solves.

Matrices are plain ``numpy.ndarray``s promoted to complex128; inputs with
NaN/Inf entries are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import SingularShiftError

EPS = float(np.finfo(np.float64).eps)


def as_matrix(m) -> np.ndarray:
    """Validate and promote an array to a complex128 2-d matrix."""
    a = np.asarray(m)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got ndim={a.ndim}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix contains NaN/Inf entries")
    return a.astype(np.complex128, copy=False)


def as_vector(v) -> np.ndarray:
    a = np.asarray(v).ravel()
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("vector contains NaN/Inf entries")
    return a.astype(np.complex128, copy=False)


def unit(v):
    """Return v normalized to unit 2-norm (zero vector is returned as-is)."""
    nrm = np.linalg.norm(v)
    return v / nrm if nrm > 0 else v


# ---------------------------------------------------------------------------
# truncation strategies for numerical rank decisions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NormThreshold:
    """Keep diagonal entries with |r_kk| > tau * ||m||_F.

    ``tau=None`` resolves to max(shape)*eps at decision time.
    """

    tau: float | None = None
    name = "norm"

    def decide(self, diag_abs, fro, shape):
        tau = self.tau if self.tau is not None else max(max(shape), 1) * EPS
        thr = tau * fro
        rank = int(np.sum(diag_abs > thr))
        log = {
            "strategy": "norm",
            "tau": tau,
            "threshold": thr,
            "diag": [float(d) for d in diag_abs],
            "rank": rank,
        }
        return rank, log


@dataclass(frozen=True)
class DropOff:
    """Truncate at the first drop |r_{i+1,i+1}| <= rho * |r_ii| on the diagonal."""

    rho: float = float(np.sqrt(EPS))
    name = "dropoff"

    def decide(self, diag_abs, fro, shape):
        k = len(diag_abs)
        rank = k
        if k == 0 or diag_abs[0] == 0.0:
            rank = 0
        else:
            for i in range(k):
                if diag_abs[i] == 0.0:
                    rank = i
                    break
                if i + 1 < k and diag_abs[i + 1] <= self.rho * diag_abs[i]:
                    rank = i + 1
                    break
        ratios = [
            float(diag_abs[i + 1] / diag_abs[i]) if diag_abs[i] > 0 else 0.0
            for i in range(k - 1)
        ]
        log = {
            "strategy": "dropoff",
            "rho": self.rho,
            "diag": [float(d) for d in diag_abs],
            "ratios": ratios,
            "rank": rank,
        }
        return rank, log


def make_strategy(name, value=None):
    """Build a truncation strategy from CLI-style arguments."""
    if name == "norm":
        return NormThreshold(tau=value)
    if name == "dropoff":
        return DropOff(rho=value) if value is not None else DropOff()
    raise ValueError(f"unknown rank strategy {name!r}")


# ---------------------------------------------------------------------------
# rank revealing QR
# ---------------------------------------------------------------------------


@dataclass
class PivotedQR:
    """Column-pivoted QR with a numerical-rank decision.

    ``q`` and ``r`` are the full untruncated factors (m @ perm_matrix = q @ r);
    ``rank`` and ``truncation_log`` record how the diagonal was cut.
    """

    q: np.ndarray
    r: np.ndarray
    perm: np.ndarray
    rank: int
    truncation_log: dict = field(default_factory=dict)

    @property
    def rows(self):
        return self.q.shape[0]

    @property
    def cols(self):
        return self.r.shape[1]

    @property
    def q1(self):
        return self.q[:, : self.rank]

    @property
    def q2(self):
        return self.q[:, self.rank :]

    @property
    def r_hat(self):
        return self.r[: self.rank, :]

    @property
    def inv_perm(self):
        inv = np.empty(self.cols, dtype=np.intp)
        inv[self.perm] = np.arange(self.cols)
        return inv

    def perm_matrix(self):
        return np.eye(self.cols)[:, self.perm]

    def r_hat_unpermuted(self, pad=False):
        """R_hat @ perm^T (columns back in original order).

        With ``pad=True`` the rows below the numerical rank are appended as
        exact zeros, which is the truncated representation used in deflation.
        """
        out = self.r_hat[:, self.inv_perm]
        if pad:
            z = np.zeros((self.rows - self.rank, self.cols), dtype=np.complex128)
            out = np.vstack([out, z])
        return out

    def reconstruct(self):
        return self.q @ self.r[:, self.inv_perm]


def rrqr(m, strategy=None) -> PivotedQR:
    """Rank-revealing QR with Businger-Golub column pivoting."""
    a = as_matrix(m)
    rows, cols = a.shape
    strategy = strategy or NormThreshold()
    if rows == 0 or cols == 0:
        rank, log = strategy.decide(np.zeros(0), 0.0, a.shape)
        return PivotedQR(
            q=np.eye(rows, dtype=np.complex128),
            r=np.zeros((rows, cols), dtype=np.complex128),
            perm=np.arange(cols, dtype=np.intp),
            rank=0,
            truncation_log=log,
        )
    q, r, perm = sla.qr(a, pivoting=True)
    diag_abs = np.abs(np.diag(r))
    rank, log = strategy.decide(diag_abs, float(np.linalg.norm(a)), a.shape)
    return PivotedQR(q=q, r=r, perm=perm.astype(np.intp), rank=rank, truncation_log=log)


# ---------------------------------------------------------------------------
# complete orthogonal (URV) decomposition
# ---------------------------------------------------------------------------


@dataclass
class URVFactors:
    """Complete orthogonal decomposition m = u @ [[0, r],[0, 0]] @ v*.

    The nonsingular triangular core sits in the *trailing* columns, so that
    applying ``v`` to a row-rank-deficient block yields the column-compressed
    form (0 | B) consumed by the deflation steps.
    """

    u: np.ndarray
    r: np.ndarray
    v: np.ndarray
    rank: int

    def core_embedded(self, rows, cols):
        out = np.zeros((rows, cols), dtype=np.complex128)
        if self.rank:
            out[: self.rank, cols - self.rank :] = self.r
        return out

    def reconstruct(self):
        rows = self.u.shape[0]
        cols = self.v.shape[0]
        return self.u @ self.core_embedded(rows, cols) @ self.v.conj().T


def urv(m, strategy=None) -> URVFactors:
    """Two-sided orthogonal reduction exposing row rank."""
    a = as_matrix(m)
    rows, cols = a.shape
    f = rrqr(a, strategy)
    rho = f.rank
    if rho == 0:
        return URVFactors(
            u=np.eye(rows, dtype=np.complex128),
            r=np.zeros((0, 0), dtype=np.complex128),
            v=np.eye(cols, dtype=np.complex128),
            rank=0,
        )
    # m = Q [Rhat; 0] P^T ; factor (Rhat P^T)* = Z [R2; 0] and flip the
    # column blocks of Z so the core lands in the trailing columns.
    w = f.r_hat[:, f.inv_perm].conj().T  # cols x rho
    z, r2 = sla.qr(w)
    order = np.concatenate([np.arange(rho, cols), np.arange(rho)])
    v = z[:, order]
    return URVFactors(u=f.q, r=r2[:rho, :].conj().T, v=v, rank=rho)


# ---------------------------------------------------------------------------
# SVD
# ---------------------------------------------------------------------------


@dataclass
class SVDFactors:
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def reconstruct(self):
        rows = self.u.shape[0]
        cols = self.v.shape[0]
        s = np.zeros((rows, cols), dtype=np.complex128)
        k = len(self.sigma)
        s[:k, :k] = np.diag(self.sigma)
        return self.u @ s @ self.v.conj().T


def svd(m) -> SVDFactors:
    """Full SVD m = u @ diag(sigma) @ v* with unitary u, v."""
    a = as_matrix(m)
    if a.size == 0:
        return SVDFactors(
            u=np.eye(a.shape[0], dtype=np.complex128),
            sigma=np.zeros(0),
            v=np.eye(a.shape[1], dtype=np.complex128),
        )
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    return SVDFactors(u=u, sigma=s, v=vh.conj().T)


# ---------------------------------------------------------------------------
# joint triangular / Hessenberg reduction and shifted solves
# ---------------------------------------------------------------------------


@dataclass
class TriHessPair:
    """Two-sided unitary reduction a = q t z*, b = q h z*.

    ``t`` is upper triangular and ``h`` upper Hessenberg, so lambda*t + h is
    Hessenberg and (lambda*a + b)^-1 v costs O(n^2) per shift.
    """

    q: np.ndarray
    t: np.ndarray
    h: np.ndarray
    z: np.ndarray
    qh: np.ndarray = None  # adjoint of q, cached for the per-shift solves

    def __post_init__(self):
        if self.qh is None:
            self.qh = self.q.conj().T.copy()

    @property
    def n(self):
        return self.t.shape[0]


def _left_givens(f, g):
    """2x2 unitary G with G @ [f, g]^T = [r, 0]^T."""
    rho = np.hypot(abs(f), abs(g))
    if rho == 0.0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[np.conj(f), np.conj(g)], [-g, f]], dtype=np.complex128) / rho


def _right_givens(f, g):
    """2x2 unitary M with [f, g] @ M = [0, r]."""
    rho = np.hypot(abs(f), abs(g))
    if rho == 0.0:
        return np.eye(2, dtype=np.complex128)
    return np.array([[-g, np.conj(f)], [f, np.conj(g)]], dtype=np.complex128) / rho


def tri_hess_reduce(a, b) -> TriHessPair:
    """Reduce a pair to (upper triangular, upper Hessenberg) form.

    Moler-Stewart style: QR of ``a`` first, then bottom-up Givens sweeps that
    chase ``b`` to Hessenberg form while restoring the triangle of ``a``.
    """
    t = as_matrix(a).copy()
    h = as_matrix(b).copy()
    if t.shape != h.shape or t.shape[0] != t.shape[1]:
        raise ValueError(f"expected equal square matrices, got {t.shape} and {h.shape}")
    n = t.shape[0]
    if n <= 1:
        eye = np.eye(n, dtype=np.complex128)
        return TriHessPair(q=eye, t=t, h=h, z=eye.copy())
    q, t = sla.qr(t)
    h = q.conj().T @ h
    z = np.eye(n, dtype=np.complex128)
    for j in range(n - 2):
        for i in range(n - 1, j + 1, -1):
            g = _left_givens(h[i - 1, j], h[i, j])
            h[[i - 1, i], j:] = g @ h[[i - 1, i], j:]
            h[i, j] = 0.0
            t[[i - 1, i], i - 1 :] = g @ t[[i - 1, i], i - 1 :]
            q[:, [i - 1, i]] = q[:, [i - 1, i]] @ g.conj().T
            g2 = _right_givens(t[i, i - 1], t[i, i])
            t[: i + 1, [i - 1, i]] = t[: i + 1, [i - 1, i]] @ g2
            t[i, i - 1] = 0.0
            h[:, [i - 1, i]] = h[:, [i - 1, i]] @ g2
            z[:, [i - 1, i]] = z[:, [i - 1, i]] @ g2
    return TriHessPair(q=q, t=np.triu(t), h=h, z=z)


def hessenberg_solve(m, rhs, count_ops=False):
    """Solve an upper-Hessenberg system by one-subdiagonal elimination.

    ``rhs`` may hold several right-hand sides as columns (the elimination is
    shared). Returns the solution, or ``(solution, ops)`` with a per-column
    multiply-add count when ``count_ops`` is set. Raises
    :class:`SingularShiftError` when the eliminated diagonal indicates
    (near-)singularity.
    """
    u = as_matrix(m).copy()
    rhs = np.asarray(rhs)
    single = rhs.ndim == 1
    b = rhs.reshape(-1, 1).astype(np.complex128) if single else rhs.astype(np.complex128)
    b = b.copy()
    n = u.shape[0]
    if u.shape[1] != n or b.shape[0] != n:
        raise ValueError("hessenberg_solve expects a square system")
    ops = 0
    for k in range(n - 1):
        if abs(u[k + 1, k]) > abs(u[k, k]):
            u[[k, k + 1], k:] = u[[k + 1, k], k:]
            b[[k, k + 1]] = b[[k + 1, k]]
        if u[k, k] == 0.0:
            raise SingularShiftError("exactly singular shifted system", np.inf)
        f = u[k + 1, k] / u[k, k]
        u[k + 1, k:] -= f * u[k, k:]
        u[k + 1, k] = 0.0
        b[k + 1] -= f * b[k]
        ops += 2 * (n - k) + 2
    d = np.abs(np.diag(u))
    if n:
        dmin, dmax = d.min(), d.max()
        cond_est = np.inf if dmin == 0.0 else dmax / dmin
        if cond_est >= 1.0 / EPS:
            raise SingularShiftError(
                f"shifted system condition estimate {cond_est:.3e} exceeds 1/eps",
                cond_est,
            )
        x = sla.solve_triangular(u, b)
    else:
        x = b
    ops += n * (n + 1)  # back substitution
    x = x[:, 0] if single else x
    if count_ops:
        return x, ops
    return x


def shifted_hess_solve(pair: TriHessPair, lam, v, count_ops=False):
    """Evaluate (lambda*a + b)^-1 v through the reduced pair.

    ``v`` may hold several columns. Cost per shift is O(n^2): two dense
    mat-vecs with the unitary factors and one Hessenberg elimination.
    """
    v = np.asarray(v)
    w = pair.qh @ (v.astype(np.complex128, copy=False))
    m = lam * pair.t + pair.h
    if count_ops:
        y, ops = hessenberg_solve(m, w, count_ops=True)
        return pair.z @ y, ops
    return pair.z @ hessenberg_solve(m, w)


def hessenberg_solve_many(t, h, lams, rhs, chunk=48):
    """Solve (lam_j t + h) x_j = rhs_j for a batch of shifts.

    Same elimination as :func:`hessenberg_solve` but vectorized across the
    shift index in chunks, which keeps the per-shift cost quadratic while
    amortizing the interpreter overhead of the row sweeps. ``rhs`` has shape
    (j, n, r). Returns ``(x, ok)`` where ``ok[j]`` is False for shifts whose
    eliminated diagonal fails the 1/eps condition estimate (those columns of
    ``x`` are not meaningful).
    """
    t = np.asarray(t)
    h = np.asarray(h)
    lams = np.asarray(lams, dtype=np.complex128)
    rhs = np.asarray(rhs, dtype=np.complex128)
    nj, n, nr = rhs.shape
    if lams.shape[0] != nj or t.shape != (n, n) or h.shape != (n, n):
        raise ValueError("inconsistent batch shapes")
    x = np.empty_like(rhs)
    ok = np.ones(nj, dtype=bool)
    for s in range(0, nj, chunk):
        sl = slice(s, min(s + chunk, nj))
        u = lams[sl, None, None] * t[None, :, :] + h[None, :, :]
        b = rhs[sl].copy()
        okc = ok[sl]
        for k in range(n - 1):
            swap = np.abs(u[:, k + 1, k]) > np.abs(u[:, k, k])
            if swap.any():
                idx = np.nonzero(swap)[0]
                tmp = u[idx, k, k:].copy()
                u[idx, k, k:] = u[idx, k + 1, k:]
                u[idx, k + 1, k:] = tmp
                tmpb = b[idx, k, :].copy()
                b[idx, k, :] = b[idx, k + 1, :]
                b[idx, k + 1, :] = tmpb
            piv = u[:, k, k]
            bad = piv == 0.0
            if bad.any():
                okc[bad] = False
                piv = np.where(bad, 1.0, piv)
            f = u[:, k + 1, k] / piv
            u[:, k + 1, k:] -= f[:, None] * u[:, k, k:]
            u[:, k + 1, k] = 0.0
            b[:, k + 1, :] -= f[:, None] * b[:, k, :]
        diag = np.abs(np.diagonal(u, axis1=1, axis2=2))
        dmin = diag.min(axis=1)
        dmax = diag.max(axis=1)
        okc[(dmin == 0.0) | (dmax >= dmin / EPS)] = False
        xc = np.empty_like(b)
        for k in range(n - 1, -1, -1):
            if k + 1 < n:
                acc = np.einsum("ci,cir->cr", u[:, k, k + 1 :], xc[:, k + 1 :, :])
            else:
                acc = 0.0
            denom = u[:, k, k]
            denom = np.where(denom == 0.0, 1.0, denom)
            xc[:, k, :] = (b[:, k, :] - acc) / denom[:, None]
        x[sl] = xc
    return x, ok


def shifted_hess_solve_many(pair: TriHessPair, lams, vs):
    """Batched (lam_j a + b)^-1 v_j for stacked right-hand sides.

    ``vs`` has shape (j, n, r); returns ``(x, ok)`` like
    :func:`hessenberg_solve_many` with the unitary factors applied.
    """
    vs = np.asarray(vs, dtype=np.complex128)
    nj, n, nr = vs.shape
    w = np.einsum("pq,jqr->jpr", pair.qh, vs)
    y, ok = hessenberg_solve_many(pair.t, pair.h, lams, w)
    x = np.einsum("pq,jqr->jpr", pair.z, y)
    return x, ok
