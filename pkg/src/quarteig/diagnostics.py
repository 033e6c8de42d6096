"""Backward-error diagnostics for computed eigenpairs.

The norm-wise backward error of a right eigenpair (lambda, x) is the
normalized residual

    eta(lambda, x) = ||P(lambda) x|| / ((|lambda|^4 ||A|| + ... + ||E||) ||x||)

with spectral norms of the coefficients, and eta(inf, x) = ||Ax||/(||A|| ||x||).
Both are evaluated in homogeneous (alpha, beta) form so no power of lambda is
ever formed explicitly. The component-wise error omega uses row-wise
absolute-value weights instead and is defined for finite eigenvalues only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pencil import (
    EIG_FINITE,
    EIG_INFINITE,
    EIG_ZERO,
    HomogeneousEig,
    QuarticPencil,
)

_SVD_NORM_LIMIT = 512


def spectral_norm(m, tol=1e-6, max_iter=500):
    """Largest singular value; SVD up to 512, power iteration above."""
    m = np.asarray(m)
    if m.size == 0:
        return 0.0, "empty"
    if max(m.shape) <= _SVD_NORM_LIMIT:
        return float(np.linalg.norm(m, 2)), "svd"
    rng = np.random.default_rng(m.shape[0] * 7919 + m.shape[1])
    v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = m @ v
        u = m.conj().T @ w
        sig = np.linalg.norm(w)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0, "power"
        v = u / nu
        if abs(sig - prev) <= tol * max(sig, 1e-300):
            return float(sig), "power"
        prev = sig
    return float(prev), "power_unconverged"


class CoefficientNorms:
    """Cached spectral norms and entrywise magnitudes of the coefficients."""

    def __init__(self, q: QuarticPencil):
        self.q = q
        norms, methods = [], []
        for m in q.coeffs:
            s, how = spectral_norm(m)
            norms.append(s)
            methods.append(how)
        self.two = np.array(norms)  # ordered (A, B, C, D, E)
        self.method = methods
        self._abs = None

    @property
    def abs_coeffs(self):
        if self._abs is None:
            self._abs = tuple(np.abs(m) for m in self.q.coeffs)
        return self._abs


def _powers(eig: HomogeneousEig):
    """Homogeneous weights (a^4, a^3 b, a^2 b^2, a b^3, b^4)."""
    a, b = eig.alpha, eig.beta
    return np.array([a**4, a**3 * b, a**2 * b**2, a * b**3, b**4])


def residual(eig: HomogeneousEig, x, q: QuarticPencil):
    """Homogeneous residual (alpha^4 A + ... + beta^4 E) x."""
    w = _powers(eig)
    r = np.zeros(q.n, dtype=np.complex128)
    for wk, m in zip(w, q.coeffs):
        if wk != 0.0:
            r += wk * (m @ x)
    return r


def eta(eig: HomogeneousEig, x, q: QuarticPencil, norms: CoefficientNorms | None = None):
    """Norm-wise backward error of a right eigenpair."""
    x = np.asarray(x).ravel()
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise ValueError("eigenvector must be nonzero")
    norms = norms or CoefficientNorms(q)
    w = np.abs(_powers(eig))
    den = float(w @ norms.two) * nx
    num = float(np.linalg.norm(residual(eig, x, q)))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def eta_left(eig: HomogeneousEig, y, q: QuarticPencil, norms: CoefficientNorms | None = None):
    """Norm-wise backward error of a left eigenpair (y* P(lambda) = 0)."""
    y = np.asarray(y).ravel()
    ny = np.linalg.norm(y)
    if ny == 0.0:
        raise ValueError("eigenvector must be nonzero")
    norms = norms or CoefficientNorms(q)
    w = _powers(eig)
    r = np.zeros(q.n, dtype=np.complex128)
    for wk, m in zip(w, q.coeffs):
        if wk != 0.0:
            r += np.conj(wk) * (m.conj().T @ y)
    den = float(np.abs(w) @ norms.two) * ny
    num = float(np.linalg.norm(r))
    if den == 0.0:
        return 0.0 if num == 0.0 else np.inf
    return num / den


def _omega_ratio(num_vec, den_vec):
    out = 0.0
    flagged = False
    for rn, sd in zip(num_vec, den_vec):
        if sd == 0.0:
            if rn == 0.0:
                continue
            flagged = True
            out = np.inf
        else:
            out = max(out, rn / sd)
    return out, flagged


def omega(eig: HomogeneousEig, x, q: QuarticPencil, norms: CoefficientNorms | None = None):
    """Component-wise backward error of a finite right eigenpair."""
    if eig.cls == EIG_INFINITE:
        raise ValueError("omega is defined for finite eigenvalues only")
    x = np.asarray(x).ravel()
    if np.linalg.norm(x) == 0.0:
        raise ValueError("eigenvector must be nonzero")
    norms = norms or CoefficientNorms(q)
    w = np.abs(_powers(eig))
    r = np.abs(residual(eig, x, q))
    s = np.zeros(q.n)
    ax = np.abs(x)
    for wk, am in zip(w, norms.abs_coeffs):
        if wk != 0.0:
            s += wk * (am @ ax)
    val, _ = _omega_ratio(r, s)
    return val


def omega_left(eig: HomogeneousEig, y, q: QuarticPencil, norms: CoefficientNorms | None = None):
    """Component-wise backward error of a finite left eigenpair."""
    if eig.cls == EIG_INFINITE:
        raise ValueError("omega is defined for finite eigenvalues only")
    y = np.asarray(y).ravel()
    if np.linalg.norm(y) == 0.0:
        raise ValueError("eigenvector must be nonzero")
    norms = norms or CoefficientNorms(q)
    w = _powers(eig)
    r = np.zeros(q.n, dtype=np.complex128)
    for wk, m in zip(w, q.coeffs):
        if wk != 0.0:
            r += np.conj(wk) * (m.conj().T @ y)
    s = np.zeros(q.n)
    ay = np.abs(y)
    for wk, am in zip(np.abs(w), norms.abs_coeffs):
        if wk != 0.0:
            s += wk * (am.T @ ay)
    val, _ = _omega_ratio(np.abs(r), s)
    return val


def _weights(eigs):
    w = np.empty((5, len(eigs)), dtype=np.complex128)
    for j, e in enumerate(eigs):
        a, b = e.alpha, e.beta
        w[:, j] = (a**4, a**3 * b, a**2 * b**2, a * b**3, b**4)
    return w


def diagnostics_many(eigs, rights, lefts, q: QuarticPencil, norms: CoefficientNorms | None = None):
    """Per-pair diagnostics for a whole solution in a few matrix products.

    Entries of ``rights``/``lefts`` may be None (diagnostics come back None).
    Same definitions as :func:`eta`, :func:`eta_left`, :func:`omega`,
    :func:`omega_left`, evaluated batched.
    """
    norms = norms or CoefficientNorms(q)
    n = q.n
    nj = len(eigs)
    w = _weights(eigs)
    wa = np.abs(w)
    den = wa.T @ norms.two

    def batch(vectors, transpose):
        cols = [j for j, v in enumerate(vectors) if v is not None]
        if not cols:
            return cols, None, None, None
        x = np.column_stack([vectors[j] for j in cols])
        wk = w[:, cols]
        r = np.zeros((n, len(cols)), dtype=np.complex128)
        s = np.zeros((n, len(cols)))
        ax = np.abs(x)
        for k, (m, am) in enumerate(zip(q.coeffs, norms.abs_coeffs)):
            if transpose:
                r += np.conj(wk[k])[None, :] * (m.conj().T @ x)
                s += wa[k, cols][None, :] * (am.T @ ax)
            else:
                r += wk[k][None, :] * (m @ x)
                s += wa[k, cols][None, :] * (am @ ax)
        return cols, np.abs(r), s, np.linalg.norm(x, axis=0)

    def omega_cols(rabs, s):
        ratio = np.where(s > 0.0, rabs / np.where(s > 0.0, s, 1.0), np.where(rabs > 0.0, np.inf, 0.0))
        return ratio.max(axis=0)

    eta_r = [None] * nj
    eta_l = [None] * nj
    om_r = [None] * nj
    om_l = [None] * nj
    cols, rabs, s, xn = batch(rights, transpose=False)
    if cols:
        nums = np.linalg.norm(rabs, axis=0)
        for i, j in enumerate(cols):
            d = den[j] * xn[i]
            eta_r[j] = float(nums[i] / d) if d > 0.0 else (0.0 if nums[i] == 0.0 else np.inf)
        oms = omega_cols(rabs, s)
        for i, j in enumerate(cols):
            if eigs[j].cls != EIG_INFINITE:
                om_r[j] = float(oms[i])
    cols, rabs, s, yn = batch(lefts, transpose=True)
    if cols:
        nums = np.linalg.norm(rabs, axis=0)
        for i, j in enumerate(cols):
            d = den[j] * yn[i]
            eta_l[j] = float(nums[i] / d) if d > 0.0 else (0.0 if nums[i] == 0.0 else np.inf)
        oms = omega_cols(rabs, s)
        for i, j in enumerate(cols):
            if eigs[j].cls != EIG_INFINITE:
                om_l[j] = float(oms[i])
    return [
        PairDiagnostics(
            eta_right=eta_r[j],
            eta_left=eta_l[j],
            omega_right=om_r[j],
            omega_left=om_l[j],
            cls=eigs[j].cls,
            eig=eigs[j],
        )
        for j in range(nj)
    ]


@dataclass
class PairDiagnostics:
    """Per-eigenpair backward errors (None where undefined/not computed)."""

    eta_right: float | None
    eta_left: float | None
    omega_right: float | None
    omega_left: float | None
    cls: str
    eig: HomogeneousEig | None = None


@dataclass
class SummaryReport:
    counts: dict
    stats: dict
    order: list = field(default_factory=list)

    def as_dict(self):
        return {"counts": dict(self.counts), **{k: dict(v) for k, v in self.stats.items()}}


def _stat(values):
    vals = [v for v in values if v is not None and np.isfinite(v)]
    if not vals:
        return {"min": None, "max": None, "median": None}
    arr = np.array(vals)
    return {
        "min": float(arr.min()),
        "max": float(arr.max()),
        "median": float(np.median(arr)),
    }


def summarize(diags) -> SummaryReport:
    """Aggregate per-pair diagnostics: min/max/median, class counts, order."""
    diags = list(diags)
    if not diags:
        raise ValueError("summarize requires at least one eigenpair")
    counts = {EIG_ZERO: 0, EIG_FINITE: 0, EIG_INFINITE: 0}
    for d in diags:
        counts[d.cls] += 1

    def key(i):
        d = diags[i]
        if d.eig is None:
            return (np.inf, i)
        return (d.eig.modulus, i)

    order = sorted(range(len(diags)), key=key)
    stats = {
        name: _stat(getattr(d, name) for d in diags)
        for name in ("eta_right", "eta_left", "omega_right", "omega_left")
    }
    return SummaryReport(counts=counts, stats=stats, order=order)
