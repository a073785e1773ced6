"""Dense complex linear algebra used by the solvers.

Everything here is written against plain ``numpy`` arrays but the
factorisations themselves are implemented in this module rather than
delegated to LAPACK: the solvers need full control over pivot
thresholds, because "singular" is a semantic signal (the resolvent
parameter hit the spectrum), not just a numerical accident.

Sizes are desk scale (a few hundred at most), so an O(n^3) kernel with
an O(n^2)-per-iteration simultaneous root finder is entirely adequate.
The characteristic-polynomial route is known to be ill-conditioned for
large matrices; :func:`eigenvalues` warns beyond dimension 50.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, Singular

log = logging.getLogger(__name__)

PIVOT_RTOL = 1e-12
CLUSTER_TOL = 1e-8
MAX_EIG_DIM = 512
MAX_ROOT_ITER = 500

_EPS = float(np.finfo(float).eps)


def as_matrix(a) -> np.ndarray:
    """Coerce to a finite 2-d complex array (copy)."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"expected a matrix, got ndim={m.ndim}")
    if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
        raise ValueError("matrix has non-finite entries")
    return m


# ------------------------------------------------------------------- LU

@dataclass
class LUFactorization:
    """Compact LU with partial pivoting (Doolittle, L unit lower)."""

    lu: np.ndarray
    perm: np.ndarray
    scale: float

    def solve(self, b) -> np.ndarray:
        """Back-substitute for one or many right-hand sides."""
        rhs = np.array(b, dtype=complex)
        squeeze = rhs.ndim == 1
        if squeeze:
            rhs = rhs[:, None]
        n = self.lu.shape[0]
        if rhs.shape[0] != n:
            raise ValueError(f"rhs has {rhs.shape[0]} rows, expected {n}")
        x = rhs[self.perm].astype(complex)
        for k in range(n):  # forward: L y = P b
            x[k + 1:] -= np.outer(self.lu[k + 1:, k], x[k])
        for k in range(n - 1, -1, -1):  # backward: U x = y
            x[k] /= self.lu[k, k]
            x[:k] -= np.outer(self.lu[:k, k], x[k])
        return x[:, 0] if squeeze else x


def lu_factor(a, pivot_rtol: float = PIVOT_RTOL) -> LUFactorization:
    """Factor a square matrix, raising :class:`Singular` when a pivot
    falls below ``pivot_rtol * max|A|``."""
    m = as_matrix(a)
    n, nc = m.shape
    if n != nc:
        raise ValueError(f"matrix is {n}x{nc}, expected square")
    scale = float(np.abs(m).max()) if m.size else 0.0
    thresh = pivot_rtol * scale
    perm = np.arange(n)
    for k in range(n):
        p = k + int(np.argmax(np.abs(m[k:, k])))
        if np.abs(m[p, k]) <= thresh:
            raise Singular(f"pivot {np.abs(m[p, k]):.3e} at column {k} "
                           f"(threshold {thresh:.3e})")
        if p != k:
            m[[k, p]] = m[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        m[k + 1:, k] /= m[k, k]
        m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k], m[k, k + 1:])
    return LUFactorization(lu=m, perm=perm, scale=scale)


def lu_solve(a, b, pivot_rtol: float = PIVOT_RTOL) -> np.ndarray:
    """Solve A X = B by LU with partial pivoting.

    Raises :class:`Singular` when the factorisation meets a pivot below
    threshold; this is how callers detect a resolvent parameter sitting
    on the spectrum.
    """
    fac = lu_factor(a, pivot_rtol)
    x = fac.solve(b)
    if log.isEnabledFor(logging.DEBUG):
        log.debug("lu_solve residual %.3e", residual_inf(a, x, b))
    return x


def residual_inf(a, x, b) -> float:
    """Max-norm residual |A X - B|_inf."""
    return float(np.abs(np.asarray(a) @ np.asarray(x) - np.asarray(b)).max())


def determinant(a) -> complex:
    """Determinant via elimination with partial pivoting.

    Unlike :func:`lu_factor` this never raises on tiny pivots; a
    (numerically) singular matrix simply returns a tiny determinant.
    """
    m = as_matrix(a)
    n = m.shape[0]
    det = complex(1.0)
    for k in range(n):
        p = k + int(np.argmax(np.abs(m[k:, k])))
        if m[p, k] == 0:
            return 0j
        if p != k:
            m[[k, p]] = m[[p, k]]
            det = -det
        det *= m[k, k]
        m[k + 1:, k + 1:] -= np.outer(m[k + 1:, k] / m[k, k], m[k, k + 1:])
    return det


# ------------------------------------------------------------ nullspace

@dataclass
class EchelonInfo:
    """Rank decision diagnostics from complete-pivot elimination."""

    rank: int
    pivots: np.ndarray          # pivot magnitudes in elimination order
    smallest_kept: float
    largest_dropped: float      # 0.0 when full rank
    threshold: float

    @property
    def gap(self) -> float:
        """Ratio separating retained from discarded pivots.

        Infinite when nothing was discarded; when nothing was retained
        the distance of the discarded pivots below the threshold is used
        instead.  Small values mean the rank call was a coin toss.
        """
        if self.largest_dropped == 0.0:
            return float("inf")
        if self.rank == 0:
            return self.threshold / self.largest_dropped
        return self.smallest_kept / self.largest_dropped


def nullspace_info(a, tol: float) -> tuple[list[np.ndarray], EchelonInfo]:
    """Orthonormal kernel basis plus the pivot diagnostics that justified
    the rank decision.

    Elimination is Gaussian with complete (row and column) pivoting; the
    rank threshold is ``tol * max|A|``.  Kernel vectors come from
    back-substitution on the free columns and are then orthonormalised.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = as_matrix(a)
    nr, nc = m.shape
    scale = float(np.abs(m).max()) if m.size else 0.0
    thresh = tol * scale
    col_perm = np.arange(nc)
    piv_mags: list[float] = []
    rank = 0
    largest_dropped = 0.0
    for k in range(min(nr, nc)):
        sub = np.abs(m[k:, k:])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, nc - k)
        mag = float(sub[i, j])
        if mag <= thresh:
            largest_dropped = mag
            break
        i += k
        j += k
        if i != k:
            m[[k, i]] = m[[i, k]]
        if j != k:
            m[:, [k, j]] = m[:, [j, k]]
            col_perm[[k, j]] = col_perm[[j, k]]
        piv_mags.append(mag)
        rank += 1
        m[k + 1:, k:] -= np.outer(m[k + 1:, k] / m[k, k], m[k, k:])

    info = EchelonInfo(
        rank=rank,
        pivots=np.array(piv_mags),
        smallest_kept=piv_mags[-1] if piv_mags else 0.0,
        largest_dropped=largest_dropped,
        threshold=thresh,
    )

    basis: list[np.ndarray] = []
    u = m[:rank, :]
    for j in range(rank, nc):
        y = np.zeros(nc, dtype=complex)
        y[j] = 1.0
        # back-substitute U[:, :rank] x = -U[:, j]
        rhs = -u[:, j].copy()
        for k in range(rank - 1, -1, -1):
            y[k] = (rhs[k] - u[k, k + 1:rank] @ y[k + 1:rank]) / u[k, k]
        v = np.zeros(nc, dtype=complex)
        v[col_perm] = y
        basis.append(v)

    ortho: list[np.ndarray] = []
    for v in basis:  # modified Gram-Schmidt
        for u_prev in ortho:
            v = v - (u_prev.conj() @ v) * u_prev
        nrm = np.linalg.norm(v)
        if nrm > 0:
            ortho.append(v / nrm)
    return ortho, info


def nullspace(a, tol: float) -> list[np.ndarray]:
    """Orthonormal basis of the numerical kernel of ``a`` (empty list
    when full rank)."""
    basis, _ = nullspace_info(a, tol)
    return basis


# ----------------------------------------------------------- eigenvalues

@dataclass(frozen=True)
class Spectrum:
    """Clustered eigenvalues with algebraic multiplicities."""

    eigenvalues: tuple[complex, ...]
    alg_mult: tuple[int, ...]
    cluster_tol: float

    @property
    def rho(self) -> float:
        """Spectral radius."""
        return max((abs(z) for z in self.eigenvalues), default=0.0)

    def mult_of(self, lam: complex, tol: float | None = None) -> int:
        """Algebraic multiplicity of the eigenvalue nearest ``lam``
        within ``tol`` (0 if none)."""
        tol = self.cluster_tol if tol is None else tol
        for z, m in zip(self.eigenvalues, self.alg_mult):
            if abs(z - lam) <= tol:
                return m
        return 0

    def nearest(self, lam: complex) -> complex:
        return min(self.eigenvalues, key=lambda z: abs(z - lam))


def char_poly(a) -> np.ndarray:
    """Monic characteristic polynomial det(lam I - A), highest degree
    first, by the Faddeev-LeVerrier trace recursion."""
    m = as_matrix(a)
    n = m.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)
    coeffs[0] = 1.0
    mk = np.zeros_like(m)
    ident = np.eye(n)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[k - 1] * ident
        coeffs[k] = -np.trace(m @ mk) / k
    return coeffs


def _polyval_with_deriv(coeffs: np.ndarray, z: np.ndarray):
    p = np.zeros_like(z)
    dp = np.zeros_like(z)
    for c in coeffs:
        dp = dp * z + p
        p = p * z + c
    return p, dp


def _poly_derivative(coeffs: np.ndarray) -> np.ndarray:
    n = len(coeffs) - 1
    if n <= 0:
        return np.zeros(1, dtype=complex)
    return coeffs[:-1] * np.arange(n, 0, -1)


def _refine_multiple_root(coeffs: np.ndarray, z: complex, mult: int,
                          radius: float) -> complex:
    """Polish an m-fold cluster centre by Newton on the (m-1)-th
    derivative, whose root there is simple and therefore well
    conditioned; reject the result if it leaves the cluster."""
    d = coeffs
    for _ in range(mult - 1):
        d = _poly_derivative(d)
    zz = complex(z)
    for _ in range(6):
        p, dp = _polyval_with_deriv(d, np.array([zz]))
        if dp[0] == 0:
            break
        step = p[0] / dp[0]
        zz -= step
        if abs(step) <= 4.0 * _EPS * (1.0 + abs(zz)):
            break
    return zz if abs(zz - z) <= radius else z


def _eval_bound(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Crude running bound on the attainable |p(z)| in floating point."""
    az = np.abs(z)
    b = np.zeros(az.shape)
    for c in coeffs:
        b = b * az + abs(c)
    d = len(coeffs)
    return 4.0 * d * _EPS * np.maximum(b, 1.0)


def _aberth(coeffs: np.ndarray, max_iter: int = MAX_ROOT_ITER) -> np.ndarray:
    """All roots of a monic polynomial by the Aberth-Ehrlich simultaneous
    iteration, starting from a perturbed circle of Cauchy-bound radius."""
    d = len(coeffs) - 1
    if d == 0:
        return np.zeros(0, dtype=complex)
    if d == 1:
        return np.array([-coeffs[1]])
    radius = 1.0 + float(np.abs(coeffs[1:]).max())
    angles = 2.0 * np.pi * np.arange(d) / d + 0.4
    z = radius * np.exp(1j * angles) * (1.0 + 1e-3 * np.arange(d) / d)
    for _ in range(max_iter):
        p, dp = _polyval_with_deriv(coeffs, z)
        done = np.abs(p) <= _eval_bound(coeffs, z)
        if done.all():
            return z
        dp = np.where(dp == 0, _EPS, dp)
        newton = p / dp
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        diff[diff == 0] = 1e-30  # colliding iterates must not produce inf
        sums = (1.0 / diff).sum(axis=1) - 1.0  # remove the diagonal 1/1 terms
        denom = 1.0 - newton * sums
        denom = np.where(denom == 0, _EPS, denom)
        w = np.where(done, 0.0, newton / denom)
        z = z - w
        if float(np.max(np.abs(w) / (1.0 + np.abs(z)))) < 4.0 * _EPS:
            return z
    raise NoConvergence(f"root iteration did not settle in {max_iter} sweeps")


def _cluster(roots: np.ndarray, tol: float) -> tuple[list[complex], list[int]]:
    """Single-linkage clustering at ``tol``, iterated on the centres so
    the returned eigenvalues are pairwise separated by more than tol."""
    centers = [complex(z) for z in roots]
    mults = [1] * len(centers)
    changed = True
    while changed:
        changed = False
        merged_c: list[complex] = []
        merged_m: list[int] = []
        for z, m in zip(centers, mults):
            hit = next(
                (i for i, c in enumerate(merged_c) if abs(c - z) <= tol), None
            )
            if hit is None:
                merged_c.append(z)
                merged_m.append(m)
            else:
                tot = merged_m[hit] + m
                merged_c[hit] = (merged_c[hit] * merged_m[hit] + z * m) / tot
                merged_m[hit] = tot
                changed = True
        centers, mults = merged_c, merged_m
    order = sorted(range(len(centers)), key=lambda i: (centers[i].real, centers[i].imag))
    return [centers[i] for i in order], [mults[i] for i in order]


def eigenvalues(a, cluster_tol: float = CLUSTER_TOL,
                max_iter: int = MAX_ROOT_ITER) -> Spectrum:
    """All eigenvalues of a square matrix with algebraic multiplicities.

    Pipeline: Faddeev-LeVerrier characteristic polynomial, exact-zero
    deflation of roots at the origin, Aberth-Ehrlich simultaneous
    iteration, one guarded Newton step per root, then clustering.

    Multiple roots of a floating-point polynomial split by roughly
    eps**(1/m), so the working cluster radius is floored at a small
    multiple of sqrt(eps); ``cluster_tol`` only tightens the guarantee
    that *returned* eigenvalues are pairwise separated by more than it.
    Pass a larger ``cluster_tol`` to recognise higher multiplicities.

    Every returned value is validated against |det(lam I - A)| at scale
    1e-6 * max(1, |A|_inf)**n; failure raises :class:`NoConvergence`.
    """
    m = as_matrix(a)
    n = m.shape[0]
    if n > MAX_EIG_DIM:
        raise ValueError(f"dimension {n} exceeds supported {MAX_EIG_DIM}")
    if n > 50:
        warnings.warn(
            "characteristic-polynomial eigenvalues are ill-conditioned for "
            f"dimension {n} > 50; treat multiplicities with suspicion",
            RuntimeWarning,
            stacklevel=2,
        )
    if n == 0:
        return Spectrum((), (), cluster_tol)

    coeffs = char_poly(m)
    # exact trailing zeros: that many roots exactly at the origin
    # (nilpotent blocks produce them without rounding)
    nz = 0
    while nz < n and coeffs[n - nz] == 0:
        nz += 1
    reduced = coeffs[: n - nz + 1]

    roots = _aberth(reduced, max_iter)
    if roots.size:
        p, dp = _polyval_with_deriv(reduced, roots)
        step = np.where(dp == 0, 0.0, p / np.where(dp == 0, 1.0, dp))
        roots = roots - step
    roots = np.concatenate([roots, np.zeros(nz, dtype=complex)])

    scale_r = 1.0 + (float(np.abs(roots).max()) if roots.size else 0.0)
    tol_eff = max(cluster_tol, 32.0 * np.sqrt(_EPS) * scale_r)
    centers, mults = _cluster(roots, tol_eff)
    centers = [
        _refine_multiple_root(coeffs, z, mu, tol_eff) if mu >= 2 else z
        for z, mu in zip(centers, mults)
    ]

    norm_a = float(np.abs(m).sum(axis=1).max()) if m.size else 0.0
    det_tol = 1e-6 * max(1.0, norm_a) ** n
    ident = np.eye(n)
    for z in centers:
        d = abs(determinant(z * ident - m))
        if d > det_tol:
            raise NoConvergence(
                f"claimed eigenvalue {z} has |det(zI-A)| = {d:.3e} > {det_tol:.3e}"
            )
    return Spectrum(tuple(centers), tuple(mults), cluster_tol)
