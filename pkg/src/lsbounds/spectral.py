"""Dense spectral primitives: spectral norms, SVD kernel/range splits,
and the orthogonal projectors derived from them.

Everything here is a pure function of its inputs. Basis matrices returned
by :func:`decompose_singular` are unique only up to sign and rotation, so
downstream code must consume them through rotation-invariant quantities
(norms of projected matrices), never entrywise.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InputError, NotSingularError, SpectralGapWarning

__all__ = [
    "SingularDecomposition",
    "spectral_norm",
    "decompose_singular",
    "projections",
]

#: Default rank threshold, as a multiple of the largest singular value.
DEFAULT_RANK_TOL_FACTOR = 1e-8

#: Ratio below which the kernel dimension is considered ambiguous.
GAP_GUARD_FACTOR = 10.0


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise InputError(f"expected a matrix or vector, got ndim={M.ndim}")
    return M


def spectral_norm(M) -> float:
    """Largest singular value of a real matrix.

    A 1-D input is treated as a column vector, for which the result is the
    Euclidean norm. Matrices with a zero dimension have norm 0.
    """
    M = _as_matrix(M)
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    if min(M.shape) == 0:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


@dataclass(frozen=True, eq=False)
class SingularDecomposition:
    """Kernel/range split of a singular n-by-n matrix J.

    The columns of ``V`` (n-by-q) span ker(J) and those of ``W``
    (n-by-(n-q)) span range(J); ``Vbar`` and ``Wbar`` span the respective
    orthogonal complements. ``sigma`` holds the nonzero singular values in
    ascending order, so ``sigma[0]`` is the smallest nonzero one.
    """

    n: int
    q: int
    V: np.ndarray
    Vbar: np.ndarray
    W: np.ndarray
    Wbar: np.ndarray
    sigma: np.ndarray
    rank_tol: float


def decompose_singular(J, rank_tol: float | None = None) -> SingularDecomposition:
    """Build the kernel/range decomposition of a (numerically) singular matrix.

    Singular values at or below ``rank_tol`` count as zero. The default
    threshold is ``1e-8 * sigma_max(J)``: floating-point matrices are never
    exactly singular, so singularity is always declared relative to scale.

    Raises :class:`NotSingularError` when every singular value exceeds the
    threshold. Emits :class:`SpectralGapWarning` when the smallest retained
    singular value is within a factor 10 of the threshold, since the kernel
    dimension is then ambiguous.
    """
    J = np.asarray(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise InputError(f"expected a square matrix, got shape {J.shape}")
    if not np.all(np.isfinite(J)):
        raise InputError("matrix has non-finite entries")
    n = J.shape[0]

    U, s, Vt = np.linalg.svd(J)  # s descending
    sigma_max = s[0] if n else 0.0
    if rank_tol is None:
        rank_tol = DEFAULT_RANK_TOL_FACTOR * sigma_max
    elif rank_tol <= 0:
        raise InputError("rank_tol must be positive")

    q = int(np.sum(s <= rank_tol))
    if q == 0:
        raise NotSingularError(
            f"matrix is not singular at rank_tol={rank_tol:g} "
            f"(smallest singular value {s[-1]:g})"
        )
    r = n - q

    # numpy orders singular values descending; reorder the nonzero block so
    # sigma is ascending and column j of W/Vbar matches sigma[j].
    order = np.argsort(s[:r], kind="stable") if r else np.empty(0, dtype=int)
    W = np.ascontiguousarray(U[:, :r][:, order])
    Vbar = np.ascontiguousarray(Vt[:r].T[:, order])
    sigma = s[:r][order]
    V = np.ascontiguousarray(Vt[r:].T)
    Wbar = np.ascontiguousarray(U[:, r:])

    if r and sigma[0] < GAP_GUARD_FACTOR * rank_tol:
        warnings.warn(
            f"smallest retained singular value {sigma[0]:g} is within 10x of "
            f"rank_tol={rank_tol:g}; kernel dimension q={q} is ambiguous",
            SpectralGapWarning,
            stacklevel=2,
        )

    return SingularDecomposition(
        n=n, q=q, V=V, Vbar=Vbar, W=W, Wbar=Wbar, sigma=sigma, rank_tol=float(rank_tol)
    )


def projections(dec: SingularDecomposition):
    """Orthogonal projectors onto the four subspaces of a decomposition.

    Returns ``(P, Q, P_ker, P_rangeperp)`` where P projects onto range(J),
    Q onto the kernel complement, P_ker onto ker(J) and P_rangeperp onto
    the range complement.
    """
    P = dec.W @ dec.W.T
    Q = dec.Vbar @ dec.Vbar.T
    P_ker = dec.V @ dec.V.T
    P_rangeperp = dec.Wbar @ dec.Wbar.T
    return P, Q, P_ker, P_rangeperp
