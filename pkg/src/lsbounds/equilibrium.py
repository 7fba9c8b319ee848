"""Equilibrium location and singular-parameter search.

A damped Newton iteration finds equilibria; the singular parameter value
along a continued equilibrium branch is isolated by bisection on a signed
criticality function sign(det J) * sigma_min(J). The sign factor only
orients the bisection (it is scale-free), while the magnitude is the
smallest singular value, which vanishes exactly at the singular point.
"""

from __future__ import annotations

import logging
import warnings

import numpy as np

from .errors import BracketError, BranchJumpWarning, ConvergenceError, InputError
from .models import NetworkModel, evaluate, jacobian_x
from .spectral import decompose_singular
from .errors import NotSingularError

__all__ = ["solve_equilibrium", "classify_singularity", "find_singular_parameter"]

logger = logging.getLogger(__name__)

MAX_STEP_HALVINGS = 30


def solve_equilibrium(
    model: NetworkModel,
    p: float,
    x_init,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> np.ndarray:
    """Newton iteration with backtracking line search on the squared residual.

    Converges when the max-norm residual of the vector field drops to
    ``tol``. A singular Newton system falls back to a pseudo-inverse step
    (logged, not fatal). Raises :class:`ConvergenceError` carrying the best
    iterate and its residual when ``max_iter`` is exhausted.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    x = np.array(x_init, dtype=float)
    if x.shape != (model.n,):
        raise InputError(f"x_init must have length {model.n}")

    f = evaluate(model, x, p)
    best_x, best_res = x.copy(), float(np.max(np.abs(f)))
    for _ in range(max_iter):
        res = float(np.max(np.abs(f)))
        if res <= tol:
            return x
        J = jacobian_x(model, x, p)
        try:
            dx = np.linalg.solve(J, -f)
            if not np.all(np.isfinite(dx)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            logger.debug("singular Newton system at p=%g; using pseudo-inverse", p)
            dx = np.linalg.lstsq(J, -f, rcond=None)[0]
        merit = float(np.dot(f, f))
        t = 1.0
        for _ in range(MAX_STEP_HALVINGS):
            f_trial = evaluate(model, x + t * dx, p)
            if float(np.dot(f_trial, f_trial)) < merit:
                break
            t *= 0.5
        x = x + t * dx
        f = evaluate(model, x, p)
        res = float(np.max(np.abs(f)))
        if res < best_res:
            best_x, best_res = x.copy(), res
    if best_res <= tol:
        return best_x
    raise ConvergenceError(
        f"Newton did not reach tolerance {tol:g} in {max_iter} iterations "
        f"(best residual {best_res:g})",
        best=best_x,
        residual=best_res,
    )


def classify_singularity(
    model: NetworkModel,
    x_star,
    p_star: float,
    rank_tol: float | None = None,
    equilibrium_tol: float = 1e-8,
):
    """Kernel dimension and eigenvalue structure at a candidate equilibrium.

    Returns ``(q, eigenvalues, assumption_ok)``. ``q`` is the number of
    singular values at or below the rank threshold (0 means the Jacobian is
    not singular there). ``assumption_ok`` is True when exactly ``q``
    eigenvalues vanish within the threshold and every other eigenvalue has
    real part bounded away from zero, i.e. the zero eigenvalue has matching
    algebraic and geometric multiplicity and the rest are hyperbolic.
    """
    x_star = np.asarray(x_star, dtype=float)
    residual = float(np.max(np.abs(evaluate(model, x_star, p_star))))
    if residual > equilibrium_tol:
        raise InputError(
            f"(x, p) is not an equilibrium: residual {residual:g} exceeds "
            f"tolerance {equilibrium_tol:g}"
        )
    J = jacobian_x(model, x_star, p_star)
    eigenvalues = np.linalg.eigvals(J)
    try:
        dec = decompose_singular(J, rank_tol)
        q = dec.q
        tol_used = dec.rank_tol
    except NotSingularError:
        q = 0
        s = np.linalg.svd(J, compute_uv=False)
        tol_used = rank_tol if rank_tol is not None else 1e-8 * s[0]

    near_zero = np.abs(eigenvalues) <= tol_used
    hyperbolic = np.abs(eigenvalues.real) > tol_used
    assumption_ok = bool(q > 0 and int(near_zero.sum()) == q and np.all(hyperbolic | near_zero))
    if q > 0 and not assumption_ok:
        warnings.warn(
            "eigenvalue structure violates the simple-singularity assumption "
            f"(q={q}, |lambda|<=tol count={int(near_zero.sum())})",
            stacklevel=2,
        )
    return q, eigenvalues, assumption_ok


def _criticality(model, x, p) -> float:
    """Signed distance to singularity: sign(det J) * sigma_min(J)."""
    J = jacobian_x(model, x, p)
    sign, _ = np.linalg.slogdet(J)
    smin = float(np.linalg.svd(J, compute_uv=False)[-1])
    return (sign if sign != 0 else 0.0) * smin


def find_singular_parameter(
    model: NetworkModel,
    x_branch,
    p_range,
    steps: int = 50,
    tol_p: float = 1e-10,
    equilibrium_tol: float = 1e-10,
):
    """Locate the parameter where the Jacobian becomes singular along a branch.

    The equilibrium branch seeded by ``x_branch`` is re-solved at ``steps``
    samples of ``p_range`` (warm-started from the previous solution); the
    first sign change of sign(det J) * sigma_min(J) brackets the singular
    parameter, which bisection then isolates to ``tol_p``. Raises
    :class:`BracketError` when no sign change occurs in the range. A step
    whose equilibrium moves much further than the previous ones triggers a
    :class:`BranchJumpWarning`, since the continued branch may have been
    lost at a fold.

    Returns ``(x_star, p_star)``.
    """
    p_lo, p_hi = float(p_range[0]), float(p_range[1])
    if not p_lo < p_hi:
        raise InputError("p_range must be an increasing interval")
    if steps < 2:
        raise InputError("steps must be at least 2")

    ps = np.linspace(p_lo, p_hi, steps)
    x = np.asarray(x_branch, dtype=float).copy()

    def branch_point(x_seed, p):
        return solve_equilibrium(model, p, x_seed, tol=equilibrium_tol, max_iter=100)

    x = branch_point(x, ps[0])
    crit_prev = _criticality(model, x, ps[0])
    prev_step_size = None
    bracket = None
    for p_prev, p in zip(ps[:-1], ps[1:]):
        x_new = branch_point(x, p)
        step_size = float(np.max(np.abs(x_new - x)))
        if prev_step_size is not None and step_size > max(
            10.0 * prev_step_size, 0.25 * (1.0 + float(np.max(np.abs(x))))
        ):
            warnings.warn(
                f"equilibrium moved by {step_size:g} between p={p_prev:g} and "
                f"p={p:g}; the continuation may have jumped branches",
                BranchJumpWarning,
                stacklevel=2,
            )
        prev_step_size = max(step_size, 1e-14)
        crit = _criticality(model, x_new, p)
        if crit == 0.0 or np.sign(crit) != np.sign(crit_prev):
            bracket = (p_prev, p, x.copy())
            break
        x, crit_prev = x_new, crit
    if bracket is None:
        raise BracketError(
            f"no singularity crossing detected in p range [{p_lo:g}, {p_hi:g}]"
        )

    lo, hi, x = bracket
    crit_lo = _criticality(model, branch_point(x, lo), lo)
    while hi - lo > tol_p:
        mid = 0.5 * (lo + hi)
        x_mid = branch_point(x, mid)
        crit_mid = _criticality(model, x_mid, mid)
        if crit_mid == 0.0:
            lo = hi = mid
            x = x_mid
            break
        if np.sign(crit_mid) == np.sign(crit_lo):
            lo, x, crit_lo = mid, x_mid, crit_mid
        else:
            hi = mid
    p_star = 0.5 * (lo + hi)
    x_star = branch_point(x, p_star)
    return x_star, p_star
