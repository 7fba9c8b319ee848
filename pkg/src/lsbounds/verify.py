"""Independent numerical verification of the reduced model's implicit map.

A certificate promises that, on the certified balls, the range-component
equilibrium equation can be solved uniquely for the complement coordinates
beta as a function of (alpha, p). This module checks that promise the hard
way: Newton solves on a grid over the (alpha, p) ball, with multi-start
agreement as uniqueness evidence. Failures are reported as data, never
exceptions, because outside a certificate nothing is promised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import BallSpec
from .errors import ConvergenceError, InputError, NumericalError
from .models import ModelKind, NetworkModel, SingularPoint, evaluate, gamma, jacobian_x
from .equilibrium import solve_equilibrium

__all__ = [
    "VerificationReport",
    "solve_complementary",
    "verify_implicit_map",
    "consensus_branch",
    "compare_full_vs_branch",
]


def solve_complementary(
    model: NetworkModel,
    sp: SingularPoint,
    alpha,
    p: float,
    beta_init=None,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> np.ndarray:
    """Solve the range-projected equilibrium equation for beta.

    Newton iteration on g(beta) = W^T Phi(gamma(alpha, beta), p) with the
    exact inner Jacobian W^T D_x Phi Vbar. A singular inner Jacobian raises
    :class:`NumericalError`, which typically signals leaving the region
    where the implicit map exists.
    """
    if tol <= 0:
        raise InputError("tol must be positive")
    dec = sp.decomposition
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.shape != (dec.q,):
        raise InputError(f"alpha must have length {dec.q}")
    beta = (
        sp.beta0.copy()
        if beta_init is None
        else np.atleast_1d(np.asarray(beta_init, dtype=float)).copy()
    )
    if beta.shape != (dec.n - dec.q,):
        raise InputError(f"beta_init must have length {dec.n - dec.q}")

    Wt = dec.W.T
    residuals = []
    for _ in range(max_iter + 1):
        g = Wt @ evaluate(model, gamma(dec, alpha, beta), p)
        res = float(np.max(np.abs(g))) if g.size else 0.0
        residuals.append(res)
        if res <= tol:
            return beta
        G = Wt @ jacobian_x(model, gamma(dec, alpha, beta), p) @ dec.Vbar
        try:
            step = np.linalg.solve(G, -g)
        except np.linalg.LinAlgError:
            raise NumericalError(
                "inner Jacobian is singular; the complement solve left the "
                f"region where it is well posed (residual {res:g})"
            ) from None
        if not np.all(np.isfinite(step)):
            raise NumericalError("complement Newton step is not finite")
        beta = beta + step
    raise ConvergenceError(
        f"complement solve did not reach tolerance {tol:g} in {max_iter} "
        f"iterations (residual trace {['%.3g' % r for r in residuals[-5:]]})",
        best=beta,
        residual=residuals[-1],
    )


@dataclass(frozen=True)
class VerificationReport:
    """Grid verification outcome.

    ``success_fraction`` counts grid points where the complement solve
    converged from the center AND landed inside the beta ball.
    ``uniqueness_violations`` counts restarts that converged somewhere else
    (or failed to converge); agreement of all restarts is evidence of
    uniqueness, not a proof.
    """

    grid_points: int
    successes: int
    success_fraction: float
    max_beta_deviation: float
    uniqueness_violations: int
    starts_per_point: int
    ball: BallSpec
    samples: list = field(default_factory=list, repr=False)

    def to_json_dict(self) -> dict:
        return {
            "grid_points": self.grid_points,
            "successes": self.successes,
            "success_fraction": self.success_fraction,
            "max_beta_deviation": self.max_beta_deviation,
            "uniqueness_violations": self.uniqueness_violations,
            "starts_per_point": self.starts_per_point,
            "r_par": self.ball.r_par,
            "r_perp": self.ball.r_perp,
        }


def _disc_grid(dim: int, radius: float, per_axis: int, seed: int) -> np.ndarray:
    """Polar-stratified grid on a ball: the center plus per_axis nonzero
    radius levels crossed with per_axis directions (uniform circle angles
    when dim == 2, seeded Gaussian directions otherwise)."""
    if per_axis == 1:
        return np.zeros((1, dim))
    levels = radius * np.arange(1, per_axis + 1) / per_axis
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    elif dim == 2:
        angles = 2.0 * math.pi * np.arange(per_axis) / per_axis
        dirs = np.column_stack([np.cos(angles), np.sin(angles)])
    else:
        rng = np.random.default_rng(seed)
        g = rng.normal(size=(per_axis, dim))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    pts = [np.zeros(dim)]
    for level in levels:
        for direction in dirs:
            pts.append(level * direction)
    return np.array(pts)


def verify_implicit_map(
    model: NetworkModel,
    sp: SingularPoint,
    ball: BallSpec,
    grid: int = 11,
    starts: int = 5,
    seed: int = 0,
    tol: float = 1e-10,
    agreement_tol: float = 1e-6,
    collect: bool = False,
) -> VerificationReport:
    """Existence/uniqueness evidence for the implicit map on given balls.

    For every grid point (alpha, p) in the parallel ball: solve the
    complement equation from beta0, check the solution stays inside the
    beta ball, then re-solve from ``starts`` random initial points inside
    that ball and count disagreements. Failures lower the success fraction
    or raise the violation count; they never raise.
    """
    if grid < 1:
        raise InputError("grid must be at least 1")
    if starts < 0:
        raise InputError("starts must be nonnegative")
    dec = sp.decomposition
    d1 = dec.q + 1
    offsets = _disc_grid(d1, ball.r_par, grid, seed)
    rng = np.random.default_rng(seed + 1)
    r = dec.n - dec.q

    successes = 0
    violations = 0
    max_dev = 0.0
    samples = []
    for row in offsets:
        alpha = sp.alpha0 + row[: dec.q]
        p = sp.p_star + row[dec.q]
        entry = {"alpha": alpha.tolist(), "p": float(p)}
        try:
            beta = solve_complementary(model, sp, alpha, p, tol=tol)
        except NumericalError:
            beta = None
        if beta is not None:
            deviation = float(np.linalg.norm(beta - sp.beta0))
            max_dev = max(max_dev, deviation)
            inside = deviation <= ball.r_perp
            if inside:
                successes += 1
            entry.update(converged=True, deviation=deviation, inside=bool(inside))
            for _ in range(starts):
                direction = rng.normal(size=r)
                norm = np.linalg.norm(direction)
                if norm == 0.0:
                    continue
                radius = ball.r_perp * rng.uniform() ** (1.0 / max(r, 1))
                init = sp.beta0 + radius * direction / norm
                try:
                    other = solve_complementary(
                        model, sp, alpha, p, beta_init=init, tol=tol
                    )
                except NumericalError:
                    violations += 1
                    continue
                if np.max(np.abs(other - beta)) > agreement_tol:
                    violations += 1
        else:
            entry.update(converged=False)
        if collect:
            samples.append(entry)

    total = len(offsets)
    return VerificationReport(
        grid_points=total,
        successes=successes,
        success_fraction=successes / total,
        max_beta_deviation=max_dev,
        uniqueness_violations=violations,
        starts_per_point=starts,
        ball=ball,
        samples=samples,
    )


def _bisect(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    flo = f(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if hi - lo < tol:
            break
        if (fmid > 0) == (flo > 0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def consensus_branch(
    k: int, d: float, u_values, kind: ModelKind | str = ModelKind.HOPFIELD
):
    """Scalar consensus equilibrium branches over a list of gains.

    Restricting the consensus dynamics on a k-regular graph to the uniform
    subspace x = a * ones gives a scalar equation in a:

        Hopfield form:      -d a + u k tanh(a) = 0
        firing-rate form:   -d a + tanh(u k a) = 0

    Returns a list of (u, a_minus, a_zero, a_plus) tuples. The nontrivial
    pair exists only above the pitchfork at u = d/k and is reported as NaN
    below it; a_minus = -a_plus by odd symmetry.
    """
    if d <= 0 or k <= 0:
        raise InputError("d and k must be positive")
    kind = ModelKind(kind)
    out = []
    for u in u_values:
        if kind is ModelKind.HOPFIELD:
            f = lambda a, u=u: -d * a + u * k * math.tanh(a)
        else:
            f = lambda a, u=u: -d * a + math.tanh(u * k * a)
        slope = u * k / d  # derivative ratio of the coupling term at a = 0
        if slope <= 1.0:
            out.append((float(u), math.nan, 0.0, math.nan))
            continue
        hi = 1.0
        while f(hi) > 0:
            hi *= 2.0
            if hi > 1e12:  # pragma: no cover - coupling is bounded
                raise NumericalError("no upper bracket for the consensus root")
        a_plus = _bisect(f, 1e-300, hi)
        out.append((float(u), -a_plus, 0.0, a_plus))
    return out


def compare_full_vs_branch(
    model: NetworkModel,
    sp: SingularPoint,
    u_values,
    tol: float = 1e-8,
    seed: int = 0,
) -> float:
    """Deviation of full-network equilibria from the scalar consensus branch.

    For every gain, the full system is solved from a slightly perturbed
    consensus state (relative perturbation 1e-3, seeded) and the converged
    equilibrium is compared against a * ones from the scalar branch. Returns
    the maximum deviation; solver failures propagate.
    """
    n = model.n
    d = float(model.C[0])
    k = int(round(model.A.sum(axis=1)[0]))
    rng = np.random.default_rng(seed)
    branch = consensus_branch(k, d, u_values, kind=model.kind)
    worst = 0.0
    for u, _, _, a_plus in branch:
        a = 0.0 if math.isnan(a_plus) else a_plus
        target = a * np.ones(n)
        x_init = target + 1e-3 * max(1.0, abs(a)) * rng.standard_normal(n)
        x = solve_equilibrium(model, u, x_init, tol=min(tol, 1e-10) * 1e-2)
        worst = max(worst, float(np.max(np.abs(x - target))))
    return worst
