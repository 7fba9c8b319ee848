"""Batched evaluation of projected Jacobian-variation norms.

The supremum estimators in :mod:`lsbounds.bounds` evaluate thousands of
spectral norms of small matrices. That inner loop is implemented twice:

* numba ``@njit`` kernels (default when numba imports and the model uses a
  shipped activation), and
* a vectorized pure-numpy fallback that also handles user-defined
  activations.

Set ``LSB_BACKEND=numpy`` to force the fallback, ``LSB_BACKEND=numba`` to
require the JIT path (raises if unavailable). Both paths reduce per-sample
results into an index-addressed output array, so results are deterministic
regardless of parallel scheduling. ``benchmarks/bench_kernels.py`` compares
the two.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import InputError
from .models import ModelKind, NetworkModel, SingularPoint

__all__ = [
    "HAS_NUMBA",
    "backend",
    "XiWorkspace",
    "make_workspace",
    "xi_par_norms",
    "xi_perp_norms",
]

try:
    import numba
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


_ACT_CODES = {"tanh": 0, "logistic": 1}
_KIND_CODES = {ModelKind.HOPFIELD: 0, ModelKind.FIRING_RATE: 1}


def backend() -> str:
    """Active backend name, resolved from the LSB_BACKEND environment flag."""
    choice = os.environ.get("LSB_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise InputError("LSB_BACKEND=numba but numba is not importable")
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise InputError(f"unrecognized LSB_BACKEND value {choice!r}")


class XiWorkspace:
    """Precomputed arrays shared by every sample evaluation for one model
    at one singular point."""

    def __init__(self, model: NetworkModel, sp: SingularPoint):
        dec = sp.decomposition
        self.kind_code = _KIND_CODES[model.kind]
        self.act_code = _ACT_CODES.get(model.activation.label, -1)
        self.activation = model.activation
        self.q = dec.q
        self.r = dec.n - dec.q
        self.n = dec.n
        self.p_star = sp.p_star
        self.alpha0 = sp.alpha0
        self.beta0 = sp.beta0

        A = model.A
        self.V = np.ascontiguousarray(dec.V)
        self.Vbar = np.ascontiguousarray(dec.Vbar)
        self.Wt = np.ascontiguousarray(dec.W.T)
        self.WtA = np.ascontiguousarray(dec.W.T @ A)
        self.AV = np.ascontiguousarray(A @ dec.V)
        self.AVbar = np.ascontiguousarray(A @ dec.Vbar)
        self.b = model.b
        # state with kernel coordinates stripped; the parallel maps hold
        # beta fixed at beta0
        self.x_par0 = dec.Vbar @ sp.beta0
        self.Ax_par0 = A @ self.x_par0

        S, Sp = model.activation.value, model.activation.derivative
        if model.kind is ModelKind.HOPFIELD:
            self.sprime_star = np.asarray(Sp(sp.x_star), dtype=float)
            self.s_star = np.asarray(S(sp.x_star), dtype=float)
            self.z_star = sp.x_star  # unused, kept for uniform shape
            self.dpe_star = np.zeros(self.n)
        else:
            z_star = sp.p_star * (A @ sp.x_star) + model.b
            self.z_star = z_star
            self.sprime_star = np.asarray(Sp(z_star), dtype=float)
            self.s_star = np.asarray(S(sp.x_star), dtype=float)
            self.dpe_star = self.sprime_star * (A @ sp.x_star)


def make_workspace(model: NetworkModel, sp: SingularPoint) -> XiWorkspace:
    return XiWorkspace(model, sp)


# ---------------------------------------------------------------------------
# numpy fallback (vectorized over the batch; works for any activation)
# ---------------------------------------------------------------------------


def _top_singular_values(Ms: np.ndarray) -> np.ndarray:
    if Ms.shape[1] == 0 or Ms.shape[2] == 0:
        return np.zeros(Ms.shape[0])
    return np.linalg.svd(Ms, compute_uv=False)[:, 0]


def _xi_par_numpy(ws: XiWorkspace, alphas: np.ndarray, ps: np.ndarray) -> np.ndarray:
    S, Sp = ws.activation.value, ws.activation.derivative
    X = alphas @ ws.V.T + ws.x_par0[None, :]  # B x n
    if ws.kind_code == 0:
        delta = ps[:, None] * Sp(X) - ws.p_star * ws.sprime_star[None, :]
        cols_a = (ws.WtA[None, :, :] * delta[:, None, :]) @ ws.V  # B x r x q
        col_p = (S(X) - ws.s_star[None, :]) @ ws.WtA.T  # B x r
    else:
        AX = alphas @ ws.AV.T + ws.Ax_par0[None, :]
        Z = ps[:, None] * AX + ws.b[None, :]
        delta_x = ps[:, None] * Sp(Z) - ws.p_star * ws.sprime_star[None, :]
        cols_a = (ws.Wt[None, :, :] * delta_x[:, None, :]) @ ws.AV
        col_p = (Sp(Z) * AX - ws.dpe_star[None, :]) @ ws.Wt.T
    blocks = np.concatenate([cols_a, col_p[:, :, None]], axis=2)
    return _top_singular_values(blocks)


def _xi_perp_numpy(
    ws: XiWorkspace, alphas: np.ndarray, betas: np.ndarray, ps: np.ndarray
) -> np.ndarray:
    Sp = ws.activation.derivative
    if ws.kind_code == 0:
        X = alphas @ ws.V.T + betas @ ws.Vbar.T
        delta = ps[:, None] * Sp(X) - ws.p_star * ws.sprime_star[None, :]
        Ms = (ws.WtA[None, :, :] * delta[:, None, :]) @ ws.Vbar
    else:
        AX = alphas @ ws.AV.T + betas @ ws.AVbar.T
        Z = ps[:, None] * AX + ws.b[None, :]
        delta = ps[:, None] * Sp(Z) - ws.p_star * ws.sprime_star[None, :]
        Ms = (ws.Wt[None, :, :] * delta[:, None, :]) @ ws.AVbar
    return _top_singular_values(Ms)


# ---------------------------------------------------------------------------
# numba kernels (shipped activations only)
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _act_deriv(code, z):
    if code == 0:
        t = np.tanh(z)
        return 1.0 - t * t
    s = 1.0 / (1.0 + np.exp(-z))
    return s * (1.0 - s)


@njit(cache=True, inline="always")
def _act_value(code, z):
    if code == 0:
        return np.tanh(z)
    return 1.0 / (1.0 + np.exp(-z))


@njit(cache=True)
def _sigma_max(M):
    # top singular value through the Gram matrix: much cheaper than a full
    # SVD and (unlike small singular values) not hurt by the squaring
    if M.shape[0] == 0 or M.shape[1] == 0:
        return 0.0
    G = M.T @ M
    m = G.shape[0]
    if m == 1:
        return np.sqrt(G[0, 0])
    if m == 2:
        a, c = G[0, 0], G[1, 1]
        half_gap = 0.5 * (a - c)
        lam = 0.5 * (a + c) + np.sqrt(half_gap * half_gap + G[0, 1] * G[0, 1])
        return np.sqrt(max(lam, 0.0))
    w = np.linalg.eigvalsh(G)
    return np.sqrt(max(w[m - 1], 0.0))


@njit(cache=True, parallel=True)
def _xi_par_nb(
    kind_code,
    act_code,
    V,
    x_par0,
    Ax_par0,
    AV,
    Wt,
    WtA,
    bias,
    sprime_star,
    s_star,
    dpe_star,
    p_star,
    alphas,
    ps,
    out,
):
    B = alphas.shape[0]
    n = V.shape[0]
    q = V.shape[1]
    r = Wt.shape[0]
    for i in prange(B):
        x = x_par0.copy()
        for j in range(q):
            a = alphas[i, j]
            for m in range(n):
                x[m] += V[m, j] * a
        p = ps[i]
        block = np.empty((r, q + 1))
        if kind_code == 0:
            delta = np.empty(n)
            sbar = np.empty(n)
            for m in range(n):
                delta[m] = p * _act_deriv(act_code, x[m]) - p_star * sprime_star[m]
                sbar[m] = _act_value(act_code, x[m]) - s_star[m]
            for row in range(r):
                for j in range(q):
                    acc = 0.0
                    for m in range(n):
                        acc += WtA[row, m] * delta[m] * V[m, j]
                    block[row, j] = acc
                acc = 0.0
                for m in range(n):
                    acc += WtA[row, m] * sbar[m]
                block[row, q] = acc
        else:
            ax = Ax_par0.copy()
            for j in range(q):
                a = alphas[i, j]
                for m in range(n):
                    ax[m] += AV[m, j] * a
            delta_x = np.empty(n)
            dpe = np.empty(n)
            for m in range(n):
                z = p * ax[m] + bias[m]
                sp = _act_deriv(act_code, z)
                delta_x[m] = p * sp - p_star * sprime_star[m]
                dpe[m] = sp * ax[m] - dpe_star[m]
            for row in range(r):
                for j in range(q):
                    acc = 0.0
                    for m in range(n):
                        acc += Wt[row, m] * delta_x[m] * AV[m, j]
                    block[row, j] = acc
                acc = 0.0
                for m in range(n):
                    acc += Wt[row, m] * dpe[m]
                block[row, q] = acc
        out[i] = _sigma_max(block)


@njit(cache=True, parallel=True)
def _xi_perp_nb(
    kind_code,
    act_code,
    V,
    Vbar,
    AV,
    AVbar,
    Wt,
    WtA,
    bias,
    sprime_star,
    p_star,
    alphas,
    betas,
    ps,
    out,
):
    B = alphas.shape[0]
    n = V.shape[0]
    q = V.shape[1]
    r = Vbar.shape[1]
    for i in prange(B):
        p = ps[i]
        delta = np.empty(n)
        if kind_code == 0:
            x = np.zeros(n)
            for j in range(q):
                a = alphas[i, j]
                for m in range(n):
                    x[m] += V[m, j] * a
            for j in range(r):
                bb = betas[i, j]
                for m in range(n):
                    x[m] += Vbar[m, j] * bb
            for m in range(n):
                delta[m] = p * _act_deriv(act_code, x[m]) - p_star * sprime_star[m]
            M = (WtA * delta) @ Vbar
        else:
            ax = np.zeros(n)
            for j in range(q):
                a = alphas[i, j]
                for m in range(n):
                    ax[m] += AV[m, j] * a
            for j in range(r):
                bb = betas[i, j]
                for m in range(n):
                    ax[m] += AVbar[m, j] * bb
            for m in range(n):
                z = p * ax[m] + bias[m]
                delta[m] = p * _act_deriv(act_code, z) - p_star * sprime_star[m]
            M = (Wt * delta) @ AVbar
        out[i] = _sigma_max(M)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _use_numba(ws: XiWorkspace, force: str | None) -> bool:
    chosen = force if force is not None else backend()
    return chosen == "numba" and ws.act_code >= 0 and HAS_NUMBA


def xi_par_norms(
    ws: XiWorkspace, alphas, ps, force: str | None = None
) -> np.ndarray:
    """Norms of the parallel variation block at a batch of (alpha, p) points."""
    alphas = np.ascontiguousarray(alphas, dtype=float).reshape(-1, ws.q)
    ps = np.ascontiguousarray(ps, dtype=float)
    if _use_numba(ws, force):
        out = np.empty(len(ps))
        _xi_par_nb(
            ws.kind_code,
            ws.act_code,
            ws.V,
            ws.x_par0,
            ws.Ax_par0,
            ws.AV,
            ws.Wt,
            ws.WtA,
            ws.b,
            ws.sprime_star,
            ws.s_star,
            ws.dpe_star,
            ws.p_star,
            alphas,
            ps,
            out,
        )
        return out
    return _xi_par_numpy(ws, alphas, ps)


def xi_perp_norms(
    ws: XiWorkspace, alphas, betas, ps, force: str | None = None
) -> np.ndarray:
    """Norms of the orthogonal variation block at a batch of
    (alpha, beta, p) points."""
    alphas = np.ascontiguousarray(alphas, dtype=float).reshape(-1, ws.q)
    betas = np.ascontiguousarray(betas, dtype=float).reshape(-1, ws.r)
    ps = np.ascontiguousarray(ps, dtype=float)
    if _use_numba(ws, force):
        out = np.empty(len(ps))
        _xi_perp_nb(
            ws.kind_code,
            ws.act_code,
            ws.V,
            ws.Vbar,
            ws.AV,
            ws.AVbar,
            ws.Wt,
            ws.WtA,
            ws.b,
            ws.sprime_star,
            ws.p_star,
            alphas,
            betas,
            ps,
            out,
        )
        return out
    return _xi_perp_numpy(ws, alphas, betas, ps)
