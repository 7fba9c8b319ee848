import numpy as np
import pytest

from lsbounds import (
    ModelKind,
    NetworkModel,
    TANH,
    build_nod_model,
    graph_from_adjacency,
    singular_point,
)
from lsbounds.kernels import make_workspace, xi_par_norms, xi_perp_norms


def k4_adjacency():
    return np.ones((4, 4)) - np.eye(4)


def cycle_adjacency(n):
    A = np.zeros((n, n))
    for i in range(n):
        A[i, (i + 1) % n] = A[(i + 1) % n, i] = 1.0
    return A


def petersen_adjacency():
    # outer 5-cycle, inner pentagram, spokes
    A = np.zeros((10, 10))
    for i in range(5):
        A[i, (i + 1) % 5] = A[(i + 1) % 5, i] = 1.0
        A[5 + i, 5 + (i + 2) % 5] = A[5 + (i + 2) % 5, 5 + i] = 1.0
        A[i, 5 + i] = A[5 + i, i] = 1.0
    return A


@pytest.fixture(scope="session")
def k4():
    return graph_from_adjacency(k4_adjacency())


@pytest.fixture(scope="session")
def c6():
    return graph_from_adjacency(cycle_adjacency(6))


@pytest.fixture(scope="session")
def petersen():
    return graph_from_adjacency(petersen_adjacency())


@pytest.fixture(scope="session")
def k4_nod(k4):
    return build_nod_model(k4, 1.0, ModelKind.HOPFIELD)


@pytest.fixture(scope="session")
def c6_nod(c6):
    return build_nod_model(c6, 2.0, ModelKind.HOPFIELD)


def _tanh_second_derivative(x):
    t = np.tanh(x)
    return -2.0 * t * (1.0 - t * t)


def locate_fold(model, x_seed, p_seed, tol=1e-13, max_iter=80):
    """Damped Newton on the augmented fold system (state, parameter, kernel
    vector). Test-local helper: the package's bisection search handles
    branches that persist through the singular point, while a fold ends the
    branch, so the desk instance below needs this direct locator."""
    from lsbounds import evaluate, jacobian_p, jacobian_x

    n = model.n
    J0 = jacobian_x(model, x_seed, p_seed)
    v = np.linalg.svd(J0)[2][-1]
    pivot = int(np.argmax(np.abs(v)))
    v = v / v[pivot]
    z = np.concatenate([x_seed, [p_seed], v])

    def residual(z):
        x, p, v = z[:n], z[n], z[n + 1 :]
        return np.concatenate(
            [evaluate(model, x, p), jacobian_x(model, x, p) @ v, [v[pivot] - 1.0]]
        )

    def jac(z):
        x, p, v = z[:n], z[n], z[n + 1 :]
        J = jacobian_x(model, x, p)
        top = np.hstack([J, jacobian_p(model, x, p)[:, None], np.zeros((n, n))])
        # d(Jv)/dx for the Hopfield form: p * A * diag(S''(x) v)
        dJv_dx = z[n] * (model.A * (_tanh_second_derivative(x) * v)[None, :])
        dJv_dp = (model.A * (1.0 - np.tanh(x) ** 2)[None, :]) @ v
        mid = np.hstack([dJv_dx, dJv_dp[:, None], J])
        bottom = np.zeros((1, 2 * n + 1))
        bottom[0, n + 1 + pivot] = 1.0
        return np.vstack([top, mid, bottom])

    for _ in range(max_iter):
        f = residual(z)
        if np.max(np.abs(f)) < tol:
            break
        step = np.linalg.lstsq(jac(z), -f, rcond=None)[0]
        t, merit = 1.0, float(f @ f)
        for _ in range(50):
            if float(residual(z + t * step) @ residual(z + t * step)) < merit:
                break
            t *= 0.5
        z = z + t * step
    else:
        raise RuntimeError("fold locator did not converge")
    return z[:n], float(z[n])


@pytest.fixture(scope="session")
def k4_biased():
    """Hopfield on K4 with bias e1: a singular equilibrium at a fold, with a
    genuinely non-normal Jacobian (range and kernel-complement projectors
    differ)."""
    from lsbounds import solve_equilibrium

    model = NetworkModel(
        kind=ModelKind.HOPFIELD,
        A=k4_adjacency(),
        C=np.ones(4),
        b=np.array([1.0, 0.0, 0.0, 0.0]),
        activation=TANH,
    )
    x = solve_equilibrium(model, 0.62, np.full(4, -1.3), tol=1e-12)
    x = solve_equilibrium(model, 0.58, x, tol=1e-12)
    x_star, p_star = locate_fold(model, x, 0.58)
    return model, singular_point(model, x_star, p_star)


@pytest.fixture(scope="session")
def c4_biased():
    """Hopfield on the 4-cycle with alternating bias: the biased branch
    persists through the singular parameter, so the bisection search
    applies."""
    model = NetworkModel(
        kind=ModelKind.HOPFIELD,
        A=cycle_adjacency(4),
        C=np.ones(4),
        b=0.3 * np.array([1.0, -1.0, 1.0, -1.0]),
        activation=TANH,
    )
    return model


@pytest.fixture(scope="session")
def warm_kernels(k4_nod):
    """Compile the numba kernels once so timed tests measure the work, not
    the JIT."""
    for kind in (ModelKind.HOPFIELD, ModelKind.FIRING_RATE):
        model, sp = build_nod_model(
            graph_from_adjacency(k4_adjacency()), 1.0, kind
        )
        ws = make_workspace(model, sp)
        alphas = np.zeros((2, 1))
        betas = np.zeros((2, 3))
        ps = np.full(2, sp.p_star)
        xi_par_norms(ws, alphas, ps)
        xi_perp_norms(ws, alphas, betas, ps)
