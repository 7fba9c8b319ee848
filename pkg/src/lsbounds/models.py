"""Network model definitions and their analytic derivatives.

Two model families share the same data (coupling matrix A, positive decay
vector C, bias b, elementwise activation S):

* Hopfield form:     dx/dt = -C x + p A S(x) + b
* firing-rate form:  dx/dt = -C x + S(p A x + b)

with a scalar gain parameter p. Models are immutable after construction
and all operations are pure, so concurrent use is safe.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import InputError
from .spectral import SingularDecomposition, decompose_singular

__all__ = [
    "ModelKind",
    "Activation",
    "TANH",
    "LOGISTIC",
    "ACTIVATIONS",
    "NetworkModel",
    "SingularPoint",
    "evaluate",
    "jacobian_x",
    "jacobian_p",
    "gamma",
    "singular_point",
    "model_to_dict",
    "model_from_dict",
    "model_hash",
]


class ModelKind(str, Enum):
    HOPFIELD = "hopfield"
    FIRING_RATE = "firing_rate"


@dataclass(frozen=True)
class Activation:
    """Elementwise activation given by a value map and its derivative.

    Both callables must accept numpy arrays and apply elementwise. Only
    first derivatives are ever needed.
    """

    label: str
    value: Callable
    derivative: Callable


def _tanh_deriv(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _logistic(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def _logistic_deriv(z):
    s = _logistic(z)
    return s * (1.0 - s)


TANH = Activation("tanh", np.tanh, _tanh_deriv)
LOGISTIC = Activation("logistic", _logistic, _logistic_deriv)
ACTIVATIONS = {a.label: a for a in (TANH, LOGISTIC)}


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Immutable parametrized network vector field.

    ``C`` is stored as a vector (the diagonal of the decay matrix) and must
    be strictly positive. ``A`` may carry signed weights.
    """

    kind: ModelKind
    A: np.ndarray
    C: np.ndarray
    b: np.ndarray
    activation: Activation

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InputError(f"A must be square, got shape {A.shape}")
        n = A.shape[0]
        if C.shape != (n,) or b.shape != (n,):
            raise InputError(
                f"C and b must have length {n}, got {C.shape} and {b.shape}"
            )
        if not np.all(C > 0):
            raise InputError("all entries of C must be positive")
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]


def _check_state(model: NetworkModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.n,):
        raise InputError(f"state must have length {model.n}, got shape {x.shape}")
    return x


def evaluate(model: NetworkModel, x, p: float) -> np.ndarray:
    """Vector field value at state x and gain p."""
    x = _check_state(model, x)
    S = model.activation.value
    if model.kind is ModelKind.HOPFIELD:
        return -model.C * x + p * (model.A @ S(x)) + model.b
    return -model.C * x + S(p * (model.A @ x) + model.b)


def jacobian_x(model: NetworkModel, x, p: float) -> np.ndarray:
    """Analytic state Jacobian.

    Hopfield form: -diag(C) + p A diag(S'(x)).
    Firing-rate form: -diag(C) + p diag(S'(pAx + b)) A.
    """
    x = _check_state(model, x)
    Sp = model.activation.derivative
    if model.kind is ModelKind.HOPFIELD:
        return -np.diag(model.C) + p * (model.A * Sp(x)[None, :])
    z = p * (model.A @ x) + model.b
    return -np.diag(model.C) + p * (Sp(z)[:, None] * model.A)


def jacobian_p(model: NetworkModel, x, p: float) -> np.ndarray:
    """Analytic derivative of the vector field with respect to the gain.

    Hopfield form: A S(x). Firing-rate form: S'(pAx + b) * (A x).
    """
    x = _check_state(model, x)
    if model.kind is ModelKind.HOPFIELD:
        return model.A @ model.activation.value(x)
    z = p * (model.A @ x) + model.b
    return model.activation.derivative(z) * (model.A @ x)


def gamma(dec: SingularDecomposition, alpha, beta) -> np.ndarray:
    """Assemble a state from kernel coordinates alpha and complement
    coordinates beta: x = V alpha + Vbar beta."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if alpha.shape != (dec.q,):
        raise InputError(f"alpha must have length {dec.q}, got shape {alpha.shape}")
    if beta.shape != (dec.n - dec.q,):
        raise InputError(
            f"beta must have length {dec.n - dec.q}, got shape {beta.shape}"
        )
    return dec.V @ alpha + dec.Vbar @ beta


@dataclass(frozen=True, eq=False)
class SingularPoint:
    """A singular equilibrium with its kernel/range decomposition.

    ``alpha0`` and ``beta0`` are the kernel and complement coordinates of
    the equilibrium state, so gamma(alpha0, beta0) reproduces ``x_star``.
    """

    x_star: np.ndarray
    p_star: float
    decomposition: SingularDecomposition
    alpha0: np.ndarray
    beta0: np.ndarray


def singular_point(
    model: NetworkModel,
    x_star,
    p_star: float,
    rank_tol: float | None = None,
    equilibrium_tol: float = 1e-8,
) -> SingularPoint:
    """Validate an equilibrium and package its singular decomposition.

    Checks the residual of the vector field at (x_star, p_star), builds the
    decomposition of the state Jacobian there, and records the split
    coordinates of the equilibrium.
    """
    x_star = _check_state(model, x_star)
    residual = float(np.max(np.abs(evaluate(model, x_star, p_star))))
    if residual > equilibrium_tol:
        raise InputError(
            f"(x, p) is not an equilibrium: residual {residual:g} exceeds "
            f"tolerance {equilibrium_tol:g}"
        )
    dec = decompose_singular(jacobian_x(model, x_star, p_star), rank_tol)
    return SingularPoint(
        x_star=x_star,
        p_star=float(p_star),
        decomposition=dec,
        alpha0=dec.V.T @ x_star,
        beta0=dec.Vbar.T @ x_star,
    )


def model_to_dict(model: NetworkModel) -> dict:
    """JSON-ready representation: {kind, A (rows), C, b, activation_label}."""
    return {
        "kind": model.kind.value,
        "A": model.A.tolist(),
        "C": model.C.tolist(),
        "b": model.b.tolist(),
        "activation_label": model.activation.label,
    }


def model_from_dict(data: dict, activations: dict | None = None) -> NetworkModel:
    """Inverse of :func:`model_to_dict`.

    Custom activations can be supplied through ``activations``; the default
    catalog covers the shipped labels.
    """
    catalog = ACTIVATIONS if activations is None else {**ACTIVATIONS, **activations}
    try:
        kind = ModelKind(data["kind"])
        label = data["activation_label"]
        A = np.asarray(data["A"], dtype=float)
        C = np.asarray(data["C"], dtype=float)
        b = np.asarray(data["b"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"invalid model object: {exc}") from exc
    if label not in catalog:
        raise InputError(f"unknown activation label {label!r}")
    return NetworkModel(kind=kind, A=A, C=C, b=b, activation=catalog[label])


def model_hash(model: NetworkModel) -> str:
    """Short content hash of a model, for provenance records."""
    payload = json.dumps(model_to_dict(model), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]
