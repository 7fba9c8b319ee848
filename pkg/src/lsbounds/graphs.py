"""Regular graphs and the closed-form consensus bifurcation bound.

For an unbiased tanh consensus model with uniform decay d on a connected
k-regular graph, the consensus pitchfork sits at (x, p) = (0, d/k) and the
certified parallel radius has the closed form

    R_par < d * (k - lambda2) / (k * lambda_prime)

where lambda2 is the second-largest adjacency eigenvalue and lambda_prime
is the largest nontrivial eigenvalue magnitude max(|lambda2|, |lambda_n|).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import (
    AssumptionViolationError,
    EdgeListError,
    GraphGenerationError,
    InputError,
)
from .models import ModelKind, NetworkModel, SingularPoint, TANH, singular_point

__all__ = [
    "Graph",
    "SweepRecord",
    "SWEEP_CSV_HEADER",
    "graph_from_adjacency",
    "load_edge_list",
    "parse_edge_list",
    "generate_random_regular",
    "adjacency_spectrum",
    "nod_bound",
    "build_nod_model",
    "make_sweep_record",
]

MAX_GENERATION_ATTEMPTS = 1000


def _connected(adjacency: np.ndarray) -> bool:
    n = adjacency.shape[0]
    if n == 0:
        return False
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        i = stack.pop()
        for j in np.nonzero(adjacency[i] != 0)[0]:
            if not seen[j]:
                seen[j] = True
                stack.append(int(j))
    return bool(seen.all())


@dataclass(eq=False)
class Graph:
    """Undirected simple graph with a cached adjacency spectrum.

    ``degree`` is set only when the graph is regular. The spectrum is
    computed lazily (descending eigenvalues of the adjacency matrix).
    """

    n: int
    adjacency: np.ndarray
    degree: int | None = None
    attempts: int = 1
    _spectrum: np.ndarray | None = field(default=None, repr=False)

    @property
    def spectrum(self) -> np.ndarray:
        if self._spectrum is None:
            eig = np.linalg.eigvalsh(self.adjacency)
            self._spectrum = np.sort(eig)[::-1]
        return self._spectrum

    @property
    def is_connected(self) -> bool:
        return _connected(self.adjacency)


def graph_from_adjacency(adjacency) -> Graph:
    """Wrap and validate a dense 0/1 adjacency matrix."""
    A = np.asarray(adjacency, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"adjacency must be square, got shape {A.shape}")
    if np.max(np.abs(A - A.T), initial=0.0) > 0:
        raise InputError("adjacency must be symmetric")
    if np.any(np.diag(A) != 0):
        raise InputError("adjacency must have a zero diagonal")
    if not np.all((A == 0) | (A == 1)):
        raise InputError("adjacency entries must be 0 or 1")
    n = A.shape[0]
    degrees = A.sum(axis=1)
    degree = int(degrees[0]) if n and np.all(degrees == degrees[0]) else None
    return Graph(n=n, adjacency=A, degree=degree)


def parse_edge_list(lines, n: int | None = None) -> Graph:
    """Parse 0-indexed "i j [weight]" lines into a graph.

    Blank lines and lines starting with '#' are skipped. Only unit weights
    are accepted here; parse errors name the offending line.
    """
    edges = []
    max_index = -1
    for line_number, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) not in (2, 3):
            raise EdgeListError(
                f"expected 'i j [weight]', got {text!r}", line_number
            )
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise EdgeListError(
                f"vertex indices must be integers, got {text!r}", line_number
            ) from None
        weight = 1.0
        if len(parts) == 3:
            try:
                weight = float(parts[2])
            except ValueError:
                raise EdgeListError(
                    f"weight must be a number, got {parts[2]!r}", line_number
                ) from None
        if i < 0 or j < 0:
            raise EdgeListError("vertex indices must be nonnegative", line_number)
        if i == j:
            raise EdgeListError(f"self-loop on vertex {i}", line_number)
        if weight != 1.0:
            raise EdgeListError("only unit edge weights are supported", line_number)
        edges.append((i, j))
        max_index = max(max_index, i, j)
    size = (max_index + 1) if n is None else n
    if size <= 0:
        raise InputError("edge list is empty")
    A = np.zeros((size, size))
    for i, j in edges:
        A[i, j] = A[j, i] = 1.0
    return graph_from_adjacency(A)


def load_edge_list(path) -> Graph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_edge_list(fh)


def generate_random_regular(n: int, k: int, seed: int) -> Graph:
    """Random connected simple k-regular graph, deterministic for a seed.

    Degree-stub pairing (with resampling of colliding pairs) produces a
    simple regular graph; disconnected outcomes are rejected and retried
    with a derived seed. The number of attempts is recorded on the result.
    """
    if not (0 < k < n):
        raise InputError(f"degree must satisfy 0 < k < n, got k={k}, n={n}")
    if (n * k) % 2 != 0:
        raise InputError(f"n*k must be even, got n={n}, k={k}")
    for attempt in range(1, MAX_GENERATION_ATTEMPTS + 1):
        derived = (int(seed) * 1_000_003 + attempt) & 0x7FFFFFFF
        g = nx.random_regular_graph(k, n, seed=derived)
        A = nx.to_numpy_array(g, nodelist=range(n))
        if _connected(A):
            graph = graph_from_adjacency(A)
            graph.attempts = attempt
            return graph
    raise GraphGenerationError(
        f"no connected {k}-regular graph on {n} vertices after "
        f"{MAX_GENERATION_ATTEMPTS} attempts"
    )


def adjacency_spectrum(g: Graph):
    """(lambda2, lambda_min, lambda_prime) of a connected regular graph.

    Checks the Perron root: the top eigenvalue of a connected k-regular
    graph must equal k.
    """
    if g.degree is None:
        raise InputError("graph is not regular")
    if not g.is_connected:
        raise InputError("graph is not connected")
    eig = g.spectrum
    if abs(eig[0] - g.degree) > 1e-9:
        raise AssumptionViolationError(
            f"top adjacency eigenvalue {eig[0]:.12g} differs from degree {g.degree}"
        )
    lambda2 = float(eig[1])
    lambda_min = float(eig[-1])
    lambda_prime = max(abs(lambda2), abs(lambda_min))
    return lambda2, lambda_min, lambda_prime


def nod_bound(g: Graph, d: float) -> float:
    """Supremal certified parallel radius d*(k - lambda2)/(k*lambda_prime).

    The orthogonal radius is unconstrained (any positive value works). On
    the complete graph K_n this evaluates to d*n/(n-1), which equals n
    exactly when d is chosen equal to the degree k = n-1; see the README
    note on the complete-graph case.
    """
    if d <= 0:
        raise InputError("d must be positive")
    lambda2, _, lambda_prime = adjacency_spectrum(g)
    return d * (g.degree - lambda2) / (g.degree * lambda_prime)


def build_nod_model(g: Graph, d: float, kind: ModelKind | str):
    """Consensus model (uniform decay d, zero bias, tanh) on a regular graph,
    together with its singular point at (0, d/k).

    Raises :class:`AssumptionViolationError` unless the Jacobian kernel at
    the singular point is one-dimensional and spanned by the constant
    vector.
    """
    if d <= 0:
        raise InputError("d must be positive")
    lambda2, _, _ = adjacency_spectrum(g)  # validates regular + connected
    kind = ModelKind(kind)
    n = g.n
    model = NetworkModel(
        kind=kind,
        A=g.adjacency,
        C=np.full(n, float(d)),
        b=np.zeros(n),
        activation=TANH,
    )
    p_star = d / g.degree
    sp = singular_point(model, np.zeros(n), p_star)
    dec = sp.decomposition
    if dec.q != 1:
        raise AssumptionViolationError(
            f"kernel dimension at the consensus point is {dec.q}, expected 1"
        )
    alignment = abs(float(dec.V[:, 0] @ np.ones(n))) / np.sqrt(n)
    if abs(alignment - 1.0) > 1e-8:
        raise AssumptionViolationError(
            "kernel is not spanned by the constant vector"
        )
    return model, sp


@dataclass(frozen=True)
class SweepRecord:
    """One Monte Carlo sample of the closed-form bound on a random graph."""

    n: int
    k: int
    d: float
    seed: int
    lambda2: float
    lambda_min: float
    lambda_prime: float
    r_par_bound: float

    def validate(self):
        expected = self.d * (self.k - self.lambda2) / (self.k * self.lambda_prime)
        if abs(self.r_par_bound - expected) > 1e-12 * max(1.0, abs(expected)):
            raise AssumptionViolationError(
                f"record bound {self.r_par_bound!r} does not match its own "
                f"spectral fields (expected {expected!r})"
            )

    def csv_row(self) -> str:
        return ",".join(
            [
                str(self.n),
                str(self.k),
                repr(self.d),
                str(self.seed),
                repr(self.lambda2),
                repr(self.lambda_min),
                repr(self.lambda_prime),
                repr(self.r_par_bound),
            ]
        )


SWEEP_CSV_HEADER = "n,k,d,seed,lambda2,lambda_min,lambda_prime,r_par_bound"


def make_sweep_record(n: int, k: int, d: float, seed: int) -> SweepRecord:
    """Generate one random regular graph and record its spectrum and bound."""
    g = generate_random_regular(n, k, seed)
    lambda2, lambda_min, lambda_prime = adjacency_spectrum(g)
    record = SweepRecord(
        n=n,
        k=k,
        d=float(d),
        seed=seed,
        lambda2=lambda2,
        lambda_min=lambda_min,
        lambda_prime=lambda_prime,
        r_par_bound=d * (k - lambda2) / (k * lambda_prime),
    )
    record.validate()
    return record
