"""Feature dictionaries: ordered scalar basis functions over a state space.

A dictionary lifts a state ``x`` in R^n to ``z = (phi_1(x), ..., phi_N(x))``.
The quadratically augmented basis appends all pairwise products to the
dictionary: products ``phi_i * phi_j`` first (row-major in the index pair, so
pair (i, j) sits at flat position ``N*i + j``), then the N dictionary entries,
then the constant function.  That ordering matches the columnwise Kronecker
square used by the fitting code, which is checked by tests rather than
assumed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .expr import (
    Const, Expr, Mul, Var, evaluate_many, evaluate_with_gradient_many,
    gradient_many, parse, render, variables,
)

__all__ = [
    "ConfigurationError", "Dictionary", "AugmentedBasis",
    "feature_map", "feature_matrix", "jacobian", "feature_time_derivatives",
    "augment", "full_state_matrix",
    "dictionary_to_json", "dictionary_from_json", "save_dictionary", "load_dictionary",
]


class ConfigurationError(ValueError):
    """Dictionary or projection setup that cannot be used as requested."""


@dataclass(frozen=True)
class Dictionary:
    """An ordered tuple of basis functions over an n-dimensional state."""

    state_dim: int
    basis: tuple
    names: tuple = ()

    def __post_init__(self):
        basis = tuple(self.basis)
        object.__setattr__(self, "basis", basis)
        if self.state_dim < 1:
            raise ConfigurationError(f"state dimension must be >= 1, got {self.state_dim}")
        if not basis:
            raise ConfigurationError("dictionary needs at least one basis function")
        names = tuple(self.names) if self.names else tuple(render(e) for e in basis)
        if len(names) != len(basis):
            raise ConfigurationError(
                f"{len(names)} names for {len(basis)} basis functions")
        object.__setattr__(self, "names", names)
        for i, e in enumerate(basis):
            out = [v for v in variables(e) if v >= self.state_dim]
            if out:
                raise ConfigurationError(
                    f"basis entry {i} ({render(e)}) references x{out[0] + 1} "
                    f"but state dimension is {self.state_dim}")

    @property
    def size(self) -> int:
        return len(self.basis)

    @classmethod
    def from_strings(cls, state_dim: int, texts) -> "Dictionary":
        return cls(state_dim, tuple(parse(t) for t in texts), tuple(texts))


def feature_map(d: Dictionary, x) -> np.ndarray:
    """Lift one point: returns z = phi(x) of shape (N,)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (d.state_dim,):
        raise ValueError(f"expected shape ({d.state_dim},), got {x.shape}")
    return feature_matrix(d, x[None, :])[:, 0]


def feature_matrix(d: Dictionary, points) -> np.ndarray:
    """Lift a batch: column k of the (N, m) result is phi(points[k])."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != d.state_dim:
        raise ValueError(f"expected shape (m, {d.state_dim}), got {points.shape}")
    return np.stack([evaluate_many(e, points) for e in d.basis])


def jacobian(d: Dictionary, x) -> np.ndarray:
    """Jacobian of the lift at one point: row i is grad phi_i(x); shape (N, n)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (d.state_dim,):
        raise ValueError(f"expected shape ({d.state_dim},), got {x.shape}")
    return np.stack([gradient_many(e, x[None, :])[0] for e in d.basis])


def feature_time_derivatives(d: Dictionary, points, derivatives) -> np.ndarray:
    """Chain rule along samples: column k is J(points[k]) @ derivatives[k].

    ``points`` and ``derivatives`` are (m, n); the result is (N, m), the time
    derivative of each lifted coordinate along the sampled motion.
    """
    points = np.asarray(points, dtype=float)
    derivatives = np.asarray(derivatives, dtype=float)
    if points.shape != derivatives.shape:
        raise ValueError(
            f"points {points.shape} and derivatives {derivatives.shape} disagree")
    rows = []
    for e in d.basis:
        _, grads = evaluate_with_gradient_many(e, points)
        rows.append(np.sum(grads * derivatives, axis=1))
    return np.stack(rows)


@dataclass(frozen=True)
class AugmentedBasis:
    """The dictionary extended by all pairwise products and the constant."""

    source: Dictionary

    @property
    def size(self) -> int:
        n = self.source.size
        return n * n + n + 1

    def product_index(self, i: int, j: int) -> int:
        """Flat position of the product phi_i * phi_j (0-based indices)."""
        n = self.source.size
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"product index ({i}, {j}) out of range for size {n}")
        return n * i + j

    def exprs(self) -> tuple:
        """All entries as expression trees, in augmented order."""
        basis = self.source.basis
        products = tuple(Mul(a, b) for a in basis for b in basis)
        return products + basis + (Const(1.0),)

    def as_dictionary(self) -> Dictionary:
        return Dictionary(self.source.state_dim, self.exprs())

    def feature_map(self, x) -> np.ndarray:
        return feature_map(self.as_dictionary(), x)

    def feature_matrix(self, points) -> np.ndarray:
        return feature_matrix(self.as_dictionary(), points)


def augment(d: Dictionary) -> AugmentedBasis:
    """Quadratically augmented basis of ``d`` (size N^2 + N + 1)."""
    return AugmentedBasis(d)


def full_state_matrix(d: Dictionary, override=None, *, domain=None,
                      n_check: int = 100, seed: int = 0,
                      tol: float = 1e-10) -> np.ndarray:
    """The (n, N) matrix G with G phi(x) = x.

    Without ``override``, each coordinate x_j must literally appear as a
    dictionary entry; G then selects those entries.  A supplied ``override``
    is validated on ``n_check`` uniform samples from ``domain`` (a list of
    (lo, hi) pairs, default the unit box) before being returned.
    """
    n, size = d.state_dim, d.size
    if override is not None:
        override = np.asarray(override, dtype=float)
        if override.shape != (n, size):
            raise ConfigurationError(
                f"projection matrix must have shape ({n}, {size}), got {override.shape}")
        if domain is None:
            domain = [(-1.0, 1.0)] * n
        lo = np.array([b[0] for b in domain], dtype=float)
        hi = np.array([b[1] for b in domain], dtype=float)
        rng = np.random.default_rng(seed)
        points = lo + (hi - lo) * rng.random((n_check, n))
        recovered = (override @ feature_matrix(d, points)).T
        worst = np.max(np.abs(recovered - points))
        if not worst < tol:
            raise ConfigurationError(
                f"projection matrix does not recover the state (max error {worst:.3e})")
        return override
    g = np.zeros((n, size))
    for j in range(n):
        for i, e in enumerate(d.basis):
            if e == Var(j):
                g[j, i] = 1.0
                break
        else:
            raise ConfigurationError(
                f"coordinate x{j + 1} is not a dictionary entry; "
                "supply a projection matrix")
    return g


# ---------------------------------------------------------------------------
# serialization


def dictionary_to_json(d: Dictionary, g=None) -> dict:
    obj = {"state_dim": int(d.state_dim), "basis": [render(e) for e in d.basis]}
    if g is not None:
        obj["G"] = np.asarray(g, dtype=float).tolist()
    return obj


def dictionary_from_json(obj: dict):
    """Returns (Dictionary, G-or-None)."""
    try:
        state_dim = int(obj["state_dim"])
        basis = list(obj["basis"])
    except KeyError as missing:
        raise ConfigurationError(f"dictionary JSON lacks key {missing}") from None
    d = Dictionary.from_strings(state_dim, basis)
    g = obj.get("G")
    if g is not None:
        g = np.asarray(g, dtype=float)
        if g.shape != (state_dim, d.size):
            raise ConfigurationError(
                f"G must have shape ({state_dim}, {d.size}), got {g.shape}")
    return d, g


def save_dictionary(d: Dictionary, path, g=None):
    with open(path, "w") as fh:
        json.dump(dictionary_to_json(d, g), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dictionary(path):
    """Returns (Dictionary, G-or-None) from a JSON file."""
    with open(path) as fh:
        return dictionary_from_json(json.load(fh))
