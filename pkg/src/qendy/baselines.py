"""Baseline identification methods on the same dictionaries: SINDy and gEDMD.

SINDy regresses the state derivatives directly on the dictionary,
``Xdot ~= Xi Phi``, with an optional single hard-threshold-and-refit pass.
gEDMD regresses the lifted derivatives on the dictionary,
``Phi_dot ~= Theta Phi``; Theta^T then represents the generator of the
dynamics on the span of the dictionary, so its left action on coefficient
vectors yields eigenfunctions.  Both solvers reuse the shared minimum-norm
normal-equation policy.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .dictionary import (
    Dictionary, dictionary_from_json, dictionary_to_json, feature_map,
    feature_matrix, feature_time_derivatives,
)
from .dynamics import TrainingSet
from .linalg import SymmetricPinvSolver

__all__ = [
    "SindyModel", "GedmdModel", "GeneratorEigenfunction",
    "sindy_fit", "sindy_rhs", "sindy_rhs_many",
    "gedmd_fit", "gedmd_rhs_many", "koopman_eigenfunctions",
    "sindy_to_json", "sindy_from_json", "gedmd_to_json", "gedmd_from_json",
]


@dataclass(frozen=True, eq=False)
class SindyModel:
    """Coefficients xi (n, N) with dx ~= xi phi(x)."""

    xi: np.ndarray
    dictionary: Dictionary

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        want = (self.dictionary.state_dim, self.dictionary.size)
        if xi.shape != want:
            raise ValueError(f"xi must have shape {want}, got {xi.shape}")
        object.__setattr__(self, "xi", xi)


def sindy_fit(d: Dictionary, ts: TrainingSet, threshold: float = 0.0,
              rcond=None) -> SindyModel:
    """Row-wise minimum-norm regression of derivatives on the dictionary.

    With ``threshold > 0`` a single pass zeroes coefficients below the
    threshold and refits each row on its surviving columns.
    """
    if ts.n != d.state_dim:
        raise ValueError(
            f"training data has dimension {ts.n}, dictionary expects {d.state_dim}")
    phi = feature_matrix(d, ts.states)
    gram = phi @ phi.T
    rhs = phi @ ts.derivatives
    solver = SymmetricPinvSolver(gram, rcond)
    xi = solver.solve(rhs).T
    if threshold > 0.0:
        for r in range(xi.shape[0]):
            keep = np.abs(xi[r]) >= threshold
            xi[r, ~keep] = 0.0
            if np.any(keep):
                sub = phi[keep, :]
                xi[r, keep] = SymmetricPinvSolver(sub @ sub.T, rcond).solve(
                    sub @ ts.derivatives[:, r])
    return SindyModel(xi, d)


def sindy_rhs(model: SindyModel, x) -> np.ndarray:
    """Identified right-hand side at one point: xi phi(x)."""
    return model.xi @ feature_map(model.dictionary, np.asarray(x, dtype=float))


def sindy_rhs_many(model: SindyModel, points) -> np.ndarray:
    """Identified right-hand side at each row of ``points``; (m, n) out."""
    return (model.xi @ feature_matrix(model.dictionary, points)).T


@dataclass(frozen=True, eq=False)
class GedmdModel:
    """Coefficients theta (N, N) with d/dt phi(x) ~= theta phi(x)."""

    theta: np.ndarray
    dictionary: Dictionary

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        size = self.dictionary.size
        if theta.shape != (size, size):
            raise ValueError(f"theta must have shape ({size}, {size}), got {theta.shape}")
        object.__setattr__(self, "theta", theta)


def gedmd_fit(d: Dictionary, ts: TrainingSet, rcond=None) -> GedmdModel:
    """Minimum-norm regression of the lifted derivatives on the dictionary."""
    if ts.n != d.state_dim:
        raise ValueError(
            f"training data has dimension {ts.n}, dictionary expects {d.state_dim}")
    phi = feature_matrix(d, ts.states)
    phi_dot = feature_time_derivatives(d, ts.states, ts.derivatives)
    solver = SymmetricPinvSolver(phi @ phi.T, rcond)
    theta = solver.solve(phi @ phi_dot.T).T
    return GedmdModel(theta, d)


def gedmd_rhs_many(model: GedmdModel, g, points) -> np.ndarray:
    """State-space right-hand side G theta phi(x) at each row of ``points``."""
    g = np.asarray(g, dtype=float)
    return (g @ model.theta @ feature_matrix(model.dictionary, points)).T


@dataclass(frozen=True, eq=False)
class GeneratorEigenfunction:
    """An eigenpair of theta^T: the function x -> coefficients . phi(x)."""

    eigenvalue: complex
    coefficients: np.ndarray
    dictionary: Dictionary

    def __call__(self, x) -> complex:
        return complex(self.coefficients @ feature_map(self.dictionary,
                                                       np.asarray(x, dtype=float)))

    def evaluate_many(self, points) -> np.ndarray:
        return feature_matrix(self.dictionary, points).T @ self.coefficients


def koopman_eigenfunctions(model: GedmdModel):
    """Eigenfunctions of the identified generator, one per eigenvalue.

    Coefficient vectors v solve theta^T v = eigenvalue * v, are normalized to
    unit length, and are phased so the largest-magnitude entry is positive
    real.  Sorted by (real, imag) of the eigenvalue.
    """
    values, vectors = np.linalg.eig(model.theta.T)
    order = np.lexsort((values.imag, values.real))
    out = []
    for idx in order:
        v = vectors[:, idx]
        v = v / np.linalg.norm(v)
        pivot = v[np.argmax(np.abs(v))]
        v = v * (np.conj(pivot) / np.abs(pivot))
        out.append(GeneratorEigenfunction(complex(values[idx]), v, model.dictionary))
    return out


# ---------------------------------------------------------------------------
# serialization


def sindy_to_json(model: SindyModel) -> dict:
    return {
        "state_dim": int(model.dictionary.state_dim),
        "dictionary": dictionary_to_json(model.dictionary),
        "Xi": model.xi.tolist(),
    }


def sindy_from_json(obj: dict) -> SindyModel:
    d, _ = dictionary_from_json(obj["dictionary"])
    return SindyModel(np.asarray(obj["Xi"], dtype=float), d)


def gedmd_to_json(model: GedmdModel) -> dict:
    return {
        "state_dim": int(model.dictionary.state_dim),
        "dictionary": dictionary_to_json(model.dictionary),
        "Theta": model.theta.tolist(),
    }


def gedmd_from_json(obj: dict) -> GedmdModel:
    d, _ = dictionary_from_json(obj["dictionary"])
    return GedmdModel(np.asarray(obj["Theta"], dtype=float), d)
