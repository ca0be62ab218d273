"""Least-squares identification of quadratic embeddings.

Given lifted data Z1 (states), Z2 (columnwise Kronecker squares), and Zdot
(lifted time derivatives), the coefficients minimize

    || Zdot - A Z2 - B Z1 - C 1^T ||_F^2  +  lam * ||A||_F^2.

The problem decouples over the N output rows: every row solves the same
symmetric system ``M v = s_row`` whose matrix is the Gram matrix of the
stacked features [Z2; Z1; 1] (plus lam on the leading N^2 diagonal entries),
so one factorization serves all rows.  M is typically rank-deficient
(duplicate product pairs at least); solutions are minimum-norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dictionary import (
    Dictionary, feature_matrix, feature_time_derivatives, full_state_matrix,
)
from .dynamics import TrainingSet
from .linalg import SymmetricPinvSolver
from .model import QuadraticModel, kron_squared_cols

__all__ = [
    "DataMatrices", "GramSystem",
    "build_data_matrices", "assemble_gram", "solve_row", "fit",
    "loss", "gradient_norms", "stationarity_gap",
]


@dataclass(frozen=True, eq=False)
class DataMatrices:
    """Lifted training data: z1 (N, m), z2 (N^2, m), zdot (N, m)."""

    z1: np.ndarray
    z2: np.ndarray
    zdot: np.ndarray

    def __post_init__(self):
        n, m = self.z1.shape
        if self.z2.shape != (n * n, m) or self.zdot.shape != (n, m):
            raise ValueError(
                f"inconsistent shapes: z1 {self.z1.shape}, z2 {self.z2.shape}, "
                f"zdot {self.zdot.shape}")

    @property
    def basis_size(self) -> int:
        return self.z1.shape[0]

    @property
    def sample_count(self) -> int:
        return self.z1.shape[1]


def build_data_matrices(d: Dictionary, ts: TrainingSet) -> DataMatrices:
    """Lift a training set through the dictionary."""
    if ts.n != d.state_dim:
        raise ValueError(
            f"training data has dimension {ts.n}, dictionary expects {d.state_dim}")
    z1 = feature_matrix(d, ts.states)
    z2 = kron_squared_cols(z1)
    zdot = feature_time_derivatives(d, ts.states, ts.derivatives)
    return DataMatrices(z1, z2, zdot)


@dataclass(frozen=True, eq=False)
class GramSystem:
    """The shared normal-equation system: matrix (D, D), rhs (D, N).

    D = N^2 + N + 1.  Block order of the rows/columns is products, then
    dictionary entries, then the constant; ``rhs[:, r]`` is the right-hand
    side for output row r.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    lam: float
    sample_count: int
    basis_size: int


def assemble_gram(dm: DataMatrices, lam: float = 0.0) -> GramSystem:
    """Build the shared system; lam shifts only the product-block diagonal."""
    if lam < 0.0:
        raise ValueError(f"regularization must be >= 0, got {lam}")
    n, m = dm.basis_size, dm.sample_count
    stacked = np.vstack([dm.z2, dm.z1, np.ones((1, m))])
    matrix = stacked @ stacked.T
    if lam > 0.0:
        idx = np.arange(n * n)
        matrix[idx, idx] += lam
    rhs = stacked @ dm.zdot.T
    return GramSystem(matrix, rhs, float(lam), m, n)


def solve_row(gs: GramSystem, row: int, rcond=None) -> np.ndarray:
    """Minimum-norm coefficient vector for one output row (0-based).

    Layout of the result: N^2 quadratic coefficients, N linear, 1 constant.
    """
    if not 0 <= row < gs.basis_size:
        raise ValueError(f"row must be in [0, {gs.basis_size}), got {row}")
    return SymmetricPinvSolver(gs.matrix, rcond).solve(gs.rhs[:, row])


def fit(d: Dictionary, ts: TrainingSet, *, lam: float = 0.0,
        force_c_zero: bool = False, rcond=None, g=None) -> QuadraticModel:
    """Fit a quadratic embedding model to a training set.

    ``force_c_zero`` removes the constant feature from the regression (its
    row and column are deleted before solving), which cuts down redundant
    representations when the dictionary already spans constants.  ``g``
    overrides the state-recovery matrix; by default the coordinates must
    appear in the dictionary.  ``rcond`` overrides the pseudoinverse cutoff.
    """
    dm = build_data_matrices(d, ts)
    gs = assemble_gram(dm, lam)
    matrix, rhs = gs.matrix, gs.rhs
    if force_c_zero:
        matrix = matrix[:-1, :-1]
        rhs = rhs[:-1, :]
    solver = SymmetricPinvSolver(matrix, rcond)
    coeffs = solver.solve(rhs)
    n = d.size
    a = coeffs[:n * n, :].T
    b = coeffs[n * n:n * n + n, :].T
    c = np.zeros(n) if force_c_zero else coeffs[-1, :].copy()
    metadata = {
        "m": ts.m,
        "lambda": float(lam),
        "provenance": ts.provenance,
        "force_c_zero": bool(force_c_zero),
    }
    return QuadraticModel(a, b, c, full_state_matrix(d, g), d, metadata)


def loss(model: QuadraticModel, dm: DataMatrices, lam: float = 0.0):
    """(residual, residual + lam * ||A||_F^2) for a model on lifted data."""
    residual_matrix = (dm.zdot - model.a @ dm.z2 - model.b @ dm.z1
                       - model.c[:, None])
    residual = float(np.sum(residual_matrix ** 2))
    return residual, residual + float(lam) * float(np.sum(model.a ** 2))


def gradient_norms(model: QuadraticModel, dm: DataMatrices, lam: float = 0.0):
    """Max-abs entries of the loss gradients w.r.t. (A, B, C).

    Computed directly from the data matrices (not via the assembled Gram
    system), so this doubles as an independent stationarity check:

        dL/dA = 2 A Z2 Z2^T - 2 Zdot Z2^T + 2 B Z1 Z2^T + 2 C 1^T Z2^T + 2 lam A
        dL/dB = 2 B Z1 Z1^T - 2 Zdot Z1^T + 2 A Z2 Z1^T + 2 C 1^T Z1^T
        dL/dC = 2 m C - 2 Zdot 1 + 2 A Z2 1 + 2 B Z1 1
    """
    z1, z2, zdot = dm.z1, dm.z2, dm.zdot
    m = dm.sample_count
    ones = np.ones(m)
    c_col = model.c[:, None]
    grad_a = 2.0 * (model.a @ z2 @ z2.T - zdot @ z2.T + model.b @ z1 @ z2.T
                    + c_col @ (ones @ z2.T)[None, :] + lam * model.a)
    grad_b = 2.0 * (model.b @ z1 @ z1.T - zdot @ z1.T + model.a @ z2 @ z1.T
                    + c_col @ (ones @ z1.T)[None, :])
    grad_c = 2.0 * (m * model.c - zdot @ ones + model.a @ (z2 @ ones)
                    + model.b @ (z1 @ ones))
    return (float(np.abs(grad_a).max()), float(np.abs(grad_b).max()),
            float(np.abs(grad_c).max()))


def stationarity_gap(model: QuadraticModel, dm: DataMatrices,
                     lam: float = 0.0) -> float:
    """Largest loss-gradient entry relative to the scale of the Gram system.

    Near zero for any unconstrained minimizer.  For models fitted with
    ``force_c_zero`` the constant-coefficient gradient is excluded (it is a
    constraint, not a free direction).
    """
    grad_a, grad_b, grad_c = gradient_norms(model, dm, lam)
    if model.metadata.get("force_c_zero"):
        worst = max(grad_a, grad_b)
    else:
        worst = max(grad_a, grad_b, grad_c)
    gs = assemble_gram(dm, lam)
    scale = float(np.linalg.norm(gs.matrix)) + float(np.linalg.norm(gs.rhs))
    return worst / max(scale, 1.0)
