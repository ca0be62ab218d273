"""Minimum-norm solves for the symmetric Gram systems used across the package.

All row-wise regressions here reduce to ``M v = s`` with M symmetric positive
semidefinite and possibly rank-deficient.  One eigendecomposition is shared by
every right-hand side; eigenvalues below ``rcond * max|eigenvalue|`` are
treated as exact zeros, which makes each solution the minimum-norm
least-squares solution.
"""

from __future__ import annotations

import numpy as np

__all__ = ["default_rcond", "SymmetricPinvSolver", "min_norm_solve"]


def default_rcond(dim: int) -> float:
    """Relative eigenvalue cutoff for a dim x dim system: dim * eps * 64."""
    return dim * np.finfo(float).eps * 64.0


class SymmetricPinvSolver:
    """Eigendecomposition-backed pseudoinverse of a symmetric PSD matrix."""

    def __init__(self, matrix, rcond=None):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
        if rcond is None:
            rcond = default_rcond(matrix.shape[0])
        self.rcond = float(rcond)
        self.eigenvalues, self.eigenvectors = np.linalg.eigh(matrix)
        scale = np.abs(self.eigenvalues).max() if self.eigenvalues.size else 0.0
        if scale > 0.0:
            self.kept = np.abs(self.eigenvalues) > self.rcond * scale
        else:
            self.kept = np.zeros_like(self.eigenvalues, dtype=bool)

    @property
    def rank(self) -> int:
        return int(self.kept.sum())

    def solve(self, rhs) -> np.ndarray:
        """Minimum-norm solution(s); rhs may be a vector or a column stack."""
        rhs = np.asarray(rhs, dtype=float)
        coeffs = self.eigenvectors.T @ rhs
        inv = np.zeros_like(self.eigenvalues)
        inv[self.kept] = 1.0 / self.eigenvalues[self.kept]
        if rhs.ndim == 1:
            return self.eigenvectors @ (inv * coeffs)
        return self.eigenvectors @ (inv[:, None] * coeffs)

    def null_component(self, vec) -> np.ndarray:
        """Projection of ``vec`` onto the numerical null space."""
        vec = np.asarray(vec, dtype=float)
        dropped = self.eigenvectors[:, ~self.kept]
        return dropped @ (dropped.T @ vec)


def min_norm_solve(matrix, rhs, rcond=None) -> np.ndarray:
    """One-shot minimum-norm solve of a symmetric PSD system."""
    return SymmetricPinvSolver(matrix, rcond).solve(rhs)
