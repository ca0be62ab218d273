"""Best approximation in weighted inner-product spaces, and the data-rich
limit of the fitting problem.

Discrete point sets and continuous boxes are both reduced to (nodes, weights)
pairs, so Gram assembly and minimum-norm solving are shared.  Continuous
inner products use tensor-product Gauss-Legendre quadrature; with
``normalized=True`` the uniform measure is scaled to a probability measure,
which is the convention under which the empirical Gram matrix divided by the
sample count converges to its limit at the Monte Carlo rate.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dictionary import Dictionary, augment
from .dynamics import VectorField, exact_derivatives
from .expr import Expr, evaluate_many, gradient_many
from .fitting import assemble_gram, build_data_matrices
from .linalg import min_norm_solve

__all__ = [
    "DiscreteInnerProduct", "BoxQuadrature",
    "gram_system", "best_approximation", "approximation_error",
    "limit_gram_system", "ConvergenceStudy", "convergence_study",
]


@dataclass(frozen=True, eq=False)
class DiscreteInnerProduct:
    """<f, g> = sum_k weights[k] f(points[k]) g(points[k])."""

    points: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2:
            raise ValueError(f"points must be (m,) or (m, n), got {points.shape}")
        weights = self.weights
        weights = (np.ones(points.shape[0]) if weights is None
                   else np.asarray(weights, dtype=float))
        if weights.shape != (points.shape[0],):
            raise ValueError(
                f"weights shape {weights.shape} does not match {points.shape[0]} points")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    def nodes_weights(self):
        return self.points, self.weights


@dataclass(frozen=True)
class BoxQuadrature:
    """Uniform measure on an axis-aligned box, integrated by Gauss-Legendre.

    ``box`` is a tuple of (lo, hi) pairs; ``order`` nodes per axis integrate
    polynomials up to degree 2*order - 1 exactly per axis.  Normalization
    divides the weights by the box volume (probability measure).
    """

    box: tuple
    order: int = 20
    normalized: bool = True

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if any(hi <= lo for lo, hi in box):
            raise ValueError("box bounds must satisfy lo < hi on every axis")
        if self.order < 1:
            raise ValueError(f"quadrature order must be >= 1, got {self.order}")
        object.__setattr__(self, "box", box)

    def nodes_weights(self):
        axis_nodes, axis_weights = [], []
        for lo, hi in self.box:
            xi, wq = np.polynomial.legendre.leggauss(self.order)
            axis_nodes.append(0.5 * (hi - lo) * xi + 0.5 * (hi + lo))
            axis_weights.append(0.5 * (hi - lo) * wq)
        grids = np.meshgrid(*axis_nodes, indexing="ij")
        points = np.column_stack([g.ravel() for g in grids])
        weights = np.ones(1)
        for wa in axis_weights:
            weights = np.multiply.outer(weights, wa).ravel()
        if self.normalized:
            volume = float(np.prod([hi - lo for lo, hi in self.box]))
            weights = weights / volume
        return points, weights


def _values_on(f, points) -> np.ndarray:
    if isinstance(f, Expr):
        return evaluate_many(f, points)
    values = np.asarray(f(points), dtype=float)
    if values.shape != (points.shape[0],):
        raise ValueError(
            f"target returned shape {values.shape} for {points.shape[0]} points")
    return values


def gram_system(basis, target, space):
    """Normal equations of best approximation: (matrix (K, K), rhs (K,)).

    ``basis`` entries and ``target`` may be expression trees or callables on
    point batches; for a discrete space the target may also be a plain array
    of samples, one per point.
    """
    points, weights = space.nodes_weights()
    table = np.stack([_values_on(f, points) for f in basis])
    if isinstance(target, np.ndarray):
        target_values = np.asarray(target, dtype=float)
        if target_values.shape != (points.shape[0],):
            raise ValueError(
                f"target samples {target_values.shape} do not match "
                f"{points.shape[0]} points")
    else:
        target_values = _values_on(target, points)
    weighted = table * weights
    return weighted @ table.T, weighted @ target_values


def best_approximation(basis, target, space, rcond=None) -> np.ndarray:
    """Minimum-norm coefficients of the best approximation of target."""
    matrix, rhs = gram_system(basis, target, space)
    return min_norm_solve(matrix, rhs, rcond)


def approximation_error(basis, coefficients, target, space) -> float:
    """Weighted squared error <f - sum c_i phi_i, f - sum c_i phi_i>."""
    points, weights = space.nodes_weights()
    table = np.stack([_values_on(f, points) for f in basis])
    if isinstance(target, np.ndarray):
        target_values = np.asarray(target, dtype=float)
    else:
        target_values = _values_on(target, points)
    residual = target_values - np.asarray(coefficients, dtype=float) @ table
    return float(np.sum(weights * residual ** 2))


def limit_gram_system(d: Dictionary, field: VectorField, space):
    """Data-rich limit of the fitting system under the measure of ``space``.

    Returns (rstar (D, D), sstar (D, N)) over the augmented basis of ``d``
    in its usual order (products, entries, constant); column l of sstar pairs
    every augmented entry with grad phi_l . F.
    """
    points, weights = space.nodes_weights()
    aug = augment(d).exprs()
    table = np.stack([evaluate_many(e, points) for e in aug])
    weighted = table * weights
    rstar = weighted @ table.T
    field_values = field.many(points)
    sstar = np.empty((len(aug), d.size))
    for col, e in enumerate(d.basis):
        lifted_rate = np.sum(gradient_many(e, points) * field_values, axis=1)
        sstar[:, col] = weighted @ lifted_rate
    return rstar, sstar


@dataclass(frozen=True, eq=False)
class ConvergenceStudy:
    """Per-run and aggregated errors of the empirical Gram system.

    ``e_r[i, j]`` is the error for sample size ``sample_sizes[i]``, run j;
    ``e_s[i, j, l]`` the per-output-row right-hand-side errors.
    """

    sample_sizes: tuple
    e_r: np.ndarray
    e_s: np.ndarray

    @property
    def runs(self) -> int:
        return self.e_r.shape[1]

    @property
    def e_r_mean(self) -> np.ndarray:
        return self.e_r.mean(axis=1)

    @property
    def e_s_mean(self) -> np.ndarray:
        return self.e_s.mean(axis=(1, 2))

    def _slope(self, means) -> float:
        return float(np.polyfit(np.log10(self.sample_sizes),
                                np.log10(means), 1)[0])

    @property
    def slope_r(self) -> float:
        return self._slope(self.e_r_mean)

    @property
    def slope_s(self) -> float:
        return self._slope(self.e_s_mean)

    def write_runs_csv(self, path):
        n_rows = self.e_s.shape[2]
        header = "m,run," + "e_R," + ",".join(f"e_s{l + 1}" for l in range(n_rows))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for i, m in enumerate(self.sample_sizes):
                for j in range(self.runs):
                    cells = [str(int(m)), str(j), repr(float(self.e_r[i, j]))]
                    cells += [repr(float(v)) for v in self.e_s[i, j]]
                    fh.write(",".join(cells) + "\n")

    def write_aggregate_csv(self, path):
        with open(path, "w") as fh:
            fh.write("m,e_R_mean,e_s_mean\n")
            for m, er, es in zip(self.sample_sizes, self.e_r_mean, self.e_s_mean):
                fh.write(f"{int(m)},{float(er)!r},{float(es)!r}\n")


def _study_run(d, field, box, m, seed_seq, rstar, sstar, relative):
    rng = np.random.default_rng(seed_seq)
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    points = lo + (hi - lo) * rng.random((m, lo.size))
    dm = build_data_matrices(d, exact_derivatives(field, points))
    gs = assemble_gram(dm, 0.0)
    diff_r = np.abs(gs.matrix / m - rstar)
    diff_s = np.abs(gs.rhs / m - sstar)
    if relative:
        e_r = float(diff_r.mean() / np.abs(rstar).mean())
        e_s = diff_s.mean(axis=0) / np.abs(sstar).mean()
    else:
        e_r = float(diff_r.mean())
        e_s = diff_s.mean(axis=0)
    return e_r, e_s


def convergence_study(d: Dictionary, field: VectorField, box, sample_sizes,
                      runs: int, seed: int = 0, order: int = 20,
                      relative: bool = False, max_workers: int = 1) -> ConvergenceStudy:
    """Monte Carlo convergence of the empirical Gram system to its limit.

    For each sample size, ``runs`` independent uniform draws from ``box`` are
    fitted and compared entrywise (mean absolute difference; with
    ``relative=True`` scaled by the mean magnitude of the limit object)
    against the quadrature limit.  Run seeds are spawned per (size, run)
    index, so results do not depend on execution order and ``max_workers``
    only affects speed.
    """
    box = tuple((float(lo), float(hi)) for lo, hi in box)
    sample_sizes = tuple(int(m) for m in sample_sizes)
    if any(m < 1 for m in sample_sizes):
        raise ValueError("sample sizes must be positive")
    if runs < 1:
        raise ValueError("need at least one run")
    rstar, sstar = limit_gram_system(d, field, BoxQuadrature(box, order))
    e_r = np.empty((len(sample_sizes), runs))
    e_s = np.empty((len(sample_sizes), runs, d.size))
    tasks = [(i, j, np.random.SeedSequence(entropy=seed, spawn_key=(i, j)))
             for i in range(len(sample_sizes)) for j in range(runs)]

    def run_one(task):
        i, j, seq = task
        e_r[i, j], e_s[i, j] = _study_run(
            d, field, box, sample_sizes[i], seq, rstar, sstar, relative)

    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            list(pool.map(run_one, tasks))
    else:
        for task in tasks:
            run_one(task)
    return ConvergenceStudy(sample_sizes, e_r, e_s)
