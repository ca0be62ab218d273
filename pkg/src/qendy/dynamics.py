"""Trajectories, training sets, and fixed-step integration.

All trajectory data in the package lives on uniform time grids produced by
classical fourth-order Runge-Kutta; there is deliberately no adaptive
stepping, so reruns are bit-reproducible.  Derivative data for training comes
either from evaluating the governing vector field at the samples or from
second-order finite differences along a trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .expr import evaluate_many, parse

__all__ = [
    "IntegrationBlowupError", "VectorField", "Trajectory", "TrainingSet",
    "rk4_step", "rk4_integrate", "sample_trajectory", "sample_uniform",
    "exact_derivatives", "finite_diff_derivatives",
    "save_trajectory", "load_trajectory", "save_training", "load_training",
]


class IntegrationBlowupError(RuntimeError):
    """The integrator produced a non-finite state; carries the step index."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"integration blew up at step {step}")


@dataclass(frozen=True, eq=False)
class VectorField:
    """A vector field on R^n with vectorized evaluation.

    ``fn`` maps a batch of states (m, n) to derivatives (m, n).
    """

    n: int
    fn: object
    name: str = ""

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n,):
            raise ValueError(f"expected state of shape ({self.n},), got {x.shape}")
        return np.asarray(self.fn(x[None, :]), dtype=float)[0]

    def many(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.n:
            raise ValueError(f"expected shape (m, {self.n}), got {points.shape}")
        return np.asarray(self.fn(points), dtype=float)

    @classmethod
    def from_exprs(cls, n: int, exprs, name: str = "") -> "VectorField":
        exprs = tuple(parse(e) if isinstance(e, str) else e for e in exprs)
        if len(exprs) != n:
            raise ValueError(f"{len(exprs)} component expressions for dimension {n}")

        def fn(points):
            return np.column_stack([evaluate_many(e, points) for e in exprs])

        return cls(n, fn, name)


def _check_uniform(times: np.ndarray):
    if times.ndim != 1 or times.size < 1:
        raise ValueError("times must be a non-empty 1-D array")
    if times.size >= 3:
        steps = np.diff(times)
        mean = (times[-1] - times[0]) / (times.size - 1)
        slack = 1e-12 * max(1.0, float(np.abs(times).max()))
        if np.max(np.abs(steps - mean)) > slack:
            raise ValueError("trajectory time grid is not uniform")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States sampled on a uniform time grid: times (m,), states (m, n)."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        _check_uniform(times)
        if states.ndim != 2 or states.shape[0] != times.size:
            raise ValueError(
                f"states shape {states.shape} does not match {times.size} times")
        if not np.all(np.isfinite(states)):
            raise ValueError("trajectory states contain non-finite values")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def dt(self) -> float:
        if self.times.size < 2:
            raise ValueError("single-sample trajectory has no step size")
        return float((self.times[-1] - self.times[0]) / (self.times.size - 1))

    @property
    def n(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class TrainingSet:
    """Paired states and time derivatives, with a provenance tag.

    ``provenance`` is one of "exact", "finite-difference", or "external".
    """

    states: np.ndarray
    derivatives: np.ndarray
    provenance: str = "external"

    def __post_init__(self):
        states = np.asarray(self.states, dtype=float)
        derivatives = np.asarray(self.derivatives, dtype=float)
        if states.ndim != 2 or states.shape != derivatives.shape:
            raise ValueError(
                f"states {states.shape} and derivatives {derivatives.shape} disagree")
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(derivatives))):
            raise ValueError("training data contains non-finite values")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "derivatives", derivatives)

    @property
    def m(self) -> int:
        return self.states.shape[0]

    @property
    def n(self) -> int:
        return self.states.shape[1]


def rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of size dt from state x."""
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_integrate(f, x0, t_end: float, dt: float) -> Trajectory:
    """Integrate from x0 over [0, t_end] with fixed step dt.

    The number of steps is round(t_end / dt); t = 0 is included.  Raises
    :class:`IntegrationBlowupError` at the first non-finite state.
    """
    if dt <= 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    steps = int(round(t_end / dt))
    if steps < 1:
        raise ValueError(f"t_end={t_end} shorter than one step dt={dt}")
    x = np.asarray(x0, dtype=float).copy()
    states = np.empty((steps + 1, x.size))
    states[0] = x
    for k in range(steps):
        x = rk4_step(f, x, dt)
        if not np.all(np.isfinite(x)):
            raise IntegrationBlowupError(k + 1)
        states[k + 1] = x
    return Trajectory(np.arange(steps + 1) * dt, states)


def sample_trajectory(f, x0, t_end: float, num_samples: int,
                      substeps: int = 10) -> Trajectory:
    """``num_samples`` evenly spaced states over [0, t_end], both ends included.

    Integrates with ``substeps`` internal RK4 steps per output sample so that
    the returned states are accurate well beyond the output resolution.
    """
    if num_samples < 2:
        raise ValueError("need at least two samples")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    dt = t_end / ((num_samples - 1) * substeps)
    fine = rk4_integrate(f, x0, t_end, dt)
    out = fine.states[::substeps]
    times = np.arange(num_samples) * (t_end / (num_samples - 1))
    return Trajectory(times, out)


def sample_uniform(box, num_samples: int, seed: int = 0) -> np.ndarray:
    """(m, n) points drawn uniformly from an axis-aligned box [(lo, hi), ...]."""
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    if np.any(hi <= lo):
        raise ValueError("box bounds must satisfy lo < hi on every axis")
    rng = np.random.default_rng(seed)
    return lo + (hi - lo) * rng.random((num_samples, lo.size))


def exact_derivatives(f: VectorField, points) -> TrainingSet:
    """Training set with derivatives f(x) evaluated at each sample."""
    points = np.asarray(points, dtype=float)
    return TrainingSet(points, f.many(points), "exact")


def finite_diff_derivatives(traj: Trajectory) -> TrainingSet:
    """Finite differences along a trajectory.

    Central differences in the interior, forward at the first sample and
    backward at the last; needs at least three samples.
    """
    states = traj.states
    m = states.shape[0]
    if m < 3:
        raise ValueError("finite differences need at least three samples")
    dt = traj.dt
    derivs = np.empty_like(states)
    derivs[1:-1] = (states[2:] - states[:-2]) / (2.0 * dt)
    derivs[0] = (states[1] - states[0]) / dt
    derivs[-1] = (states[-1] - states[-2]) / dt
    return TrainingSet(states, derivs, "finite-difference")


# ---------------------------------------------------------------------------
# CSV formats
#
# Trajectory files:  header "t,x1,...,xn", one row per sample.
# Training files:    header "x1,...,xn,dx1,...,dxn", one row per sample.
# Floats are written with shortest round-trip repr, so save/load is exact.


def _write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def save_trajectory(traj: Trajectory, path):
    header = "t," + ",".join(f"x{j + 1}" for j in range(traj.n))
    _write_rows(path, header, np.column_stack([traj.times, traj.states]))


def load_trajectory(path) -> Trajectory:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return Trajectory(data[:, 0], data[:, 1:])


def save_training(ts: TrainingSet, path):
    n = ts.n
    header = (",".join(f"x{j + 1}" for j in range(n)) + ","
              + ",".join(f"dx{j + 1}" for j in range(n)))
    _write_rows(path, header, np.column_stack([ts.states, ts.derivatives]))


def load_training(path) -> TrainingSet:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] % 2 != 0:
        raise ValueError(f"training file must have an even column count, got {data.shape[1]}")
    n = data.shape[1] // 2
    return TrainingSet(data[:, :n], data[:, n:], "external")
