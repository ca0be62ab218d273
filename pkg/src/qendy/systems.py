"""Benchmark vector fields and their companion dictionaries."""

from __future__ import annotations

import numpy as np

from .dictionary import Dictionary
from .dynamics import VectorField

__all__ = [
    "pendulum", "pendulum_dictionary",
    "rational_decay", "rational_dictionary",
    "thomas", "thomas_dictionary", "thomas_extended_dictionary",
    "quartic_decoupled", "quartic_coupled", "quartic_dictionary",
    "mean_field", "identity_dictionary",
    "make_system", "make_dictionary", "companion_dictionary",
]


def pendulum(c: float = 0.1) -> VectorField:
    """Damped pendulum: dx1 = x2, dx2 = -sin(x1) - c*x2."""

    def fn(points):
        x1, x2 = points[:, 0], points[:, 1]
        return np.column_stack([x2, -np.sin(x1) - c * x2])

    return VectorField(2, fn, f"pendulum(c={c})")


def pendulum_dictionary() -> Dictionary:
    return Dictionary.from_strings(2, ["x1", "x2", "sin(x1)", "cos(x1)"])


def rational_decay() -> VectorField:
    """Scalar saturating decay: dx = -x / (1 + x)."""

    def fn(points):
        x = points[:, 0]
        return (-x / (1.0 + x))[:, None]

    return VectorField(1, fn, "rational_decay")


def rational_dictionary() -> Dictionary:
    return Dictionary.from_strings(1, ["x1", "1/(1+x1)", "x1/(1+x1)^2"])


def thomas(alpha: float = 0.2, beta: float = 0.0) -> VectorField:
    """Cyclically symmetric Thomas system with an optional cosine coupling.

    dx1 = sin(x2) - alpha*x1 - beta*x2*cos(x1), and cyclic in (1, 2, 3).
    beta = 0 recovers the classical chaotic system.
    """

    def fn(points):
        x1, x2, x3 = points[:, 0], points[:, 1], points[:, 2]
        return np.column_stack([
            np.sin(x2) - alpha * x1 - beta * x2 * np.cos(x1),
            np.sin(x3) - alpha * x2 - beta * x3 * np.cos(x2),
            np.sin(x1) - alpha * x3 - beta * x1 * np.cos(x3),
        ])

    return VectorField(3, fn, f"thomas(alpha={alpha}, beta={beta})")


def thomas_dictionary() -> Dictionary:
    """States plus sines and cosines of each coordinate (9 entries)."""
    return Dictionary.from_strings(3, [
        "x1", "x2", "x3",
        "sin(x1)", "sin(x2)", "sin(x3)",
        "cos(x1)", "cos(x2)", "cos(x3)",
    ])


def thomas_extended_dictionary() -> Dictionary:
    """The 9-entry Thomas dictionary plus the six mixed products that close
    the cosine-coupled system quadratically (15 entries)."""
    return Dictionary.from_strings(3, [
        "x1", "x2", "x3",
        "sin(x1)", "sin(x2)", "sin(x3)",
        "cos(x1)", "cos(x2)", "cos(x3)",
        "x2*sin(x1)", "x3*sin(x2)", "x1*sin(x3)",
        "x2*cos(x1)", "x3*cos(x2)", "x1*cos(x3)",
    ])


def quartic_decoupled() -> VectorField:
    """dx1 = x1 - x2^4, dx2 = 2*x2; linear in the lift (x1, x2, x2^4)."""

    def fn(points):
        x1, x2 = points[:, 0], points[:, 1]
        return np.column_stack([x1 - x2 ** 4, 2.0 * x2])

    return VectorField(2, fn, "quartic_decoupled")


def quartic_coupled() -> VectorField:
    """dx1 = x1 - x2^4, dx2 = x1 + 2*x2; not closed by (x1, x2, x2^4)."""

    def fn(points):
        x1, x2 = points[:, 0], points[:, 1]
        return np.column_stack([x1 - x2 ** 4, x1 + 2.0 * x2])

    return VectorField(2, fn, "quartic_coupled")


def quartic_dictionary() -> Dictionary:
    return Dictionary.from_strings(2, ["x1", "x2", "x2^4"])


def mean_field(mu: float = 0.1, omega: float = 1.0, coupling: float = -0.1,
               relax: float = 10.0) -> VectorField:
    """Three-dimensional oscillator with an attracting limit cycle.

    The first two coordinates spiral onto a circle of squared radius
    mu / |coupling| while the third relaxes at rate ``relax`` onto the
    paraboloid x3 = x1^2 + x2^2.  The right-hand side is quadratic, so an
    identity-dictionary fit can represent it exactly.
    """

    def fn(points):
        x1, x2, x3 = points[:, 0], points[:, 1], points[:, 2]
        return np.column_stack([
            mu * x1 - omega * x2 + coupling * x1 * x3,
            omega * x1 + mu * x2 + coupling * x2 * x3,
            -relax * (x3 - x1 ** 2 - x2 ** 2),
        ])

    return VectorField(3, fn, "mean_field")


def identity_dictionary(n: int) -> Dictionary:
    """The coordinates themselves: z = x."""
    return Dictionary.from_strings(n, [f"x{j + 1}" for j in range(n)])


# Name-keyed factories for the command line.  Unknown keyword arguments are
# rejected by the underlying constructors.

_SYSTEMS = {
    "pendulum": pendulum,
    "rational": rational_decay,
    "thomas": thomas,
    "quartic": quartic_decoupled,
    "quartic-coupled": quartic_coupled,
    "mean-field": mean_field,
}

_DICTIONARIES = {
    "pendulum": pendulum_dictionary,
    "rational": rational_dictionary,
    "thomas9": thomas_dictionary,
    "thomas15": thomas_extended_dictionary,
    "quartic": quartic_dictionary,
    "identity": identity_dictionary,
}

# Default dictionary for each named system.
_COMPANIONS = {
    "pendulum": "pendulum",
    "rational": "rational",
    "thomas": "thomas9",
    "quartic": "quartic",
    "quartic-coupled": "quartic",
    "mean-field": None,
}


def make_system(name: str, **params) -> VectorField:
    if name not in _SYSTEMS:
        raise ValueError(f"unknown system {name!r}; known: {sorted(_SYSTEMS)}")
    try:
        return _SYSTEMS[name](**params)
    except TypeError as err:
        raise ValueError(f"bad parameters for system {name!r}: {err}") from None


def make_dictionary(name: str, **params) -> Dictionary:
    if name not in _DICTIONARIES:
        raise ValueError(f"unknown dictionary {name!r}; known: {sorted(_DICTIONARIES)}")
    try:
        return _DICTIONARIES[name](**params)
    except TypeError as err:
        raise ValueError(f"bad parameters for dictionary {name!r}: {err}") from None


def companion_dictionary(system_name: str) -> Dictionary:
    """The default dictionary paired with a named system."""
    key = _COMPANIONS.get(system_name)
    if key is None:
        raise ValueError(f"system {system_name!r} has no default dictionary")
    return _DICTIONARIES[key]()
