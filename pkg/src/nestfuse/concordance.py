"""Kendall's tau between rank vectors and the tau -> theta maps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import _accel
from .errors import ContractError

EPS_THETA = 1e-6
THETA_MAX = 50.0

FAMILIES = ("clayton", "gumbel")


@dataclass(frozen=True)
class ThetaEstimate:
    tau: float
    theta_raw: float
    theta_g: float
    family: str


def _tie_pairs(sorted_vals):
    """Number of tied pairs in an already sorted 1-d array."""
    if sorted_vals.size < 2:
        return 0
    bounds = np.flatnonzero(np.diff(sorted_vals) != 0) + 1
    sizes = np.diff(np.concatenate(([0], bounds, [sorted_vals.size])))
    return int(np.sum(sizes * (sizes - 1) // 2))


def tau_numerator(x, y) -> int:
    """Sum of ``sgn((x_i - x_j) * (y_i - y_j))`` over all pairs ``i < j``.

    Knight's algorithm: sort by (x, y), count discordant pairs as strict
    inversions of the sorted y, and correct for ties.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or x.shape != y.shape:
        raise ContractError(f"rank vectors must be 1-d of equal length, got {x.shape} and {y.shape}")
    m = x.size
    if m < 2:
        raise ContractError("kendall tau needs at least 2 observations")
    order = np.lexsort((y, x))
    xs = x[order]
    ys = y[order]
    n0 = m * (m - 1) // 2
    n1 = _tie_pairs(xs)
    n2 = _tie_pairs(np.sort(ys))
    if n1:
        joint = np.flatnonzero((np.diff(xs) != 0) | (np.diff(ys) != 0)) + 1
        sizes = np.diff(np.concatenate(([0], joint, [m])))
        n3 = int(np.sum(sizes * (sizes - 1) // 2))
    else:
        n3 = 0
    discordant = _accel.count_inversions(ys)
    return n0 - n1 - n2 + n3 - 2 * discordant


def kendall_tau_exact(x, y) -> Fraction:
    """Sample Kendall's tau as an exact fraction."""
    m = len(x)
    return Fraction(tau_numerator(x, y), m * (m - 1) // 2)


def kendall_tau(x, y) -> float:
    """Sample Kendall's tau: signed pair count over ``m choose 2``.

    >>> kendall_tau([1, 2, 3], [1, 3, 2])
    0.3333333333333333
    """
    m = len(x)
    return tau_numerator(x, y) / (m * (m - 1) // 2)


def list_tau(x, y) -> Fraction:
    """Exact tau between two rankings of one document universe.

    A universe with a single document is ordered identically by every
    list, so it counts as perfect agreement instead of being undefined.
    """
    if len(x) == 1 and len(y) == 1:
        return Fraction(1)
    return kendall_tau_exact(x, y)


def pairwise_tau(vectors, ids=None) -> dict[tuple, Fraction]:
    """Exact tau for every unordered pair of ``vectors`` (keyed by id pairs)."""
    ids = list(range(len(vectors))) if ids is None else list(ids)
    return {
        (ids[i], ids[j]): list_tau(vectors[i], vectors[j])
        for i, j in combinations(range(len(vectors)), 2)
    }


def _check_family(family):
    if family not in FAMILIES:
        raise ContractError(f"unknown copula family {family!r}; expected one of {FAMILIES}")


def raw_theta(tau, family: str) -> float:
    """Unclamped tau -> theta map: ``2t/(1-t)`` (Clayton), ``1/(1-t)`` (Gumbel).

    ``tau`` may be a :class:`~fractions.Fraction`, in which case the ratio
    is formed exactly and rounded once. ``tau == 1`` maps to ``inf``.
    """
    _check_family(family)
    if tau > 1 or tau < -1:
        raise ContractError(f"tau must lie in [-1, 1], got {tau}")
    if tau == 1:
        return math.inf
    if isinstance(tau, Fraction):
        value = 2 * tau / (1 - tau) if family == "clayton" else 1 / (1 - tau)
        return float(value)
    tau = float(tau)
    if family == "clayton":
        return 2.0 * tau / (1.0 - tau)
    return 1.0 / (1.0 - tau)


def clamp_theta(theta, family: str, eps_theta=EPS_THETA, theta_max=THETA_MAX) -> float:
    lower = eps_theta if family == "clayton" else 1.0
    theta = max(0.0, theta)
    return float(min(max(theta, lower), theta_max))


def theta_from_tau(tau, family: str, eps_theta=EPS_THETA, theta_max=THETA_MAX) -> ThetaEstimate:
    """Dependence parameter for ``family`` implied by Kendall's ``tau``.

    Clamped to ``[eps_theta, theta_max]`` for Clayton and ``[1, theta_max]``
    for Gumbel.
    """
    raw = raw_theta(tau, family)
    return ThetaEstimate(float(tau), raw, clamp_theta(raw, family, eps_theta, theta_max), family)


def tau_from_theta(theta, family: str) -> float:
    """Kendall's tau of the copula with parameter ``theta``."""
    _check_family(family)
    if family == "clayton":
        return theta / (theta + 2.0)
    return (theta - 1.0) / theta
