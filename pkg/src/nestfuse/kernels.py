"""Bivariate fusion kernels and the per-document relevance estimate.

Four kernels, all of the form ``outer(inner(u) + inner(v))``:

=========  ==============================================  ==========
name       formula                                         base family
=========  ==============================================  ==========
clayton    (u^-t + v^-t - 1)^(-1/t)                        clayton
gumbel     exp(-((-ln u)^t + (-ln v)^t)^(1/t))             gumbel
pf         (u^-tp + v^-tp - 1)^(-1/tg)                     clayton
el         exp(-((-ln u)^tp + (-ln v)^tp)^(1/tg))          gumbel
=========  ==============================================  ==========

``pf``/``el`` decouple the inner parameter ``tp`` from the outer ``tg``;
with ``tp == tg`` they reduce to the copulas (same code path, so the
reduction is exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import ContractError

EPS_P = 1e-3

KERNELS = ("clayton", "gumbel", "pf", "el")
BASE_FAMILY = {"clayton": "clayton", "gumbel": "gumbel", "pf": "clayton", "el": "gumbel"}
COPULAS = ("clayton", "gumbel")


@dataclass(frozen=True)
class KernelParams:
    theta_g: float
    theta_p: float | np.ndarray


@dataclass(frozen=True)
class RelevanceEstimate:
    query_cov: float
    cons_irs: float
    rel_d: float


def _as_result(x, *inputs):
    if all(np.ndim(a) == 0 for a in inputs):
        return float(x)
    return x


def _check_unit(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (np.all(u > 0) and np.all(u < 1) and np.all(v > 0) and np.all(v < 1)):
        raise ContractError("kernel arguments must lie in the open interval (0, 1)")


def _check_theta(theta, lower, name, strict=False):
    t = np.asarray(theta, dtype=np.float64)
    bad = t <= lower if strict else t < lower
    if not np.all(np.isfinite(t)) or np.any(bad):
        raise ContractError(f"{name} must be finite and {'>' if strict else '>='} {lower}")


def clayton(u, v, theta):
    """Clayton copula ``C(u, v; theta)``."""
    _check_unit(u, v)
    _check_theta(theta, 0.0, "clayton theta", strict=True)
    return _as_result(_accel.power_kernel(u, v, theta, theta), u, v)


def gumbel(u, v, theta):
    """Gumbel copula ``G(u, v; theta)``."""
    _check_unit(u, v)
    _check_theta(theta, 1.0, "gumbel theta")
    return _as_result(_accel.explog_kernel(u, v, theta, theta), u, v)


def f_pf(u, v, params: KernelParams):
    """Power-function pair kernel, Clayton-shaped with separate inner exponent."""
    _check_unit(u, v)
    _check_theta(params.theta_g, 0.0, "theta_g", strict=True)
    _check_theta(params.theta_p, 0.0, "theta_p", strict=True)
    return _as_result(_accel.power_kernel(u, v, params.theta_g, params.theta_p), u, v, params.theta_p)


def f_el(u, v, params: KernelParams):
    """Exponential-logarithmic pair kernel, Gumbel-shaped with separate inner exponent."""
    _check_unit(u, v)
    _check_theta(params.theta_g, 1.0, "theta_g")
    _check_theta(params.theta_p, 0.0, "theta_p", strict=True)
    return _as_result(_accel.explog_kernel(u, v, params.theta_g, params.theta_p), u, v, params.theta_p)


def apply_kernel(kernel: str, u, v, theta_g, theta_p):
    """Unchecked vectorized evaluation used by the fusion loops.

    Accepts scores in ``(0, 1]`` (fused scores can round to 1).
    """
    if BASE_FAMILY[kernel] == "clayton":
        return _accel.power_kernel(u, v, theta_g, theta_p)
    return _accel.explog_kernel(u, v, theta_g, theta_p)


def consistency(u, v):
    """``u*v / (u+v)``: low when a document sits deep or disagrees across lists."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return u * v / (u + v)


def estimate_relevance(u, v, match_count, query_length) -> RelevanceEstimate:
    if query_length < 1:
        raise ContractError("query_length must be at least 1")
    if not 0 <= match_count <= query_length:
        raise ContractError(f"match_count {match_count} outside [0, {query_length}]")
    _check_unit(u, v)
    query_cov = match_count / query_length
    cons = float(consistency(u, v))
    return RelevanceEstimate(query_cov, cons, query_cov + cons)


def modulate_theta(theta_g, rel_d, eps_p=EPS_P) -> KernelParams:
    """``theta_p = min(theta_g, max(eps_p, theta_g * rel_d))``.

    Works elementwise when ``rel_d`` is an array. The upper clamp wins when
    ``theta_g < eps_p`` so ``theta_p <= theta_g`` always holds.
    """
    tp = np.minimum(theta_g, np.maximum(eps_p, theta_g * np.asarray(rel_d, dtype=np.float64)))
    return KernelParams(float(theta_g), float(tp) if np.ndim(tp) == 0 else tp)
