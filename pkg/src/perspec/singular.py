"""Integrating factor and endpoint seeds.

The weight p satisfies p'/p = f'/f + 1/(eps*f).  Because 1/f has simple
poles at 0 and pi (residues pi/2 by the slope normalization), the
integral of 1/f is split as

    1/f(s) = pi/(2s) + pi/(2(pi-s)) + rb(s)

with rb bounded on (0, pi).  The pole parts integrate to logarithms and
produce the endpoint power laws; the remainder integral

    RB(x) = int_0^x rb(s) ds

is computed once per model by composite Gauss panels and stored as a
piecewise-cubic table.  In the gauge p(x)/x^(1+sigma) -> 1 at the origin
(sigma = c/eps):

    log p(x)     = log f(x) + log(p/f)(x)
    log(p/f)(x)  = sigma*(log x - log(pi-x) + log pi) + RB(x)/eps + log(pi/2)

Both endpoint exponents and the coefficient of the pure power at pi then
come out of the same table.  Seeds for the two fundamental solutions are
the first-order truncations of the local expansions at the degenerate
endpoints, expressed in the quasi-derivative state (u, p*u').
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline, PPoly

from .errors import DomainError, SolverError, ValidationError
from .profiles import CoefficientProfile, OperatorModel, eval_f

PI = math.pi
LOG_PI = math.log(PI)
LOG_HALF_PI = math.log(PI / 2.0)

_RB_PANELS = 2048
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True, eq=False)
class IntegratingFactor:
    """Per-model table behind compute_log_p and friends."""

    model: OperatorModel
    origin_exponent: float          # 1 + sigma
    pi_exponent: float              # 1 - sigma
    rb: PPoly                       # RB(x) on [0, pi]
    rb_at_pi: float

    @property
    def rb_breaks(self) -> np.ndarray:
        return self.rb.x

    @property
    def rb_coefs(self) -> np.ndarray:
        return self.rb.c

    def regular_log_part(self, x):
        """log p(x) - log f(x) - sigma*log(x): the origin-side regular split."""
        sigma = self.model.sigma
        return (sigma * (LOG_PI - np.log(PI - np.asarray(x, float)))
                + self.rb(x) / self.model.epsilon + LOG_HALF_PI)


def _remainder(profile: CoefficientProfile, s: np.ndarray) -> np.ndarray:
    f = np.asarray(eval_f(profile, s))
    return 1.0 / f - PI / (2.0 * s) - PI / (2.0 * (PI - s))


def _build(model: OperatorModel) -> IntegratingFactor:
    profile = model.profile
    edges = np.linspace(0.0, PI, _RB_PANELS + 1)
    extra = list(profile.kinks)
    if profile.table_x is not None:
        extra.extend(profile.table_x[1:-1])
    if extra:
        extra = np.unique(np.asarray(extra, float))
        # drop uniform edges that would crowd an inserted point
        near = np.min(np.abs(edges[:, None] - extra[None, :]), axis=1)
        keep = (near > 1e-9) | (edges == 0.0) | (edges == PI)
        edges = np.unique(np.concatenate([edges[keep], extra]))

    a = edges[:-1]
    h = np.diff(edges)
    nodes = a[:, None] + np.outer(h, (_GAUSS_NODES + 1.0) / 2.0)
    vals = _remainder(profile, nodes.ravel()).reshape(nodes.shape)
    panel = (vals @ _GAUSS_WEIGHTS) * (h / 2.0)
    rb_vals = np.concatenate([[0.0], np.cumsum(panel)])

    # spline each smooth segment separately so kinks stay kinks
    joints = np.unique(np.concatenate([[0.0, PI], np.asarray(profile.kinks, float)])) \
        if profile.kinks else np.array([0.0, PI])
    breaks_parts, coef_parts = [], []
    for lo, hi in zip(joints[:-1], joints[1:]):
        sel = (edges >= lo - 1e-15) & (edges <= hi + 1e-15)
        spl = CubicSpline(edges[sel], rb_vals[sel])
        breaks_parts.append(spl.x[:-1])
        coef_parts.append(spl.c)
    breaks = np.concatenate(breaks_parts + [[PI]])
    coefs = np.concatenate(coef_parts, axis=1)
    rb = PPoly(coefs, breaks, extrapolate=False)

    sigma = model.sigma
    return IntegratingFactor(model=model, origin_exponent=1.0 + sigma,
                             pi_exponent=1.0 - sigma, rb=rb,
                             rb_at_pi=float(rb_vals[-1]))


_CACHE: "weakref.WeakKeyDictionary[OperatorModel, IntegratingFactor]" = weakref.WeakKeyDictionary()


def integrating_factor(model: OperatorModel) -> IntegratingFactor:
    fac = _CACHE.get(model)
    if fac is None:
        fac = _build(model)
        _CACHE[model] = fac
    return fac


def _interior(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0) or np.any(x >= PI):
        raise DomainError("x must lie strictly inside (0, pi)")
    return x


def compute_log_p_over_f(model: OperatorModel, x):
    """log of p/f at x in (0, pi)."""
    x = _interior(x)
    fac = integrating_factor(model)
    sigma = model.sigma
    out = (sigma * (np.log(x) - np.log(PI - x) + LOG_PI)
           + fac.rb(x) / model.epsilon + LOG_HALF_PI)
    return out if np.ndim(out) else float(out)


def compute_log_p(model: OperatorModel, x):
    """log p(x) in the gauge p(x)/x^(1+sigma) -> 1 at the origin."""
    x = _interior(x)
    out = np.log(np.asarray(eval_f(model.profile, x))) + compute_log_p_over_f(model, x)
    return out if np.ndim(out) else float(out)


def compute_p_over_f(model: OperatorModel, x):
    out = np.exp(compute_log_p_over_f(model, x))
    return out if np.ndim(out) else float(out)


def log_pf_coefficient_at_pi(model: OperatorModel) -> float:
    """log K with p/f ~ K*(pi-x)^(-sigma) at pi (K = (pi/2)*lim p/(pi-x)^(1-sigma))."""
    fac = integrating_factor(model)
    return 2.0 * model.sigma * LOG_PI + fac.rb_at_pi / model.epsilon + LOG_HALF_PI


def default_cutoff(lam) -> float:
    """The lambda-aware seed cutoff; local series error grows with |lam|."""
    return 1e-4 / math.sqrt(1.0 + abs(lam))


def indicial_series_coefficients(model: OperatorModel, lam):
    """First-order coefficients of the local expansions at both endpoints.

    Local model at either endpoint (d = distance to the endpoint):
    regular branch 1 + alpha1*d with alpha1 = -i*lam*sigma/(1 - sigma);
    power branch d^(+-sigma) * (1 + a1*d) with a1 = -i*lam*sigma/(1 + sigma).
    The resonant case sigma = 1 (eps = pi/2) makes the two exponents at pi
    collide and is refused.
    """
    sigma = model.sigma
    if abs(sigma - 1.0) < 1e-3:
        raise SolverError("eps too close to pi/2: coincident endpoint exponents "
                          "(resonant local expansion) are not supported")
    k = 1j * lam * sigma
    return -k / (1.0 + sigma), -k / (1.0 - sigma)


@dataclass(frozen=True)
class EndpointSeed:
    """Initial data for shooting, taken at distance ``cutoff`` from an endpoint."""

    endpoint: str                 # origin | plus-pi | minus-pi
    branch: str                   # regular | singular
    cutoff: float
    value: complex
    quasi_derivative: complex     # p*u' at the cutoff point


def _check_cutoff(model: OperatorModel, delta: float, need_power: bool):
    if not 0.0 < delta <= 0.1:
        raise ValidationError(f"cutoff delta must lie in (0, 0.1], got {delta}")
    if need_power and model.sigma * math.log(1.0 / delta) > 600.0:
        raise SolverError("delta^sigma underflows; increase delta or epsilon")


def seed_regular_origin(model: OperatorModel, lam, delta: float) -> EndpointSeed:
    """Seed of the solution normalized to 1 at the origin.

    value = 1 + a1*delta; quasi-derivative = the once-integrated local
    model -i*lam/eps * int_0^delta (p/f), which is a1*delta^(1+sigma) in
    this gauge.  Truncation error is O(delta^2) in the value.
    """
    _check_cutoff(model, delta, need_power=False)
    sigma = model.sigma
    a1, _ = indicial_series_coefficients(model, lam)
    value = 1.0 + a1 * delta
    qd = a1 * delta ** (1.0 + sigma)
    return EndpointSeed(endpoint="origin", branch="regular", cutoff=delta,
                        value=value, quasi_derivative=qd)


def seed_vanishing_at_pi(model: OperatorModel, lam, delta: float) -> EndpointSeed:
    """Seed of the branch vanishing like (pi - x)^sigma at pi, pre-normalization.

    The quasi-derivative is p(pi-delta) times the derivative of the local
    branch; to leading order it is the constant -sigma * K with
    p ~ K*(pi-x)^(1-sigma).
    """
    _check_cutoff(model, delta, need_power=True)
    sigma = model.sigma
    a1, _ = indicial_series_coefficients(model, lam)
    value = delta ** sigma * (1.0 + a1 * delta)
    p_near = math.exp(compute_log_p(model, PI - delta))
    qd = -(p_near / delta ** (1.0 - sigma)) * (sigma + (1.0 + sigma) * a1 * delta)
    return EndpointSeed(endpoint="plus-pi", branch="singular", cutoff=delta,
                        value=value, quasi_derivative=qd)
