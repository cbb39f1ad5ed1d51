"""Green kernel assembly and resolvent application.

The kernel splits into three parts built from the two fundamental
solutions and the weight (-i/eps)*(p/f)(s):

* part I    psi(x) phi(s) * weight, supported where s lies between 0 and
            x (same sign, |s| <= |x|).  The support is the orientation-
            consistent half of |x| >= |s|: on it the inner-integral
            orientation sign cancels the odd sign of p/f, leaving the
            positive weight (p/f)(|s|).
* part II   phi(x) psi(s) * weight for x <= s.
* part III  the rank-one periodicity corrector
            phi(x) psi(s) * weight / (phi(pi)/phi(-pi) - 1).

Negative arguments are produced by reflection: phi(x, lam) = phi(-x, -lam)
and psi(x, lam) = -psi(-x, -lam) (the sign keeps the Wronskian equal to 1
on both half-intervals; p is taken even).  Products psi*(p/f) and
phi*(p/f) degenerate at 0 and +-pi as powers that cancel each other, so
all kernel entries are formed in log space and the exact endpoint columns
use the fitted local coefficients.

Quadrature is composite trapezoid on a grid graded quadratically toward
0 and +-pi.  The triangular supports get per-row edge-corrected weights;
these corrections are folded into the stored part arrays so applying the
resolvent stays one weighted matrix-vector product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (EigenvalueProximityError, GridMismatchError,
                     ValidationError)
from .profiles import OperatorModel, eval_f, eval_f_prime
from .shooting import (DEFAULT_CONFIG, SolutionTrace, SolverConfig,
                       extrapolate_endpoint, integrate_phi,
                       integrate_psi_normalized)
from .singular import compute_log_p_over_f, default_cutoff, log_pf_coefficient_at_pi

PI = math.pi


def graded_full_grid(grid_size: int, exponent: float = 2.0):
    """Symmetric grid on [-pi, pi] clustered at 0 and +-pi, with trapezoid weights.

    ``grid_size`` counts intervals across the full period (must be even,
    >= 64); the grid has grid_size + 1 nodes including -pi, 0, pi.
    """
    if grid_size < 64 or grid_size % 2:
        raise ValidationError("grid size must be an even integer >= 64")
    half = grid_size // 2
    t = np.linspace(0.0, 1.0, half + 1)
    q = float(exponent)
    g = t ** q / (t ** q + (1.0 - t) ** q)
    pos = PI * g
    x = np.concatenate([-pos[::-1], pos[1:]])
    w = np.empty_like(x)
    w[1:-1] = (x[2:] - x[:-2]) / 2.0
    w[0] = (x[1] - x[0]) / 2.0
    w[-1] = (x[-1] - x[-2]) / 2.0
    return x, w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples of a forcing or a solution on the kernel grid."""

    nodes: np.ndarray
    values: np.ndarray
    role: str                       # "forcing" | "solution"
    periodic_defect: Optional[float] = None


@dataclass(frozen=True, eq=False)
class KernelGrid:
    """Discretized kernel: three part matrices over a tensor grid."""

    lam: complex
    nodes: np.ndarray               # shared x- and s-grid
    weights: np.ndarray             # trapezoid weights
    part_i: np.ndarray
    part_ii: np.ndarray
    part_iii: np.ndarray
    denominator: complex            # phi(pi)/phi(-pi) - 1
    phi_on_grid: np.ndarray         # v-factor of the rank-one part
    psi_weight_on_grid: np.ndarray  # psi(s)*(-i/eps)*(p/f)(s), endpoint limits filled
    sup_norm: float
    meta: dict

    @property
    def total(self) -> np.ndarray:
        return self.part_i + self.part_ii + self.part_iii


def _values_on(trace: SolutionTrace, nodes: np.ndarray):
    idx = np.searchsorted(trace.grid, nodes)
    got = trace.grid[np.clip(idx, 0, len(trace.grid) - 1)]
    if np.max(np.abs(got - nodes)) > 1e-12:
        raise GridMismatchError("trace does not contain the requested nodes")
    return trace.values[idx], trace.quasi_derivatives[idx]


def _log_polar(z: np.ndarray):
    mag = np.abs(z)
    with np.errstate(divide="ignore"):
        lmag = np.where(mag > 0, np.log(np.where(mag > 0, mag, 1.0)), -np.inf)
    phase = np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 1.0)
    return lmag, phase


def solution_pairs(model: OperatorModel, lam, nodes_pos: np.ndarray,
                   config: SolverConfig = DEFAULT_CONFIG) -> dict:
    """phi/psi traces at lam and -lam forced on the positive interior nodes."""
    out = {}
    for sign in (1, -1):
        lm = lam if sign == 1 else -lam
        phi = integrate_phi(model, lm, config, output_nodes=nodes_pos,
                            record_steps=False)
        psi = integrate_psi_normalized(model, lm, phi, config)
        out[sign] = {
            "phi": phi,
            "psi": psi,
            "phi_end": extrapolate_endpoint(phi, model, "plus-pi"),
            "psi_end": extrapolate_endpoint(psi, model, "plus-pi"),
            "psi_origin": extrapolate_endpoint(psi, model, "origin"),
        }
    return out


def assemble_kernel(model: OperatorModel, lam, grid_size: int,
                    config: SolverConfig = DEFAULT_CONFIG,
                    grading_exponent: float = 2.0) -> KernelGrid:
    """Evaluate all three kernel parts on the graded tensor grid."""
    eps = model.epsilon
    x, w = graded_full_grid(grid_size, grading_exponent)
    n = len(x)
    i0 = n // 2                      # node at 0
    nodes_pos = x[i0 + 1:-1]         # strictly positive interior nodes

    pairs = solution_pairs(model, lam, nodes_pos, config)
    phi_p, wphi_p = _values_on(pairs[1]["phi"], nodes_pos)
    psi_p, wpsi_p = _values_on(pairs[1]["psi"], nodes_pos)
    phi_m, _ = _values_on(pairs[-1]["phi"], nodes_pos)
    psi_m, _ = _values_on(pairs[-1]["psi"], nodes_pos)

    phi_full = np.empty(n, complex)
    psi_full = np.empty(n, complex)             # not meaningful at x = 0
    phi_full[i0 + 1:-1] = phi_p
    psi_full[i0 + 1:-1] = psi_p
    phi_full[1:i0][::-1] = phi_m                # phi(x, lam) = phi(-x, -lam)
    psi_full[1:i0][::-1] = -psi_m               # psi(x, lam) = -psi(-x, -lam)
    phi_full[i0] = 1.0
    psi_full[i0] = np.nan
    phi_full[-1] = pairs[1]["phi_end"].regular_part
    phi_full[0] = pairs[-1]["phi_end"].regular_part
    psi_full[0] = 0.0
    psi_full[-1] = 0.0

    lpf = np.empty(n)                           # log (p/f)(|s|)
    lpf[i0 + 1:-1] = compute_log_p_over_f(model, nodes_pos)
    lpf[1:i0] = lpf[i0 + 1:-1][::-1]
    lpf[i0] = -np.inf
    lpf[0] = lpf[-1] = np.inf
    sgn = np.where(x < 0, -1.0, 1.0)            # sign of signed (p/f)(s)

    ratio = phi_full[-1] / phi_full[0]
    denominator = ratio - 1.0
    if abs(denominator) < 1e-8 * max(1.0, abs(ratio)):
        raise EigenvalueProximityError(
            f"periodicity denominator |phi(pi)/phi(-pi) - 1| = {abs(denominator):.3e} "
            f"is numerically zero: lam = {lam} is an eigenvalue")

    # W2(s) = psi(s,lam) * (-i/eps) * signed (p/f)(s); finite limits at 0, +-pi
    log_cpi = log_pf_coefficient_at_pi(model)   # p/f ~ exp(log_cpi) * d^-sigma at pi
    interior = np.ones(n, bool)
    interior[[0, i0, -1]] = False
    w2 = np.empty(n, complex)
    lpsi, ppsi = _log_polar(np.where(np.isnan(psi_full), 0.0, psi_full))
    w2[interior] = (np.exp(lpsi[interior] + lpf[interior]) * ppsi[interior]
                    * (-1j / eps) * sgn[interior])
    b0_p = pairs[1]["psi_origin"].singular_part
    b0_m = pairs[-1]["psi_origin"].singular_part
    w2[i0] = 0.5 * (b0_p + b0_m) * (PI / 2.0) * (-1j / eps)
    bpi_p = pairs[1]["psi_end"].singular_part
    bpi_m = pairs[-1]["psi_end"].singular_part
    w2[-1] = bpi_p * math.exp(log_cpi) * (-1j / eps)
    w2[0] = bpi_m * math.exp(log_cpi) * (-1j / eps)

    # part I in log space on the same-sign triangle
    lphi, pphi = _log_polar(phi_full)
    mask = (np.abs(x)[:, None] >= np.abs(x)[None, :]) & \
           (sgn[:, None] * sgn[None, :] > 0) & interior[:, None] & interior[None, :]
    mask[:, i0] = False
    with np.errstate(invalid="ignore"):
        logsum = np.where(mask, lpsi[:, None] + lphi[None, :] + lpf[None, :], -np.inf)
        logsum = np.where(np.isnan(logsum), -np.inf, logsum)
    part_i = np.exp(logsum) * np.where(mask, ppsi[:, None] * pphi[None, :], 1.0) * (-1j / eps)

    lower = x[:, None] <= x[None, :]
    part_ii = np.where(lower, phi_full[:, None] * w2[None, :], 0.0)
    part_iii = phi_full[:, None] * w2[None, :] / denominator

    # fold per-row trapezoid edge corrections into the triangular parts
    for i in range(n):
        if i < n - 1:
            part_ii[i, i] *= ((x[i + 1] - x[i]) / 2.0) / w[i]
        else:
            part_ii[i, i] = 0.0
    for i in range(n):
        idx = np.nonzero(mask[i])[0]
        if len(idx) == 0:
            continue
        j0, j1 = idx[0], idx[-1]
        if j0 == j1:
            part_i[i, j0] = 0.0
            continue
        part_i[i, j0] *= ((x[j0 + 1] - x[j0]) / 2.0) / w[j0]
        part_i[i, j1] *= ((x[j1] - x[j1 - 1]) / 2.0) / w[j1]

    # sup after folding: the one-sided diagonal entries then sum to the
    # kernel's diagonal limit instead of double-counting parts I and II
    sup = float(np.max(np.abs(part_i + part_ii + part_iii)))

    meta = {
        "model": model, "grid_size": grid_size,
        "delta_origin": pairs[1]["phi"].delta_origin,
        "delta_pi": pairs[1]["phi"].delta_pi,
        "wronskian_deviation": max(
            pairs[1]["psi"].meta["wronskian"].max_deviation,
            pairs[-1]["psi"].meta["wronskian"].max_deviation),
        "lpf": lpf, "pairs": pairs, "psi_full": psi_full,
        "wphi_pos": wphi_p, "wpsi_pos": wpsi_p,
    }
    return KernelGrid(lam=complex(lam), nodes=x, weights=w, part_i=part_i,
                      part_ii=part_ii, part_iii=part_iii,
                      denominator=complex(denominator), phi_on_grid=phi_full,
                      psi_weight_on_grid=w2, sup_norm=sup, meta=meta)


def apply_resolvent(kernel: KernelGrid, forcing: GridFunction) -> GridFunction:
    """u(x_i) = sum_j G(x_i, s_j) w_j F(s_j), with the periodicity defect attached."""
    if forcing.nodes.shape != kernel.nodes.shape or \
            np.max(np.abs(forcing.nodes - kernel.nodes)) > 1e-12:
        raise GridMismatchError("forcing is not sampled on the kernel grid")
    u = kernel.total @ (kernel.weights * forcing.values)
    defect = float(abs(u[0] - u[-1]))
    return GridFunction(nodes=kernel.nodes, values=u, role="solution",
                        periodic_defect=defect)


def resolvent_residual(model: OperatorModel, lam, u: GridFunction,
                       forcing: GridFunction, collar: Optional[float] = None) -> float:
    """Relative discrete L2 residual of the original equation.

    Applies i*eps*(f u')' + i*u' - lam*u by flux-form finite differences
    on the non-uniform grid and compares with F, excluding a collar of
    width 10*delta (by default) around the degenerate points 0 and +-pi.
    """
    x = u.nodes
    if len(x) < 64:
        raise ValidationError("residual check needs at least 64 grid nodes")
    if forcing.nodes.shape != x.shape or np.max(np.abs(forcing.nodes - x)) > 1e-12:
        raise GridMismatchError("u and F are not on a common grid")
    if collar is None:
        collar = 10.0 * default_cutoff(lam)

    eps = model.epsilon
    uu = u.values
    xm = (x[1:] + x[:-1]) / 2.0
    fm = np.asarray(eval_f(model.profile, xm))
    flux = fm * np.diff(uu) / np.diff(x)               # f u' at midpoints
    lap = np.diff(flux) / ((x[2:] - x[:-2]) / 2.0)     # (f u')' at interior nodes
    du = (uu[2:] - uu[:-2]) / (x[2:] - x[:-2])
    lhs = 1j * eps * lap + 1j * du - lam * uu[1:-1]
    resid = lhs - forcing.values[1:-1]

    xi = x[1:-1]
    keep = (np.abs(xi) > collar) & (np.abs(np.abs(xi) - PI) > collar)
    w = np.empty_like(x)
    w[1:-1] = (x[2:] - x[:-2]) / 2.0
    w[0] = w[-1] = 0.0
    wk = w[1:-1][keep]
    num = float(np.sqrt(np.sum(wk * np.abs(resid[keep]) ** 2)))
    den = float(np.sqrt(np.sum(wk * np.abs(forcing.values[1:-1][keep]) ** 2)))
    return num / max(den, 1e-300)


def bandlimited_forcing(kernel: KernelGrid, seed: int, modes: int = 8) -> GridFunction:
    """Random trigonometric forcing, reproducible from the seed."""
    rng = np.random.default_rng(seed)
    k = np.arange(-modes, modes + 1)
    coef = (rng.standard_normal(len(k)) + 1j * rng.standard_normal(len(k))) / (1.0 + np.abs(k))
    vals = np.exp(1j * np.outer(kernel.nodes, k)) @ coef
    return GridFunction(nodes=kernel.nodes, values=vals, role="forcing")


def manufactured_pair(model: OperatorModel, lam, nodes: np.ndarray):
    """A smooth periodic solution and its exact forcing under the operator.

    At declared profile kinks the forcing jumps; the node value there is
    the mean of the one-sided limits.
    """
    x = nodes
    u = np.cos(x) + 0.3 * np.sin(2 * x)
    du = -np.sin(x) + 0.6 * np.cos(2 * x)
    ddu = -np.cos(x) - 1.2 * np.sin(2 * x)
    fx = np.asarray(eval_f(model.profile, x))
    shift = np.zeros_like(x)
    for k in model.profile.kinks:
        shift[np.abs(np.abs(x) - k) < 1e-12] = 1e-9
    if np.any(shift):
        dfx = 0.5 * (np.asarray(eval_f_prime(model.profile, np.clip(x - shift, -PI, PI)))
                     + np.asarray(eval_f_prime(model.profile, np.clip(x + shift, -PI, PI))))
    else:
        dfx = np.asarray(eval_f_prime(model.profile, x))
    F = 1j * model.epsilon * (dfx * du + fx * ddu) + 1j * du - lam * u
    return (GridFunction(nodes=x, values=u + 0j, role="solution"),
            GridFunction(nodes=x, values=F, role="forcing"))


def bound_product_audit(kernel: KernelGrid, x_below: float = 0.5) -> float:
    """max over sampled (x, s), s between 0 and x, |x| <= x_below, of |psi(x) p(s)/f(s)|.

    Refinement stability of this number is the computable stand-in for the
    uniform bound on the part-I product near the origin, where psi blows
    up and p/f vanishes at matching rates.
    """
    x = kernel.nodes
    lpf = kernel.meta["lpf"]
    psi = kernel.meta["psi_full"]
    n = len(x)
    i0 = n // 2
    interior = np.ones(n, bool)
    interior[[0, i0, -1]] = False
    lpsi, _ = _log_polar(np.where(np.isnan(psi), 0.0, psi))
    sgn = np.where(x < 0, -1.0, 1.0)
    rows = interior & (np.abs(x) <= x_below)
    mask = (np.abs(x)[:, None] >= np.abs(x)[None, :]) & \
           (sgn[:, None] * sgn[None, :] > 0) & rows[:, None] & interior[None, :]
    mask[:, i0] = False
    with np.errstate(invalid="ignore"):
        logs = np.where(mask, lpsi[:, None] + lpf[None, :], -np.inf)
        logs = np.where(np.isnan(logs), -np.inf, logs)
    return float(np.exp(np.max(logs)))


def first_integral_proxy(kernel: KernelGrid, forcing: GridFunction) -> np.ndarray:
    """|psi(x) * int_0^x phi (-i p/(eps f)) F| / (sqrt(x) ||F||) on 0 < x < pi/2."""
    return _integral_proxies(kernel, forcing)[0]


def second_integral_proxy(kernel: KernelGrid, forcing: GridFunction) -> np.ndarray:
    """|phi(x) * int_x^pi psi (-i p/(eps f)) F| / (sqrt(pi-x) ||F||) near pi."""
    return _integral_proxies(kernel, forcing)[1]


def _integral_proxies(kernel: KernelGrid, forcing: GridFunction):
    x = kernel.nodes
    w = kernel.weights
    F = forcing.values
    norm_f = math.sqrt(float(np.sum(w * np.abs(F) ** 2)))
    n = len(x)
    i0 = n // 2
    eps = kernel.meta["model"].epsilon
    lpf = kernel.meta["lpf"]

    pos = slice(i0 + 1, n - 1)
    phi_pos = kernel.phi_on_grid[pos]
    # psi on positive interior nodes from the stored w2 (w2 = psi * (-i/eps) * pf)
    w2 = kernel.psi_weight_on_grid
    psi_pos = w2[pos] / ((-1j / eps) * np.exp(lpf[pos]))

    w1 = phi_pos * (-1j / eps) * np.exp(lpf[pos])      # phi * weight, s > 0
    incr = w[pos] * w1 * F[pos]
    j1 = np.cumsum(incr) - 0.5 * incr                  # midpoint-ish running sum
    xq = x[pos]
    proxy1 = np.abs(psi_pos * j1) / (np.sqrt(xq) * norm_f)
    proxy1 = proxy1[xq < PI / 2]

    incr2 = w[pos] * w2[pos] * F[pos]
    j2 = np.cumsum(incr2[::-1])[::-1] - 0.5 * incr2
    proxy2 = np.abs(phi_pos * j2) / (np.sqrt(PI - xq) * norm_f)
    return proxy1, proxy2


def quasi_derivative_continuity(model: OperatorModel, lam, forcing_fn,
                                config: SolverConfig = DEFAULT_CONFIG,
                                probe: float = 1e-6, quad_size: int = 2048):
    """One-sided values of f*u' near 0 for the resolvent solution.

    f*u' = f*psi'*J1 + f*phi'*(J2 + A) is reconstructed from traces: the
    factors f*psi' and f*phi' are exp(-log(p/f)) times quasi-derivatives,
    so the evaluation stays finite arbitrarily close to the degenerate
    point.  J1(+-probe) is taken from the local model (it is
    O(probe^(1+sigma)) with an explicitly known coefficient) and J2/A come
    from graded quadrature of the traces.  ``forcing_fn`` maps node arrays
    to forcing values.  Returns (value at -probe, value at +probe); both
    tend to the common limit 0 at rate O(probe).
    """
    eps = model.epsilon
    sigma = model.sigma
    x, w = graded_full_grid(quad_size)
    n = len(x)
    i0 = n // 2
    quad_pos = x[i0 + 1:-1]
    nodes_pos = np.unique(np.concatenate([quad_pos, [probe]]))
    pairs = solution_pairs(model, lam, nodes_pos, config)

    phi_p, wphi_p = _values_on(pairs[1]["phi"], nodes_pos)
    psi_p, wpsi_p = _values_on(pairs[1]["psi"], nodes_pos)
    phi_m, wphi_m = _values_on(pairs[-1]["phi"], nodes_pos)
    psi_m, wpsi_m = _values_on(pairs[-1]["psi"], nodes_pos)
    lpf_pos = np.asarray(compute_log_p_over_f(model, nodes_pos))
    pf_pos = np.exp(lpf_pos)

    sel = np.searchsorted(nodes_pos, quad_pos)
    wq = w[i0 + 1:-1]
    f_pos = np.asarray(forcing_fn(quad_pos), dtype=complex)
    f_neg = np.asarray(forcing_fn(-quad_pos), dtype=complex)
    # psi(s)*weight(s) at s > 0 and, via reflection, at s = -t
    w2_pos = psi_p[sel] * (-1j / eps) * pf_pos[sel]
    w2_neg = psi_m[sel] * (-1j / eps) * pf_pos[sel]
    j2_zero = np.sum(wq * w2_pos * f_pos)
    full = j2_zero + np.sum(wq * w2_neg * f_neg)
    denom = (pairs[1]["phi_end"].regular_part / pairs[-1]["phi_end"].regular_part) - 1.0
    A = full / denom

    k = int(np.searchsorted(nodes_pos, probe))
    inv_pf = 1.0 / pf_pos[k]
    f0 = complex(np.asarray(forcing_fn(np.array([0.0])), dtype=complex)[0])
    j1_mag = f0 * (PI / 2.0) * probe ** (1.0 + sigma) / ((1.0 + sigma) * eps)
    # J1(+t) = -i*j1_mag*(1+O(t)); J1(-t) = -conj-orientation piece +i*j1_mag
    right = inv_pf * wpsi_p[k] * (-1j * j1_mag) + inv_pf * wphi_p[k] * (j2_zero + A)
    left = inv_pf * wpsi_m[k] * (1j * j1_mag) + inv_pf * wphi_m[k] * (j2_zero + A)
    return complex(left), complex(right)
