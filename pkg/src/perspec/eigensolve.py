"""Real eigenvalues as zeros of the dispersion function.

D(lam) = phi(pi, lam) - phi(-pi, lam), with phi(-pi, lam) obtained as
phi(pi, -lam) through the half-interval reduction -- the negative half is
never integrated.  For a real profile and real lam the two boundary
values are exact complex conjugates (the construction mirrors bit for
bit), so D is purely imaginary and its imaginary part is a real secular
function whose sign changes bracket the eigenvalues.  The scan still
auto-detects which component of D is the working one and records it, and
the off-component is tracked as a reality diagnostic.

Refinement is plain bisection on the detected component; D(-lam) = -D(lam)
holds exactly (the same two boundary values swap), so only the positive
half-axis is scanned and the result is mirrored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IntegrationError, StaleEigenvalueError, ValidationError
from .profiles import OperatorModel
from .shooting import (DEFAULT_CONFIG, SolutionTrace, SolverConfig,
                       compute_phi_at_pi, integrate_phi)


@dataclass(frozen=True)
class DispersionValue:
    lam: float
    D: complex
    phi_plus: complex      # phi(pi, lam)
    phi_minus: complex     # phi(-pi, lam) = phi(pi, -lam)

    @property
    def scale(self) -> float:
        return max(1.0, abs(self.phi_plus), abs(self.phi_minus))


@dataclass(frozen=True, eq=False)
class EigenvalueList:
    model: OperatorModel
    eigenvalues: np.ndarray          # ascending, contains 0
    residuals: np.ndarray            # |D(lam_n)|
    relative_residuals: np.ndarray   # |D| / max(1, |phi+|, |phi-|)
    brackets: list                   # (lo, hi) per refined positive root
    indicator: str                   # "imag" or "real": component bracketed on
    max_off_component: float         # reality diagnostic along the scan
    lam_max: float
    resolution: float
    skipped: list                    # grid points where the integrator failed

    def positive(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues > 1e-14]

    def as_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "eigenvalues": self.eigenvalues.tolist(),
            "residuals": self.residuals.tolist(),
            "relative_residuals": self.relative_residuals.tolist(),
            "indicator_component": self.indicator,
            "max_off_component": self.max_off_component,
            "lam_max": self.lam_max,
            "resolution": self.resolution,
            "skipped": list(self.skipped),
            "growth_slope": growth_slope(self),
        }


def dispersion(model: OperatorModel, lam: float,
               config: SolverConfig = DEFAULT_CONFIG) -> DispersionValue:
    """Two boundary-value computations, at lam and -lam."""
    plus = compute_phi_at_pi(model, lam, config)
    minus = compute_phi_at_pi(model, -lam, config)
    return DispersionValue(lam=float(np.real(lam)), D=plus - minus,
                           phi_plus=plus, phi_minus=minus)


def _component(D: complex, indicator: str) -> float:
    return D.imag if indicator == "imag" else D.real


def scan_and_refine(model: OperatorModel, lam_max: float, resolution: float,
                    config: SolverConfig = DEFAULT_CONFIG) -> EigenvalueList:
    """Bracket sign changes of the dispersion indicator and bisect them down.

    Roots inside (0, resolution) are attributed to the known zero
    eigenvalue; each bracket is refined to width 1e-10*(1+|lam|).
    """
    if lam_max <= 0 or resolution <= 0:
        raise ValidationError("lam_max and resolution must be positive")

    grid = np.arange(resolution, lam_max + resolution / 2, resolution)
    values: list[DispersionValue | None] = []
    skipped = []
    for lam in grid:
        try:
            values.append(dispersion(model, float(lam), config))
        except IntegrationError as exc:
            skipped.append({"lam": float(lam), "reason": str(exc)})
            values.append(None)

    finite = [v for v in values if v is not None]
    sum_im = sum(abs(v.D.imag) for v in finite)
    sum_re = sum(abs(v.D.real) for v in finite)
    indicator = "imag" if sum_im >= sum_re else "real"
    off = max((abs(v.D.real) if indicator == "imag" else abs(v.D.imag))
              for v in finite) if finite else 0.0

    def indicator_at(lam: float) -> float:
        return _component(dispersion(model, lam, config).D, indicator)

    roots, brackets = [], []
    for k in range(len(grid) - 1):
        va, vb = values[k], values[k + 1]
        if va is None or vb is None:
            continue
        ra, rb = _component(va.D, indicator), _component(vb.D, indicator)
        if ra == 0.0:
            roots.append(float(grid[k]))
            brackets.append((float(grid[k]), float(grid[k])))
            continue
        if ra * rb >= 0.0:
            continue
        lo, hi, rlo = float(grid[k]), float(grid[k + 1]), ra
        while hi - lo > 1e-10 * (1.0 + hi):
            mid = 0.5 * (lo + hi)
            rm = indicator_at(mid)
            if rm == 0.0:
                lo = hi = mid
                break
            if (rm > 0) == (rlo > 0):
                lo, rlo = mid, rm
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
        brackets.append((float(grid[k]), float(grid[k + 1])))

    # attribute near-zero roots to the known zero eigenvalue
    roots = [r for r in roots if r >= resolution / 2]

    eigs = np.concatenate([[-r for r in reversed(roots)], [0.0], roots])
    resid = np.empty_like(eigs)
    rel = np.empty_like(eigs)
    for i, lam in enumerate(eigs):
        dv = dispersion(model, float(lam), config)
        resid[i] = abs(dv.D)
        rel[i] = abs(dv.D) / dv.scale

    return EigenvalueList(model=model, eigenvalues=eigs, residuals=resid,
                          relative_residuals=rel, brackets=brackets,
                          indicator=indicator, max_off_component=float(off),
                          lam_max=float(lam_max), resolution=float(resolution),
                          skipped=skipped)


def eigenfunction(model: OperatorModel, lam_n: float,
                  config: SolverConfig = DEFAULT_CONFIG) -> SolutionTrace:
    """The phi-trace at a refined eigenvalue, scaled to unit max modulus."""
    dv = dispersion(model, lam_n, config)
    rel = abs(dv.D) / dv.scale
    if rel > config.stale_tol:
        raise StaleEigenvalueError(
            f"lam = {lam_n} no longer satisfies the dispersion condition "
            f"(relative residual {rel:.3e} > {config.stale_tol:.1e})")
    trace = integrate_phi(model, lam_n, config, record_steps=True)
    norm = float(np.max(np.abs(trace.values)))
    meta = dict(trace.meta)
    meta.update({"eigenvalue": float(lam_n), "dispersion_residual": abs(dv.D),
                 "normalization": norm, "boundary_value": dv.phi_plus / norm})
    return SolutionTrace(lam=trace.lam, grid=trace.grid,
                         values=trace.values / norm,
                         quasi_derivatives=trace.quasi_derivatives / norm,
                         branch="phi", delta_origin=trace.delta_origin,
                         delta_pi=trace.delta_pi, meta=meta)


def growth_slope(eigs: EigenvalueList, n_use: int | None = None) -> float | None:
    """Least-squares slope of log(lam_n) against log(n) for the positive half."""
    pos = eigs.positive()
    if n_use is not None:
        pos = pos[:n_use]
    if len(pos) < 2:
        return None
    n = np.arange(1, len(pos) + 1, dtype=float)
    return float(np.polyfit(np.log(n), np.log(pos), 1)[0])
