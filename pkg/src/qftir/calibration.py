"""Single-species instrument calibration: joint NLLS fit of concentration and
spectral resolution against a measured absorbance spectrum.

The model is the convolved weak-absorption view m(c, dnu) = -ln(T(c) * H(dnu)).
Parameters are fitted on a log scale (which enforces positivity), with a
damped Gauss-Newton / Levenberg-Marquardt iteration and a central-difference
Jacobian over a step wide enough to smooth the discretization staircase of
the convolution window; the model involves a convolution, so analytic
derivatives would buy nothing at this scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import GasMixture, GasSpecies, Spectrum, SpectrumKind
from .errors import DegenerateInitialGuess, NoConvergence
from .forward import apply_response, beer_lambert_transmission

#: Gas-cell path length, cm. The source states both 1.35 m and 135 mm for the
#: same cell; it is exposed as a parameter everywhere and this default makes
#: no claim about which the experiment used.
DEFAULT_CELL_LENGTH_CM = 135.0

_MAX_ITERATIONS = 200
_PARAM_TOL = 1e-8
_GRAD_TOL = 1e-10
# Central-difference step on the log parameters. The response convolution is
# piecewise linear in 1/resolution (one fractional FFT bin at the window edge),
# so the step must straddle many of those ~1.5e-4-wide segments to estimate
# the smooth derivative; 1e-2 averages over tens of them while keeping the
# O(h^2) truncation error around 1e-4.
_FD_STEP = 1e-2


@dataclass(frozen=True)
class CalibrationResult:
    concentration: float
    resolution: float
    fit_rms: float
    iterations: int
    converged: bool
    grad_norm: float = float("nan")
    flat_directions: tuple[str, ...] = ()


@dataclass(frozen=True)
class LinearityPoint:
    nominal: float
    retrieved: float
    detection_limit: float


def _model_absorbance(
    species: GasSpecies,
    path_length: float,
    conditions: tuple[float, float],
    concentration: float,
    resolution: float,
    nu_measured: np.ndarray,
    model_band: tuple[float, float],
) -> np.ndarray:
    temperature, pressure = conditions
    mixture = GasMixture(((species.name, concentration),), temperature, pressure)
    grid = species.cross_section.restrict(*model_band).grid
    transmission = beer_lambert_transmission(mixture, {species.name: species}, path_length, grid)
    convolved = apply_response(transmission, resolution)
    vals = np.maximum(convolved.values, 1e-300)
    absorbance = -np.log(vals)
    return np.interp(nu_measured, grid.points(), absorbance)


def calibrate(
    measured: Spectrum,
    species: GasSpecies,
    path_length: float,
    conditions: tuple[float, float],
    initial: tuple[float, float],
    fit_resolution: bool = True,
) -> CalibrationResult:
    """Fit (concentration, resolution) to a measured absorbance spectrum.

    ``initial`` is (c0 ppm, dnu0 cm^-1), both > 0. With fit_resolution=False
    the resolution is held at its initial value (concentration-only fit, used
    by linearity checks). Raises NoConvergence after 200 iterations without
    meeting a tolerance and DegenerateInitialGuess when the model has zero
    gradient at the start. Flat (insensitive) parameter directions are
    diagnosed and reported; a fit that ends on one is marked not converged.
    """
    if measured.kind is not SpectrumKind.ABSORBANCE:
        raise ValueError("calibrate expects an Absorbance spectrum")
    c0, r0 = initial
    if c0 <= 0 or r0 <= 0:
        raise ValueError("initial guess must be positive")
    xs = species.cross_section.grid
    margin = 20.0
    model_band = (
        max(xs.start, measured.grid.start - margin),
        min(xs.end, measured.grid.end + margin),
    )
    good = ~np.isnan(measured.values)
    nu = measured.grid.points()[good]
    y = measured.values[good]
    names = ["concentration", "resolution"] if fit_resolution else ["concentration"]

    def residual(theta: np.ndarray) -> np.ndarray:
        conc = float(np.exp(theta[0]))
        res = float(np.exp(theta[1])) if fit_resolution else r0
        model = _model_absorbance(
            species, path_length, conditions, conc, res, nu, model_band
        )
        return model - y

    def jacobian(theta: np.ndarray) -> np.ndarray:
        cols = []
        for i in range(len(theta)):
            up = theta.copy()
            dn = theta.copy()
            up[i] += _FD_STEP
            dn[i] -= _FD_STEP
            cols.append((residual(up) - residual(dn)) / (2.0 * _FD_STEP))
        return np.column_stack(cols)

    def run(theta: np.ndarray):
        r = residual(theta)
        cost = float(r @ r)
        jac = jacobian(theta)
        grad = jac.T @ r
        grad0 = float(np.linalg.norm(grad))
        lam = 1e-3
        iterations = 0
        converged = False
        while iterations < _MAX_ITERATIONS:
            iterations += 1
            jtj = jac.T @ jac
            damped = jtj + lam * np.diag(np.diag(jtj).clip(min=1e-300))
            try:
                delta = np.linalg.solve(damped, -grad)
            except np.linalg.LinAlgError:
                lam *= 3.0
                continue
            trial = theta + delta
            r_trial = residual(trial)
            cost_trial = float(r_trial @ r_trial)
            if cost_trial < cost:
                theta, r, cost = trial, r_trial, cost_trial
                jac = jacobian(theta)
                grad = jac.T @ r
                lam = max(lam / 3.0, 1e-12)
                if np.max(np.abs(delta)) < _PARAM_TOL or np.linalg.norm(grad) < _GRAD_TOL * max(grad0, 1e-300):
                    converged = True
                    break
            else:
                lam *= 3.0
                if lam > 1e12:
                    # damping saturated: no acceptable step remains. Declare
                    # convergence if the quadratic model predicts a negligible
                    # relative cost reduction from this point.
                    try:
                        pred = float(grad @ np.linalg.lstsq(jtj, grad, rcond=None)[0])
                    except np.linalg.LinAlgError:
                        pred = float("inf")
                    converged = (
                        pred <= 1e-4 * max(cost, 1e-300)
                        or np.linalg.norm(grad) < _GRAD_TOL * max(grad0, 1e-300)
                    )
                    break
        else:
            raise NoConvergence(f"no convergence after {_MAX_ITERATIONS} iterations")
        if not converged and iterations >= _MAX_ITERATIONS:
            raise NoConvergence(f"no convergence after {iterations} iterations")
        return theta, r, cost, jac, grad, iterations, converged

    theta = np.array([np.log(c0)] + ([np.log(r0)] if fit_resolution else []))
    if np.all(np.linalg.norm(jacobian(theta), axis=0) == 0.0):
        raise DegenerateInitialGuess("model gradient is zero at the initial guess")
    theta, r, cost, jac, grad, iterations, converged = run(theta)

    # For line-comb spectra the cost along the resolution axis is terraced:
    # it barely changes until the response window edge crosses the next
    # interferogram echo, then drops. A local step cannot see across a
    # terrace, so rescan the resolution axis coarsely and restart from any
    # strictly better point.
    if fit_resolution:
        res_floor = 5.05 * species.cross_section.grid.step
        for _ in range(3):
            res_now = float(np.exp(theta[1]))
            candidates = np.geomspace(res_now / 2.5, res_now * 2.5, 33)
            candidates = candidates[candidates > res_floor]
            scan = []
            for rc in candidates:
                r_scan = residual(np.array([theta[0], np.log(rc)]))
                scan.append((float(r_scan @ r_scan), rc))
            best_cost, best_res = min(scan)
            if best_cost >= cost * (1.0 - 1e-9):
                break
            theta = np.array([theta[0], np.log(best_res)])
            theta, r, cost, jac, grad, more, converged = run(theta)
            iterations += more

    sens = np.linalg.norm(jac, axis=0)
    scale = max(float(np.linalg.norm(y)), 1.0)
    flat = tuple(n for n, s in zip(names, sens) if s < 1e-9 * scale)
    if flat:
        converged = False
    conc = float(np.exp(theta[0]))
    res = float(np.exp(theta[1])) if fit_resolution else r0
    return CalibrationResult(
        concentration=conc,
        resolution=res,
        fit_rms=float(np.sqrt(cost / r.size)),
        iterations=iterations,
        converged=converged,
        grad_norm=float(np.linalg.norm(grad)),
        flat_directions=flat,
    )


def linearity_check(
    cell_concentrations,
    noise_seed: int,
    *,
    species: GasSpecies,
    path_length: float,
    conditions: tuple[float, float],
    resolution: float,
    noise_std: float,
) -> list[LinearityPoint]:
    """Retrieved-vs-nominal check at fixed resolution (concentration-only fits).

    For each nominal concentration a noisy synthetic measurement is built from
    the forward model (Gaussian absorbance noise of the given std) and fitted.
    The detection limit is residual noise over the peak per-ppm response.
    """
    rng = np.random.default_rng(noise_seed)
    xs = species.cross_section
    out = []
    for nominal in cell_concentrations:
        if nominal < 0:
            raise ValueError("nominal concentrations must be >= 0")
        grid = xs.grid
        nu = grid.points()
        clean = _model_absorbance(
            species, path_length, conditions, max(nominal, 0.0), resolution,
            nu, (grid.start, grid.end),
        ) if nominal > 0 else np.zeros(grid.count)
        noisy = clean + rng.normal(0.0, noise_std, grid.count)
        measured = Spectrum(grid, noisy, SpectrumKind.ABSORBANCE)
        c0 = nominal if nominal > 0 else 1.0
        fit = calibrate(
            measured, species, path_length, conditions, (c0, resolution),
            fit_resolution=False,
        )
        # per-ppm response slope around the fitted value
        delta = max(0.01 * max(nominal, 1.0), 0.01)
        c_up = fit.concentration + delta
        c_dn = max(fit.concentration - delta, 0.0)
        up = _model_absorbance(species, path_length, conditions, c_up,
                               resolution, nu, (grid.start, grid.end))
        dn = _model_absorbance(species, path_length, conditions, c_dn,
                               resolution, nu, (grid.start, grid.end))
        slope_peak = float(np.max(np.abs(up - dn)) / (c_up - c_dn))
        limit = fit.fit_rms / slope_peak if slope_peak > 0 else float("inf")
        out.append(LinearityPoint(float(nominal), fit.concentration, limit))
    return out
