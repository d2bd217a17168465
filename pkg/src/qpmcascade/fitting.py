"""Nonlinear least-squares engine with the registry of line-shape and
saturation models used for measured or synthetic curves.

The solver is a classic Levenberg-Marquardt descent with a numeric
Jacobian (central differences, relative step 1e-6), multiplicative
damping (start 1e-3, x10 on a rejected step, /10 on an accepted one) and
projection of every step onto the parameter bounds.  It converges when
the relative residual decrease stays below 1e-10 for three consecutive
iterations or the parameter step norm drops below 1e-12.  Everything is
plain double-precision arithmetic in a fixed order, so identical inputs
give bitwise-identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DomainError, RankDeficiencyError

_REL_STEP = 1e-6
_STALL_LIMIT = 3
_REL_DECREASE = 1e-10
_STEP_NORM = 1e-12


@dataclass(frozen=True)
class FitModel:
    """A named parametric curve y = evaluate(params, x).

    ``bounds`` is one (low, high) pair per parameter; ``constants`` holds
    fixed non-fitted values the evaluate closure was built with (kept for
    reporting).
    """

    name: str
    parameter_names: tuple[str, ...]
    bounds: tuple[tuple[float, float], ...]
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.parameter_names) != len(self.bounds):
            raise DomainError("one bounds pair per parameter required")
        for name, (lo, hi) in zip(self.parameter_names, self.bounds):
            if not lo < hi:
                raise DomainError(f"parameter {name!r}: bounds ({lo}, {hi}) are empty")


@dataclass(frozen=True)
class FitResult:
    """Outcome of one fit; ``converged`` is False after an iteration cap."""

    model: FitModel
    parameters: np.ndarray
    standard_errors: np.ndarray
    residual_norm: float
    converged: bool
    iterations: int
    cost_trace: tuple[float, ...]

    def as_dict(self) -> dict:
        return {
            "model": self.model.name,
            "parameters": dict(zip(self.model.parameter_names, map(float, self.parameters))),
            "standard_errors": dict(
                zip(self.model.parameter_names, map(float, self.standard_errors))
            ),
            "residual_norm": float(self.residual_norm),
            "converged": self.converged,
            "iterations": self.iterations,
        }


def _jacobian(
    func: Callable[[np.ndarray], np.ndarray],
    params: np.ndarray,
    bounds: Sequence[tuple[float, float]],
    rel_step: float = _REL_STEP,
) -> np.ndarray:
    """Central-difference Jacobian, one-sided at parameter bounds.

    Per-parameter step h_i = rel_step * max(|p_i|, 1): relative above unit
    magnitude with an absolute floor so zero-valued parameters still move.
    """
    base = func(params)
    jac = np.empty((base.size, params.size))
    for i, p in enumerate(params):
        h = rel_step * max(abs(p), 1.0)
        lo, hi = bounds[i]
        up = params.copy()
        down = params.copy()
        if p + h <= hi and p - h >= lo:
            up[i] = p + h
            down[i] = p - h
            jac[:, i] = (func(up) - func(down)) / (2.0 * h)
        elif p + h <= hi:
            up[i] = p + h
            jac[:, i] = (func(up) - base) / h
        else:
            down[i] = p - h
            jac[:, i] = (base - func(down)) / h
    return jac


def fit(
    model: FitModel,
    x: Sequence[float],
    y: Sequence[float],
    initial: Sequence[float],
    max_iterations: int = 500,
) -> FitResult:
    """Levenberg-Marquardt fit of ``model`` to (x, y).

    Requires at least max(3, n_parameters + 1) data points and an initial
    guess inside the bounds.  A singular normal matrix raises
    :class:`RankDeficiencyError`; hitting the iteration cap returns a
    result flagged not converged rather than raising.
    """
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    p = np.asarray(list(initial), dtype=float)
    n_par = len(model.parameter_names)
    if p.size != n_par:
        raise DomainError(f"model {model.name!r} takes {n_par} parameters, got {p.size}")
    if x.size != y.size or x.size < max(3, n_par + 1):
        raise DomainError(
            f"need at least {max(3, n_par + 1)} matched data points, got {x.size}"
        )
    lows = np.array([b[0] for b in model.bounds])
    highs = np.array([b[1] for b in model.bounds])
    if np.any(p < lows) or np.any(p > highs):
        raise DomainError("initial parameters must lie inside the bounds")

    def residuals(params: np.ndarray) -> np.ndarray:
        return y - model.evaluate(params, x)

    r = residuals(p)
    cost = float(r @ r)
    damping = 1e-3
    stall = 0
    converged = False
    iterations = 0
    trace = [cost]
    jac = _jacobian(residuals, p, model.bounds)
    while iterations < max_iterations:
        iterations += 1
        a_mat = jac.T @ jac
        grad = jac.T @ r
        # Floor the damped diagonal so a transiently flat parameter cannot
        # make the step solve singular; true rank deficiency still surfaces
        # when the undamped matrix is inverted for the covariance.
        diag = np.diag(a_mat)
        floor = 1e-14 * max(1.0, float(diag.max()) if diag.size else 1.0)
        m_mat = a_mat + damping * np.diag(np.maximum(diag, floor))
        try:
            step = np.linalg.solve(m_mat, -grad)
        except np.linalg.LinAlgError as exc:
            raise RankDeficiencyError(
                f"normal matrix of model {model.name!r} is singular"
            ) from exc
        candidate = np.clip(p + step, lows, highs)
        step_norm = float(np.linalg.norm(candidate - p))
        if step_norm < _STEP_NORM:
            converged = True
            break
        r_new = residuals(candidate)
        cost_new = float(r_new @ r_new)
        if cost_new < cost:
            decrease = (cost - cost_new) / max(cost, np.finfo(float).tiny)
            p, r, cost = candidate, r_new, cost_new
            trace.append(cost)
            damping = max(damping / 10.0, 1e-12)
            jac = _jacobian(residuals, p, model.bounds)
            stall = stall + 1 if decrease < _REL_DECREASE else 0
        else:
            damping = min(damping * 10.0, 1e12)
            stall += 1
        if stall >= _STALL_LIMIT:
            converged = True
            break

    errors = _standard_errors(model, jac, cost, x.size, n_par)
    return FitResult(
        model=model,
        parameters=p,
        standard_errors=errors,
        residual_norm=cost,
        converged=converged,
        iterations=iterations,
        cost_trace=tuple(trace),
    )


def _standard_errors(
    model: FitModel, jac: np.ndarray, cost: float, n_data: int, n_par: int
) -> np.ndarray:
    dof = n_data - n_par
    if dof <= 0:
        return np.zeros(n_par)
    a_mat = jac.T @ jac
    try:
        cov = np.linalg.inv(a_mat) * (cost / dof)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            f"normal matrix of model {model.name!r} is singular at the solution"
        ) from exc
    diag = np.clip(np.diag(cov), 0.0, None)
    return np.sqrt(diag)


def goodness(result: FitResult, x: Sequence[float], y: Sequence[float]) -> dict:
    """RMS residual and per-point residuals of a fit against data."""
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if x.size == 0 or x.size != y.size:
        raise DomainError("goodness needs matched non-empty data")
    per_point = y - result.model.evaluate(result.parameters, x)
    return {
        "rms": float(np.sqrt(result.residual_norm / x.size)),
        "residuals": per_point,
    }


# --- model registry -----------------------------------------------------------


def _sinc2(arg: np.ndarray) -> np.ndarray:
    return np.sinc(arg / math.pi) ** 2


def _analytic_shape(dk_l: np.ndarray) -> np.ndarray:
    """(1 - sinc(x))/x^2 scaled so the x -> 0 value is 1 (peak-normalized)."""
    x = np.asarray(dk_l, dtype=float)
    small = np.abs(x) < 1e-4
    x_safe = np.where(small, 1.0, x)
    series = 1.0 - x * x / 20.0
    exact = 6.0 * (1.0 - np.sinc(x_safe / math.pi)) / (x_safe * x_safe)
    return np.where(small, series, exact)


def _weighted_sum(dk: np.ndarray, length: float, a: Sequence[float], panels: int = 1024) -> np.ndarray:
    dz = length / panels
    z = (np.arange(panels) + 0.5) * dz
    weight = np.zeros_like(z)
    for i, coeff in enumerate(a):
        weight += coeff * z ** i
    kernel = _sinc2(0.5 * np.outer(dk, length - z))
    return kernel @ weight * dz


def model_registry(length_mm: float = 20.0) -> list[FitModel]:
    """The built-in model families.

    ``length_mm`` fixes the interaction length of the saturation model
    (the one model where length is a constant, not a parameter).  The
    scan-type models express detuning as (x - center) in rad/mm per
    x-unit, so their length parameter is an effective width scale.
    """

    def sinc2_scan(params, x):
        amplitude, center, eff_len, offset = params
        return amplitude * _sinc2(0.5 * eff_len * (x - center)) + offset

    def saturation(params, x):
        eta_max, eta_nor = params
        return eta_max * np.sin(np.sqrt(np.clip(eta_nor * x, 0.0, None)) * length_mm) ** 2

    def lineshape_eq1(params, x):
        amplitude, center, length, offset = params
        return amplitude * _analytic_shape((x - center) * length) + offset

    def lineshape_eq2(params, x):
        a0, a1, a2, center, length, offset = params
        return _weighted_sum(x - center, length, (a0, a1, a2)) + offset

    def two_mode_sinc2(params, x):
        amp1, center1, amp2, center2, eff_len, offset = params
        return (
            amp1 * _sinc2(0.5 * eff_len * (x - center1))
            + amp2 * _sinc2(0.5 * eff_len * (x - center2))
            + offset
        )

    wide = (-1e9, 1e9)
    positive = (0.0, 1e9)
    center_bounds = (100.0, 20e3)
    length_bounds = (1e-3, 1e3)
    return [
        FitModel(
            name="sinc2_scan",
            parameter_names=("amplitude", "center", "effective_length", "offset"),
            bounds=(positive, center_bounds, length_bounds, wide),
            evaluate=sinc2_scan,
        ),
        FitModel(
            name="saturation",
            parameter_names=("eta_max", "eta_nor"),
            bounds=((1e-12, 1.0), (0.0, 100.0)),
            evaluate=saturation,
            constants={"length_mm": length_mm},
        ),
        FitModel(
            name="lineshape_eq1",
            parameter_names=("amplitude", "center", "length", "offset"),
            bounds=(positive, center_bounds, length_bounds, wide),
            evaluate=lineshape_eq1,
        ),
        FitModel(
            name="lineshape_eq2",
            parameter_names=("a0", "a1", "a2", "center", "length", "offset"),
            bounds=(wide, wide, wide, center_bounds, length_bounds, wide),
            evaluate=lineshape_eq2,
        ),
        FitModel(
            name="two_mode_sinc2",
            parameter_names=(
                "amplitude1",
                "center1",
                "amplitude2",
                "center2",
                "effective_length",
                "offset",
            ),
            bounds=(positive, center_bounds, positive, center_bounds, length_bounds, wide),
            evaluate=two_mode_sinc2,
        ),
    ]


def registry_model(name: str, length_mm: float = 20.0) -> FitModel:
    for model in model_registry(length_mm=length_mm):
        if model.name == name:
            return model
    raise DomainError(
        f"unknown model {name!r}; available: {[m.name for m in model_registry()]}"
    )


def auto_initial(model: FitModel, x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Deterministic grid-seeded initial guess.

    Heuristics fill amplitude/offset-like parameters from the data; the
    remaining (most nonlinear) parameters, at most three, are scanned on a
    16-level lattice inside their effective bounds and the lowest-SSE
    lattice point wins.
    """
    x = np.asarray(list(x), dtype=float)
    y = np.asarray(list(y), dtype=float)
    if x.size == 0 or x.size != y.size:
        raise DomainError("auto_initial needs matched non-empty data")
    span = float(y.max() - y.min())
    guesses: list[float] = []
    lattice_axes: list[tuple[int, np.ndarray]] = []
    for i, name in enumerate(model.parameter_names):
        lo, hi = model.bounds[i]
        if "amplitude" in name or name.startswith("a0"):
            guesses.append(np.clip(span if span > 0 else 1.0, lo, hi))
        elif name == "offset":
            guesses.append(np.clip(float(y.min()), lo, hi))
        elif name.startswith("a"):
            guesses.append(np.clip(0.0, lo, hi))
        elif name == "eta_max":
            guesses.append(np.clip(max(float(y.max()), 1e-6), lo, hi))
        else:
            guesses.append(0.5 * (lo + hi))
            axis = None
            if "center" in name:
                axis = np.linspace(float(x.min()), float(x.max()), 16)
            elif "length" in name or name == "eta_nor":
                # scale parameters: geometric lattice
                axis_lo, axis_hi = (0.1, 1e3) if "length" in name else (1e-5, 10.0)
                axis = np.geomspace(axis_lo, axis_hi, 16)
            else:
                axis = np.linspace(lo, hi, 16)
            if len(lattice_axes) < 3:
                lattice_axes.append((i, axis))
    params = np.array(guesses)
    if not lattice_axes:
        return params
    best = params.copy()
    best_sse = math.inf
    grids = np.meshgrid(*[axis for _, axis in lattice_axes], indexing="ij")
    flat = [g.ravel() for g in grids]
    for point in zip(*flat):
        trial = params.copy()
        for (idx, _), value in zip(lattice_axes, point):
            trial[idx] = value
        resid = y - model.evaluate(trial, x)
        sse = float(resid @ resid)
        if sse < best_sse:
            best_sse = sse
            best = trial
    return best
