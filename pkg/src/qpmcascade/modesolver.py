"""Scalar finite-difference eigenmode solver for a rectangular ridge cross-section.

The guided problem is the scalar Helmholtz eigenequation on a rectangular
window with zero-field (Dirichlet) boundaries,

    [d2/dx2 + d2/dy2 + k0^2 n(x,y)^2] psi = beta^2 psi,

discretized with the standard 5-point stencil on a uniform cell-centered
grid.  Effective indices are n_eff = beta / k0.  A mode is guided when
max(substrate, superstrate) < n_eff < n_core.

The index map has three regions: the core rectangle (centered in the
window), the substrate half-plane below the core bottom, and superstrate
everywhere else.  Setting ``superstrate_index`` equal to the substrate
index at the evaluation point produces a symmetric surround, which is the
configuration the slab-limit tests use.

The window is an artificial truncation; users are responsible for choosing
it large enough that the mode has decayed at the walls (see
``window_convergence_check``).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as sparse_linalg

from .dispersion import SellmeierModel, sellmeier_index
from .errors import CapabilityError, DomainError, NumericError
from .spectral import Wavelength

# Seed for the deterministic ARPACK starting vector; fixed so identical
# inputs give bitwise-identical eigenvalues.
_V0_SEED = 987654321

_RESIDUAL_LIMIT = 1e-8


class ModeShortfallWarning(UserWarning):
    """Fewer guided modes exist than were requested."""


@dataclass(frozen=True)
class WaveguideGeometry:
    """Rectangular core on a substrate half-plane inside a finite window.

    All transverse dimensions in micrometers.  The window must strictly
    contain the core and the grid must resolve it (at least 32 cells per
    axis).
    """

    core_width_um: float
    core_height_um: float
    core_material: SellmeierModel
    substrate_material: SellmeierModel
    superstrate_index: float = 1.0
    grid_nx: int = 64
    grid_ny: int = 64
    window_width_um: float = 30.0
    window_height_um: float = 24.0

    def __post_init__(self):
        for name in ("core_width_um", "core_height_um", "window_width_um", "window_height_um"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.core_width_um >= self.window_width_um or self.core_height_um >= self.window_height_um:
            raise DomainError("window must strictly contain the core")
        if self.grid_nx < 32 or self.grid_ny < 32:
            raise DomainError("grid_nx and grid_ny must be at least 32")
        if not self.superstrate_index >= 1.0:
            raise DomainError("superstrate_index must be >= 1")

    def with_grid(self, nx: int, ny: int) -> "WaveguideGeometry":
        return WaveguideGeometry(
            core_width_um=self.core_width_um,
            core_height_um=self.core_height_um,
            core_material=self.core_material,
            substrate_material=self.substrate_material,
            superstrate_index=self.superstrate_index,
            grid_nx=nx,
            grid_ny=ny,
            window_width_um=self.window_width_um,
            window_height_um=self.window_height_um,
        )


@dataclass(frozen=True, eq=False)
class ModeSolution:
    """One guided eigenmode: effective index, unit-L2 field, residual norm."""

    n_eff: float
    mode_index: int
    field: np.ndarray  # shape (grid_ny, grid_nx)
    x_um: np.ndarray
    y_um: np.ndarray
    residual: float


def _overlap_fraction(lo: np.ndarray, hi: np.ndarray, a: float, b: float) -> np.ndarray:
    """Fraction of each [lo, hi) cell covered by the interval [a, b]."""
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None) / (hi - lo)


def index_map(geometry: WaveguideGeometry, lam: Wavelength, temp_C: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, float, float]:
    """Sampled refractive index n(x, y) on cell centers.

    n^2 is area-averaged over each cell (exact rectangle overlaps), which
    removes the staircase error of binary sampling at the core boundary.
    Returns (n, x_um, y_um, n_core, n_clad_max).
    """
    n_core = sellmeier_index(geometry.core_material, lam, temp_C)
    n_sub = sellmeier_index(geometry.substrate_material, lam, temp_C)
    n_sup = geometry.superstrate_index
    w, h = geometry.core_width_um, geometry.core_height_um
    ww, wh = geometry.window_width_um, geometry.window_height_um
    hx = ww / geometry.grid_nx
    hy = wh / geometry.grid_ny
    x = (np.arange(geometry.grid_nx) + 0.5) * hx
    y = (np.arange(geometry.grid_ny) + 0.5) * hy
    core_bottom = 0.5 * (wh - h)
    core_top = 0.5 * (wh + h)
    fx = _overlap_fraction(x - 0.5 * hx, x + 0.5 * hx, 0.5 * (ww - w), 0.5 * (ww + w))
    fy = _overlap_fraction(y - 0.5 * hy, y + 0.5 * hy, core_bottom, core_top)
    f_core = np.outer(fy, fx)
    f_sub = _overlap_fraction(y - 0.5 * hy, y + 0.5 * hy, -np.inf, core_bottom)[:, None]
    f_sub = np.broadcast_to(f_sub, f_core.shape)
    f_sup = 1.0 - f_core - f_sub
    n2 = f_core * n_core**2 + f_sub * n_sub**2 + f_sup * n_sup**2
    return np.sqrt(n2), x, y, n_core, max(n_sub, n_sup)


def _helmholtz_matrix(n: np.ndarray, hx: float, hy: float, k0: float) -> sparse.csr_matrix:
    ny, nx = n.shape
    inv_hx2 = 1.0 / (hx * hx)
    inv_hy2 = 1.0 / (hy * hy)
    main = (k0 * k0) * (n * n).ravel() - 2.0 * (inv_hx2 + inv_hy2)
    # x-neighbors: adjacent within a row; zero coupling across row ends.
    ex = np.full(nx * ny - 1, inv_hx2)
    ex[nx - 1 :: nx] = 0.0
    ey = np.full(nx * (ny - 1), inv_hy2)
    return sparse.diags(
        [ey, ex, main, ex, ey], [-nx, -1, 0, 1, nx], format="csr"
    )


def solve_modes(
    geometry: WaveguideGeometry,
    lam: Wavelength,
    temp_C: float,
    count: int = 1,
) -> list[ModeSolution]:
    """Guided modes sorted by descending effective index.

    Returns up to ``count`` solutions; if fewer guided modes exist a
    :class:`ModeShortfallWarning` is emitted and the shorter list is
    returned.  Raises :class:`NumericError` if the eigensolver fails to
    converge or a solution violates the residual contract.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    n, x, y, n_core, n_clad = index_map(geometry, lam, temp_C)
    if n_core <= n_clad:
        warnings.warn("no index contrast; no guided modes", ModeShortfallWarning)
        return []
    k0 = 2.0 * math.pi / lam.um
    hx = geometry.window_width_um / geometry.grid_nx
    hy = geometry.window_height_um / geometry.grid_ny
    a_mat = _helmholtz_matrix(n, hx, hy, k0)
    size = a_mat.shape[0]
    k_request = min(count + 4, size - 2)
    sigma = (k0 * n_core) ** 2
    v0 = np.random.default_rng(_V0_SEED).standard_normal(size)
    try:
        vals, vecs = sparse_linalg.eigsh(a_mat, k=k_request, sigma=sigma, which="LM", v0=v0)
    except sparse_linalg.ArpackNoConvergence as exc:
        raise NumericError(f"eigensolver did not converge: {exc}") from exc
    order = np.argsort(vals)[::-1]
    beta2_low = (k0 * n_clad) ** 2
    beta2_high = (k0 * n_core) ** 2
    out: list[ModeSolution] = []
    for idx in order:
        beta2 = vals[idx]
        if not (beta2_low < beta2 < beta2_high):
            continue
        psi = vecs[:, idx]
        psi = psi / np.linalg.norm(psi)
        if psi[np.argmax(np.abs(psi))] < 0:
            psi = -psi
        residual = float(np.linalg.norm(a_mat @ psi - beta2 * psi))
        if residual > _RESIDUAL_LIMIT:
            raise NumericError(f"eigenpair residual {residual} exceeds {_RESIDUAL_LIMIT}")
        out.append(
            ModeSolution(
                n_eff=float(math.sqrt(beta2) / k0),
                mode_index=len(out) + 1,
                field=psi.reshape(n.shape),
                x_um=x,
                y_um=y,
                residual=residual,
            )
        )
        if len(out) == count:
            break
    if len(out) < count:
        warnings.warn(
            f"requested {count} guided modes, found {len(out)}", ModeShortfallWarning
        )
    return out


def window_convergence_check(
    geometry: WaveguideGeometry, lam: Wavelength, temp_C: float, factor: float = 1.25
) -> float:
    """Change in fundamental n_eff when the window is enlarged by ``factor``.

    A large value means the window truncates the mode; the caller decides
    what tolerance is acceptable.
    """
    base = solve_modes(geometry, lam, temp_C, count=1)
    bigger = WaveguideGeometry(
        core_width_um=geometry.core_width_um,
        core_height_um=geometry.core_height_um,
        core_material=geometry.core_material,
        substrate_material=geometry.substrate_material,
        superstrate_index=geometry.superstrate_index,
        grid_nx=geometry.grid_nx,
        grid_ny=geometry.grid_ny,
        window_width_um=geometry.window_width_um * factor,
        window_height_um=geometry.window_height_um * factor,
    )
    enlarged = solve_modes(bigger, lam, temp_C, count=1)
    if not base or not enlarged:
        raise NumericError("no guided mode to compare in window_convergence_check")
    return abs(base[0].n_eff - enlarged[0].n_eff)


def slab_kappa(k0: float, n_core: float, n_a: float, n_b: float, thickness: float, m: int) -> float | None:
    """Transverse wavenumber of scalar slab mode ``m`` (0-based), or None.

    Solves kappa*d = m*pi + atan(gamma_a/kappa) + atan(gamma_b/kappa) by
    bisection; the left side minus the right is strictly increasing in
    kappa, so the bracket is robust.
    """
    contrast = n_core * n_core - max(n_a, n_b) ** 2
    if contrast <= 0:
        return None
    kappa_max = k0 * math.sqrt(contrast)
    qa = (k0 * k0) * (n_core * n_core - n_a * n_a)
    qb = (k0 * k0) * (n_core * n_core - n_b * n_b)

    def phase_defect(kappa: float) -> float:
        ga = math.sqrt(max(qa - kappa * kappa, 0.0))
        gb = math.sqrt(max(qb - kappa * kappa, 0.0))
        return kappa * thickness - math.atan2(ga, kappa) - math.atan2(gb, kappa) - m * math.pi

    hi = kappa_max * (1.0 - 1e-15)
    if phase_defect(hi) <= 0.0:
        return None
    lo = kappa_max * 1e-15
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if phase_defect(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def marcatili_index(
    geometry: WaveguideGeometry,
    lam: Wavelength,
    temp_C: float,
    mode_pair: tuple[int, int] = (1, 1),
) -> float:
    """Closed-form separable (Marcatili) effective-index approximation.

    ``mode_pair`` = (p, q) counts from 1 along width and height.  The
    horizontal slab sees superstrate on both sides; the vertical slab sees
    substrate below and superstrate above.  Raises
    :class:`CapabilityError` when either slab problem has no bound
    solution or the combined mode is evanescent.
    """
    p, q = mode_pair
    if p < 1 or q < 1:
        raise DomainError("mode_pair entries must be >= 1")
    n_core = sellmeier_index(geometry.core_material, lam, temp_C)
    n_sub = sellmeier_index(geometry.substrate_material, lam, temp_C)
    n_sup = geometry.superstrate_index
    if n_core <= max(n_sub, n_sup):
        raise CapabilityError("no positive index contrast; Marcatili mode unbound")
    k0 = 2.0 * math.pi / lam.um
    kx = slab_kappa(k0, n_core, n_sup, n_sup, geometry.core_width_um, p - 1)
    ky = slab_kappa(k0, n_core, n_sub, n_sup, geometry.core_height_um, q - 1)
    if kx is None or ky is None:
        raise CapabilityError(f"slab factor of mode pair {mode_pair} has no bound solution")
    beta2 = (k0 * n_core) ** 2 - kx * kx - ky * ky
    if beta2 <= (k0 * max(n_sub, n_sup)) ** 2:
        raise CapabilityError(f"mode pair {mode_pair} is evanescent in this geometry")
    return math.sqrt(beta2) / k0


class ModeSolverIndexProvider:
    """Effective index backed by the finite-difference mode solver.

    ``default_mode`` selects which eigenmode this provider reports when the
    caller does not ask for a specific one; this is how higher-order-mode
    conversion branches are wired into the phase-matching engine.  Results
    are cached per (wavelength, temperature, mode).
    """

    kind = "modesolver"

    def __init__(self, geometry: WaveguideGeometry, default_mode: int = 1):
        if default_mode < 1:
            raise DomainError("default_mode must be >= 1")
        self.geometry = geometry
        self.default_mode = default_mode
        self._cache: dict[tuple[float, float, int], float] = {}

    def effective_index(self, lam: Wavelength, temp_C: float, mode: int | None = None) -> float:
        mode = self.default_mode if mode is None else mode
        if mode < 1:
            raise CapabilityError(f"mode numbers start at 1, got {mode}")
        key = (lam.nm, temp_C, mode)
        if key not in self._cache:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ModeShortfallWarning)
                solutions = solve_modes(self.geometry, lam, temp_C, count=mode)
            if len(solutions) < mode:
                raise CapabilityError(
                    f"geometry guides only {len(solutions)} mode(s) at "
                    f"{lam.nm} nm, {temp_C} C; mode {mode} unavailable"
                )
            for sol in solutions:
                self._cache[(lam.nm, temp_C, sol.mode_index)] = sol.n_eff
        return self._cache[key]

    def __repr__(self):
        return f"ModeSolverIndexProvider(default_mode={self.default_mode})"


def field_to_csv_rows(solution: ModeSolution) -> list[str]:
    """Flatten a mode field to 'x_um,y_um,amplitude' rows (header included)."""
    rows = ["x_um,y_um,amplitude"]
    for j, yv in enumerate(solution.y_um):
        for i, xv in enumerate(solution.x_um):
            rows.append(f"{float(xv)!r},{float(yv)!r},{float(solution.field[j, i])!r}")
    return rows
