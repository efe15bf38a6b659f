"""Single-particle band structure of the Raman-coupled spin-1 Hamiltonian.

Momentum is measured in recoil units, so the three bare branches are the
shifted parabolas (k+2)^2 - delta, k^2 - epsilon, (k-2)^2 + delta coupled by
the Raman term on the (+1,0) and (0,-1) pairs.  The functions here evaluate
the coupled branches, locate minima of the lowest one, and classify points
or whole planes of the parameter space by minima count.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConvergenceError
from .params import ModelParams

DEFAULT_WINDOW = (-4.0, 4.0)
DEFAULT_POINTS = 2001
DEFAULT_TOL_DEG = 1e-6

_AXIS_NAMES = ("omega_R", "delta", "epsilon")


def build_hamiltonian(k, params):
    """3x3 Hamiltonian at quasimomentum k (recoil units).

    Accepts a scalar or an array of momenta; returns shape (..., 3, 3).
    """
    k = np.asarray(k, dtype=float)
    h = np.zeros(k.shape + (3, 3), dtype=complex)
    h[..., 0, 0] = (k + 2.0) ** 2 - params.delta
    h[..., 1, 1] = k**2 - params.epsilon
    h[..., 2, 2] = (k - 2.0) ** 2 + params.delta
    h[..., 0, 1] = h[..., 1, 0] = params.omega_R / 2.0
    h[..., 1, 2] = h[..., 2, 1] = params.omega_R / 2.0
    return h


def branch_energies(k, params):
    """Eigenvalues of the band Hamiltonian, ascending along the last axis."""
    h = build_hamiltonian(k, params)
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError:
        # batched solve failed; retry pointwise to name the offending momentum
        k = np.atleast_1d(np.asarray(k, dtype=float))
        for kv in k:
            try:
                np.linalg.eigvalsh(build_hamiltonian(kv, params))
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError(
                    f"eigensolver failed at k={kv!r}", context={"k": kv, "params": params}
                ) from exc
        raise


def lowest_branch(k, params):
    return branch_energies(k, params)[..., 0]


@dataclass(frozen=True)
class DispersionResult:
    """Branch energies on a momentum grid plus refined lowest-branch minima."""

    k: np.ndarray
    energies: np.ndarray  # shape (len(k), 3), ascending branches
    minima_k: np.ndarray
    minima_E: np.ndarray

    @property
    def n_minima(self):
        return len(self.minima_k)


def _refine_minimum(k0, h0, params):
    """Polish one local minimum of the lowest branch by parabolic iteration.

    Starts from a bracketing half-width of one grid step and keeps the
    iterate inside it, so a seed on a genuine discrete minimum converges to
    the interior stationary point to ~1e-12 in k.
    """
    kc, h = float(k0), float(h0)
    for _ in range(60):
        fl, fc, fr = lowest_branch(np.array([kc - h, kc, kc + h]), params)
        denom = fl - 2.0 * fc + fr
        if denom <= 0.0:
            h *= 0.5  # locally flat or concave sample; tighten and retry
        else:
            shift = 0.5 * h * (fl - fr) / denom
            kc += float(np.clip(shift, -h, h))
            h *= 0.5
        if h < 1e-13:
            break
    return kc, float(lowest_branch(kc, params))


def _grid_minima_seeds(k, e):
    """Indices (possibly fractional, for plateau midpoints) of grid minima."""
    seeds = []
    n = len(e)
    j = 1
    while j < n - 1:
        if e[j] < e[j - 1] and e[j] < e[j + 1]:
            seeds.append(float(j))
            j += 1
        elif e[j] < e[j - 1] and e[j] == e[j + 1]:
            # plateau: scan to its end, keep the midpoint if both sides rise
            j2 = j
            while j2 + 1 < n and e[j2 + 1] == e[j]:
                j2 += 1
            if j2 < n - 1 and e[j2 + 1] > e[j]:
                seeds.append(0.5 * (j + j2))
            j = j2 + 1
        else:
            j += 1
    return seeds


def dispersion(params, window=DEFAULT_WINDOW, n_points=DEFAULT_POINTS):
    """Evaluate the three branches on a uniform grid and locate lowest-branch minima.

    Interior grid minima (three-point condition, plateau ties resolved to the
    midpoint) are refined by bracketed parabolic iteration; window edges are
    never reported as minima.
    """
    lo, hi = float(window[0]), float(window[1])
    if not (hi > lo) or n_points < 3:
        raise ConfigError(f"bad dispersion window {window!r} / n_points={n_points}")
    k = np.linspace(lo, hi, int(n_points))
    energies = branch_energies(k, params)
    e0 = energies[:, 0]
    dk = k[1] - k[0]

    mins = []
    for seed in _grid_minima_seeds(k, e0):
        k_seed = lo + seed * dk
        kc, ec = _refine_minimum(k_seed, dk, params)
        # discard refinements that drifted onto a kink: require a discrete
        # minimum at the original grid resolution
        el, er = lowest_branch(np.array([kc - dk, kc + dk]), params)
        if not (el >= ec and er >= ec):
            continue
        mins.append((kc, ec))

    # merge duplicates from plateau seeds refining to the same point
    mins.sort()
    merged = []
    for kc, ec in mins:
        if merged and abs(kc - merged[-1][0]) < 0.5 * dk:
            if ec < merged[-1][1]:
                merged[-1] = (kc, ec)
            continue
        merged.append((kc, ec))

    mk = np.array([m[0] for m in merged])
    me = np.array([m[1] for m in merged])
    return DispersionResult(k=k, energies=energies, minima_k=mk, minima_E=me)


@dataclass(frozen=True)
class PhaseCell:
    """Minima count and degeneracy flag at one parameter point."""

    params: ModelParams
    n_minima: int
    degenerate: bool
    E_min: float
    k_min: float


def classify(params, tol_deg=DEFAULT_TOL_DEG, window=DEFAULT_WINDOW, n_points=DEFAULT_POINTS):
    """Count lowest-branch minima and flag near-degenerate ones.

    ``degenerate`` means at least two minima lie within ``tol_deg`` of the
    global minimum energy.  E_min/k_min refer to the global minimum.
    """
    disp = dispersion(params, window=window, n_points=n_points)
    if disp.n_minima == 0:
        raise ConvergenceError(
            "no interior minima found; widen the momentum window",
            context={"params": params, "window": window},
        )
    order = np.argsort(disp.minima_E)
    e_sorted = disp.minima_E[order]
    degenerate = disp.n_minima > 1 and (e_sorted[1] - e_sorted[0]) < tol_deg
    return PhaseCell(
        params=params,
        n_minima=disp.n_minima,
        degenerate=bool(degenerate),
        E_min=float(e_sorted[0]),
        k_min=float(disp.minima_k[order][0]),
    )


@dataclass(frozen=True)
class PhaseDiagramResult:
    """Grid of PhaseCells over two parameter axes."""

    axis1: str
    axis2: str
    values1: np.ndarray
    values2: np.ndarray
    cells: list  # row-major: cells[i1 * len(values2) + i2]

    def cell(self, i1, i2):
        return self.cells[i1 * len(self.values2) + i2]


def _axis_values(axis):
    name, (lo, hi), count = axis
    if name not in _AXIS_NAMES:
        raise ConfigError(f"unknown sweep axis {name!r}; expected one of {_AXIS_NAMES}")
    if count < 2:
        raise ConfigError(f"axis {name!r} needs at least 2 points, got {count}")
    return name, np.linspace(float(lo), float(hi), int(count))


def phase_diagram(axis1, axis2, fixed, tol_deg=DEFAULT_TOL_DEG, window=DEFAULT_WINDOW,
                  n_points=DEFAULT_POINTS):
    """Classify every cell of a 2-D parameter grid.

    ``axis1``/``axis2`` are (name, (lo, hi), count) with names among
    omega_R, delta, epsilon; ``fixed`` supplies the remaining parameters.
    """
    name1, vals1 = _axis_values(axis1)
    name2, vals2 = _axis_values(axis2)
    if name1 == name2:
        raise ConfigError(f"phase diagram axes must differ, both are {name1!r}")
    cells = []
    for v1 in vals1:
        for v2 in vals2:
            p = fixed.replace(**{name1: float(v1), name2: float(v2)})
            cells.append(classify(p, tol_deg=tol_deg, window=window, n_points=n_points))
    return PhaseDiagramResult(axis1=name1, axis2=name2, values1=vals1, values2=vals2,
                              cells=cells)


def phase_diagram_rows(result):
    """Flatten a PhaseDiagramResult into CSV rows.

    Column order is pinned: axis1, axis2, n_minima, degenerate, E_min, k_min.
    """
    rows = []
    for i1, v1 in enumerate(result.values1):
        for i2, v2 in enumerate(result.values2):
            c = result.cell(i1, i2)
            rows.append((float(v1), float(v2), c.n_minima, int(c.degenerate),
                         c.E_min, c.k_min))
    return rows
