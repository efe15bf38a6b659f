"""Exact diagonalization of the collective-spin Hamiltonian.

Works in the fully symmetric N-boson subspace of three modes, dimension
(N+1)(N+2)/2, with basis states |n_plus, n_minus> ordered lexicographically
(n_zero = N - n_plus - n_minus is implied).  Collective operators are sparse;
the ground state comes from a dense solve for small bases and from Lanczos
above a dimension cutoff.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .algebra import GENERATOR_LABELS, generator_matrix
from .errors import ConfigError, ConvergenceError
from .metrics import MomentSet
from .params import EffectiveCoefficients

DENSE_CUTOFF = 2000
DEFAULT_N_CAP = 300
RESIDUAL_TOL = 1e-10


class FockBasis:
    """Index bookkeeping and mode-transfer matrices for one atom number."""

    def __init__(self, n_atoms):
        if n_atoms < 1:
            raise ConfigError(f"atom number must be >= 1, got {n_atoms}")
        self.N = int(n_atoms)
        n = self.N
        self.dim = (n + 1) * (n + 2) // 2
        n_plus = np.concatenate([np.full(n - a + 1, a) for a in range(n + 1)])
        n_minus = np.concatenate([np.arange(n - a + 1) for a in range(n + 1)])
        self.n_plus = n_plus
        self.n_minus = n_minus
        self.n_zero = n - n_plus - n_minus
        # block offset of each n_plus value in the lexicographic ordering
        self._offsets = np.concatenate([[0], np.cumsum(np.arange(n + 1, 0, -1))])

    def index(self, n_plus, n_minus):
        return self._offsets[n_plus] + n_minus

    def _hop(self, delta_p, delta_m, amplitude):
        """Sparse matrix of a mode-changing monomial with given occupation shifts."""
        ok = (
            (self.n_plus + delta_p >= 0)
            & (self.n_minus + delta_m >= 0)
            & (self.n_plus + delta_p + self.n_minus + delta_m <= self.N)
        )
        src = np.nonzero(ok)[0]
        dst = self.index(self.n_plus[src] + delta_p, self.n_minus[src] + delta_m)
        data = amplitude(self.n_plus[src], self.n_minus[src], self.n_zero[src])
        return sp.csr_matrix((data, (dst, src)), shape=(self.dim, self.dim))

    def transfer(self, m, n):
        """a_m^dag a_n over the symmetric subspace; m, n in {+1, 0, -1}."""
        key = (m, n)
        if key not in self._transfer_cache:
            raise ConfigError(f"invalid mode pair {key!r}")
        return self._transfer_cache[key]

    @property
    def _transfer_cache(self):
        if not hasattr(self, "_tc"):
            d = {}
            d[(1, 1)] = sp.diags(self.n_plus.astype(float))
            d[(0, 0)] = sp.diags(self.n_zero.astype(float))
            d[(-1, -1)] = sp.diags(self.n_minus.astype(float))
            d[(1, 0)] = self._hop(1, 0, lambda p, m, z: np.sqrt((p + 1.0) * z))
            d[(-1, 0)] = self._hop(0, 1, lambda p, m, z: np.sqrt((m + 1.0) * z))
            d[(1, -1)] = self._hop(1, -1, lambda p, m, z: np.sqrt((p + 1.0) * m))
            d[(0, 1)] = d[(1, 0)].T.tocsr()
            d[(0, -1)] = d[(-1, 0)].T.tocsr()
            d[(-1, 1)] = d[(1, -1)].T.tocsr()
            self._tc = d
        return self._tc

    def collective(self, matrix3):
        """Second-quantized collective operator sum_mn G[m,n] a_m^dag a_n (sparse)."""
        modes = (1, 0, -1)
        op = sp.csr_matrix((self.dim, self.dim), dtype=complex)
        for i, m in enumerate(modes):
            for j, n in enumerate(modes):
                g = matrix3[i, j]
                if g != 0.0:
                    op = op + g * self.transfer(m, n)
        return op


@lru_cache(maxsize=8)
def _basis(n_atoms):
    return FockBasis(n_atoms)


def fock_basis(n_atoms):
    """Shared FockBasis instance for an atom number (cached)."""
    return _basis(int(n_atoms))


@dataclass(frozen=True)
class SymmetricFockState:
    """Ground-state amplitudes over the symmetric basis, with its energy."""

    N: int
    amplitudes: np.ndarray
    energy: float

    @property
    def basis(self):
        return fock_basis(self.N)


def build_effective_hamiltonian(coeffs, n_atoms):
    """Sparse collective Hamiltonian -q Fz^2 + hx Fx + hz Fz + hY FY."""
    basis = fock_basis(n_atoms)
    fz_diag = (basis.n_plus - basis.n_minus).astype(float)
    fy_diag = (basis.n_plus + basis.n_minus - 2.0 * basis.n_zero) / np.sqrt(3.0)
    diag = -coeffs.q * fz_diag**2 + coeffs.hz * fz_diag + coeffs.hY * fy_diag
    fx = basis.collective(generator_matrix("Jx"))
    return (coeffs.hx * fx + sp.diags(diag)).tocsr()


def ed_ground_state(coeffs, n_atoms, n_cap=DEFAULT_N_CAP):
    """Ground state of the collective Hamiltonian in the symmetric subspace.

    Dense solve up to dimension 2000, Lanczos with a fixed deterministic
    start vector above it.  The returned amplitude vector is real-gauged:
    the first component of maximal magnitude is rotated to the positive real
    axis, so degenerate or nearly degenerate ground spaces still resolve to a
    reproducible representative.
    """
    if not isinstance(coeffs, EffectiveCoefficients):
        raise ConfigError("coeffs must be EffectiveCoefficients")
    if n_atoms > n_cap:
        raise ConfigError(f"N={n_atoms} exceeds the configured cap {n_cap}")
    basis = fock_basis(n_atoms)
    h = build_effective_hamiltonian(coeffs, n_atoms)
    if basis.dim <= DENSE_CUTOFF:
        w, v = scipy.linalg.eigh(h.toarray(), subset_by_index=[0, 0])
        energy, vec = float(w[0]), v[:, 0].astype(complex)
    else:
        v0 = np.full(basis.dim, 1.0 / np.sqrt(basis.dim))
        try:
            w, v = eigsh(h, k=1, which="SA", v0=v0, maxiter=50 * basis.dim)
        except Exception as exc:
            raise ConvergenceError(
                f"Lanczos failed for N={n_atoms}", context={"N": n_atoms, "coeffs": coeffs}
            ) from exc
        energy, vec = float(w[0]), v[:, 0].astype(complex)
    residual = np.linalg.norm(h @ vec - energy * vec)
    if residual > RESIDUAL_TOL * max(1.0, abs(energy)):
        raise ConvergenceError(
            f"eigenpair residual {residual:.3e} exceeds tolerance",
            context={"N": n_atoms, "residual": residual},
        )
    vec = vec / np.linalg.norm(vec)
    i0 = int(np.argmax(np.abs(vec)))
    phase = vec[i0] / abs(vec[i0])
    vec = vec * phase.conjugate()
    return SymmetricFockState(N=int(n_atoms), amplitudes=vec, energy=energy)


def _apply_specs(state, matrices):
    basis = state.basis
    return [basis.collective(m) @ state.amplitudes for m in matrices]


def ed_moments(state, specs):
    """Means and symmetrized covariances of collective observables.

    ``specs`` is a list of CollectiveOperatorSpec; returns (means, cov) with
    cov[i, j] = <{F_i,F_j}>/2 - <F_i><F_j>.  Tiny negative variances from
    roundoff are floored at zero (they are bounded by 1e-12 in magnitude).
    """
    mats = [s.matrix() for s in specs]
    applied = _apply_specs(state, mats)
    psi = state.amplitudes
    means = np.array([np.vdot(psi, w).real for w in applied])
    raw = np.empty((len(specs), len(specs)))
    for i, wi in enumerate(applied):
        for j, wj in enumerate(applied):
            if j < i:
                raw[i, j] = raw[j, i]
            else:
                raw[i, j] = np.vdot(wi, wj).real  # Hermitian ops: Re gives the symmetrized part
    cov = raw - np.outer(means, means)
    d = np.diag(cov).copy()
    if np.any(d < -1e-12 * max(1.0, float(np.max(np.abs(raw))))):
        raise ConvergenceError("variance fell below the roundoff floor", context={"diag": d})
    np.fill_diagonal(cov, np.maximum(d, 0.0))
    return means, cov


def ed_moment_set(state):
    """Full eight-operator MomentSet of an ED state."""
    from .algebra import CollectiveOperatorSpec

    specs = [CollectiveOperatorSpec.for_label(lbl) for lbl in GENERATOR_LABELS]
    means, cov = ed_moments(state, specs)
    return MomentSet.from_arrays(state.N, means, cov)
