"""Collective-spin moment sets and squeezing metrics.

A MomentSet is backend-agnostic: exact diagonalization, the Gaussian
expansion, and the mean-field GP solver all reduce their states to first and
second moments of the eight collective observables, and every metric here is
a function of those moments alone.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import GENERATOR_LABELS, CollectiveOperatorSpec, generator_matrix, generator_stack
from .errors import MomentInputError

_IDX = {lbl: i for i, lbl in enumerate(GENERATOR_LABELS)}

# folding tolerance for the theta seam at pi (minima at pi are reported as 0;
# theta and theta + pi label the same quadrature pair, so the fold is exact)
_THETA_SEAM = 1e-7


def _canon(a, b):
    return (a, b) if _IDX[a] <= _IDX[b] else (b, a)


@dataclass
class MomentSet:
    """First and symmetrized central second moments of collective observables.

    ``means`` maps operator labels to <F_a>; ``covariances`` maps canonical
    label pairs to Cov(F_a, F_b) = <{F_a,F_b}>/2 - <F_a><F_b>.  Partial sets
    are allowed; metrics raise MomentInputError when an entry they need is
    missing.
    """

    N: int
    means: dict = field(default_factory=dict)
    covariances: dict = field(default_factory=dict)

    @classmethod
    def from_arrays(cls, N, mean_vec, cov_mat, labels=GENERATOR_LABELS):
        means = {lbl: float(mean_vec[i]) for i, lbl in enumerate(labels)}
        covs = {}
        for i, a in enumerate(labels):
            for j, b in enumerate(labels):
                if i <= j:
                    covs[_canon(a, b)] = float(cov_mat[i, j])
        return cls(N=int(N), means=means, covariances=covs)

    def mean(self, label):
        try:
            return self.means[label]
        except KeyError:
            raise MomentInputError(f"moment set has no mean for {label!r}") from None

    def cov(self, a, b):
        try:
            return self.covariances[_canon(a, b)]
        except KeyError:
            raise MomentInputError(f"moment set has no covariance for ({a!r}, {b!r})") from None

    def mean_of(self, spec):
        w = spec.coefficients
        return sum(w[i] * self.mean(lbl) for i, lbl in enumerate(GENERATOR_LABELS) if w[i] != 0.0)

    def cov_of(self, spec_a, spec_b):
        wa, wb = spec_a.coefficients, spec_b.coefficients
        total = 0.0
        for i, la in enumerate(GENERATOR_LABELS):
            if wa[i] == 0.0:
                continue
            for j, lb in enumerate(GENERATOR_LABELS):
                if wb[j] == 0.0:
                    continue
                total += wa[i] * wb[j] * self.cov(la, lb)
        return total

    def variance_of(self, spec):
        return self.cov_of(spec, spec)

    def has_full_block(self):
        if set(GENERATOR_LABELS) - set(self.means):
            return False
        for i, a in enumerate(GENERATOR_LABELS):
            for b in GENERATOR_LABELS[i:]:
                if (a, b) not in self.covariances:
                    return False
        return True

    def to_arrays(self):
        """Full (means 8-vector, covariance 8x8) or MomentInputError."""
        if not self.has_full_block():
            raise MomentInputError("moment set does not cover the full operator basis")
        m = np.array([self.means[lbl] for lbl in GENERATOR_LABELS])
        c = np.empty((8, 8))
        for i, a in enumerate(GENERATOR_LABELS):
            for j, b in enumerate(GENERATOR_LABELS):
                c[i, j] = self.covariances[_canon(a, b)]
        return m, c

    def validate(self, psd_tol=1e-9, var_floor=-1e-12):
        """Check symmetry-by-construction PSD and variance-floor invariants."""
        for (a, b), v in self.covariances.items():
            if a == b and v < var_floor:
                raise MomentInputError(f"variance of {a} is {v}, below the floor")
        if self.has_full_block():
            _, c = self.to_arrays()
            w = np.linalg.eigvalsh(c)
            scale = max(1.0, float(np.max(np.abs(c))))
            if w[0] < -psd_tol * scale:
                raise MomentInputError(f"covariance matrix not PSD: min eigenvalue {w[0]}")
        return self


def xi_x(moments):
    """Variance of the transverse collective spin over the atom number."""
    return moments.cov("Jx", "Jx") / moments.N


def quadratures(theta):
    """Weight vectors of the rotated quadrature pair at angle theta.

    Returns (plus, minus): cos(t) Jx + sin(t) Qyz and cos(t) Qzx + sin(t) Jy.
    """
    c, s = math.cos(theta), math.sin(theta)
    plus = CollectiveOperatorSpec.from_weights({"Jx": c, "Qyz": s})
    minus = CollectiveOperatorSpec.from_weights({"Qzx": c, "Jy": s})
    return plus, minus


def xi_dcz(moments, theta):
    """Two-quadrature squeezing parameter at angle theta (shot-noise normalized)."""
    plus, _ = quadratures(theta)
    _, minus = quadratures(theta + math.pi / 2.0)
    num = moments.variance_of(plus) + moments.variance_of(minus)
    return num / (2.0 * moments.N)


def xi_uv(moments, theta):
    """Quadrupole-normalized squeezing parameter at angle theta.

    Uses |<F_Y>| as the denominator scale; raises when that mean is too close
    to zero for the ratio to be meaningful.
    """
    mean_y = moments.mean("Y")
    if abs(mean_y) < 1e-9 * moments.N:
        raise MomentInputError(
            f"|<F_Y>| = {abs(mean_y)} is below 1e-9*N; xi_uv denominator is degenerate"
        )
    plus, _ = quadratures(theta)
    _, minus = quadratures(theta + math.pi / 2.0)
    num = moments.variance_of(plus) + moments.variance_of(minus)
    return num / (math.sqrt(3.0) * abs(mean_y))


_METRICS = {"dcz": xi_dcz, "uv": xi_uv}


def optimize_theta(moments, metric="dcz", n_scan=360):
    """Minimize a squeezing metric over the quadrature angle on [0, pi).

    Dense scan followed by bracketed parabolic refinement; exact scan ties
    resolve to the smallest angle, and a refined angle within 1e-9 of pi is
    reported as 0 (the two are the same quadrature pair).

    Returns (theta_star, xi_star).
    """
    try:
        fn = _METRICS[metric]
    except KeyError:
        raise MomentInputError(f"unknown squeezing metric {metric!r}; use 'dcz' or 'uv'") from None

    def f(theta):
        return fn(moments, theta % math.pi)

    thetas = np.arange(n_scan) * (math.pi / n_scan)
    values = np.array([f(t) for t in thetas])
    # smallest angle wins on ties; the tolerance absorbs float noise on flat
    # objectives, and the quadratic form in 2*theta has no other near-ties
    vmin = float(np.min(values))
    i0 = int(np.argmax(values <= vmin + 1e-12 * max(1.0, abs(vmin))))

    tc, h = float(thetas[i0]), math.pi / n_scan
    for _ in range(60):
        fl, fc, fr = f(tc - h), f(tc), f(tc + h)
        denom = fl - 2.0 * fc + fr
        if denom <= 0.0:
            h *= 0.5
        else:
            tc += float(np.clip(0.5 * h * (fl - fr) / denom, -h, h))
            h *= 0.5
        if h < 1e-12:
            break
    theta_star = tc % math.pi
    if math.pi - theta_star < _THETA_SEAM:
        theta_star = 0.0
    return theta_star, f(theta_star)


def rotation_coefficients(angle):
    """8x8 map of basis operators under conjugation by exp(-i angle Jy).

    For spin 1 the rotation is the degree-2 polynomial
    exp(-i a Jy) = I - i sin(a) Jy + (cos(a) - 1) Jy^2, and conjugation keeps
    operators inside the traceless Hermitian basis, so the map is exact.
    """
    jy = generator_matrix("Jy")
    eye = np.eye(3, dtype=complex)
    u = eye - 1j * math.sin(angle) * jy + (math.cos(angle) - 1.0) * (jy @ jy)
    stack = generator_stack()
    rotated = u.conj().T @ stack @ u
    # expand each rotated generator over the basis: c_gh = tr(G'_g G_h)/2
    coeff = 0.5 * np.einsum("gij,hji->gh", rotated, stack)
    if np.max(np.abs(coeff.imag)) > 1e-12:
        raise AssertionError("rotation coefficients acquired an imaginary part")
    return coeff.real


def rf_rotate(moments, angle):
    """Transform a full moment set by a collective rotation about Jy.

    Models the detection pulse that maps the squeezed quadrature onto a
    population-measurable axis.  Requires means and the complete covariance
    block; raises MomentInputError otherwise.
    """
    mean_vec, cov_mat = moments.to_arrays()
    c = rotation_coefficients(angle)
    return MomentSet.from_arrays(moments.N, c @ mean_vec, c @ cov_mat @ c.T)


def populations(moments):
    """Component fractions (rho_m1, rho_0, rho_p1) from the diagonal means.

    Exact identities: the quadrupole mean fixes n_0 and the longitudinal spin
    fixes the +1/-1 split; the three fractions sum to one by construction.
    """
    n = moments.N
    mz = moments.mean("Jz")
    my = moments.mean("Y")
    n0 = (n - math.sqrt(3.0) * my) / 3.0
    npl = (n - n0 + mz) / 2.0
    nmi = (n - n0 - mz) / 2.0
    return nmi / n, n0 / n, npl / n


@dataclass(frozen=True)
class SqueezingReport:
    """Flat report of the squeezing metrics and populations for one state."""

    N: int
    xi_x: float
    xi_dcz_min: float
    theta_dcz: float
    xi_uv_min: float
    theta_uv: float
    rho_m1: float
    rho_0: float
    rho_p1: float
    extras: dict = field(default_factory=dict)

    def to_dict(self):
        d = {
            "N": self.N,
            "xi_x": self.xi_x,
            "xi_dcz_min": self.xi_dcz_min,
            "theta_dcz": self.theta_dcz,
            "xi_uv_min": self.xi_uv_min,
            "theta_uv": self.theta_uv,
            "rho_m1": self.rho_m1,
            "rho_0": self.rho_0,
            "rho_p1": self.rho_p1,
        }
        d.update(self.extras)
        return d


def build_report(moments, extras=None):
    """Evaluate all metrics on one moment set and bundle them."""
    moments.validate()
    t_dcz, v_dcz = optimize_theta(moments, "dcz")
    t_uv, v_uv = optimize_theta(moments, "uv")
    rho_m1, rho_0, rho_p1 = populations(moments)
    return SqueezingReport(
        N=moments.N,
        xi_x=xi_x(moments),
        xi_dcz_min=v_dcz,
        theta_dcz=t_dcz,
        xi_uv_min=v_uv,
        theta_uv=t_uv,
        rho_m1=rho_m1,
        rho_0=rho_0,
        rho_p1=rho_p1,
        extras=dict(extras or {}),
    )
