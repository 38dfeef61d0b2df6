"""Closed-form machinery for the 1D transmission eigenvalue problem.

The operator is -(a u')' on (0,1) with a = 1 on (0,b) and a = a_R on (b,1),
a Dirichlet condition at x=0 and the Robin condition a_R u'(1) + c u(1) = 0.
Eigenvalues are the roots of the determinant of a 2x2 transmission matrix;
the order of the zero equals the ascent of the eigenvalue, and the
generalized eigenfunctions are lambda-derivatives of the eigenfunction
family.  All contour integrals use the trapezoid rule on circles, certified
by node doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ModelParams",
    "EigenConfig",
    "FundamentalValues",
    "Jet",
    "ContourNotConvergedError",
    "NoRootHereError",
    "NewtonDivergedError",
    "DegenerateParametrizationError",
    "fundamental_solutions",
    "transmission_matrix",
    "det_transmission",
    "taylor_coefficients",
    "default_radius",
    "ascent_of",
    "polish_eigenvalue",
    "eigenfunction_jet",
]

DEFAULT_NODES = 64
ASCENT_TOL = 1e-6
CERT_RTOL = 1e-8


class ContourNotConvergedError(RuntimeError):
    """Node doubling changed a requested Taylor coefficient too much."""


class NoRootHereError(RuntimeError):
    """ascent_of was called at a point that is not a root of det M."""


class NewtonDivergedError(RuntimeError):
    """polish_eigenvalue did not converge."""


class DegenerateParametrizationError(RuntimeError):
    """Both candidate null vectors of M vanish (invalid input)."""


@dataclass(frozen=True)
class ModelParams:
    """Benchmark-defining triple: breakpoint b, right diffusion a_R, Robin c.

    The diffusion on (0, b) is fixed to 1.
    """

    b: float
    a_R: complex
    c: complex

    def __post_init__(self):
        if not 0.0 < self.b < 1.0:
            raise ValueError(f"b must be in (0,1), got {self.b}")
        if not np.real(self.a_R) > 0.0:
            raise ValueError(f"Re(a_R) must be positive, got {self.a_R}")


@dataclass
class EigenConfig:
    """A parameter set together with its eigenvalue and certified ascent."""

    params: ModelParams
    lam: complex
    ascent: int
    residuals: list = field(default_factory=list)

    def __post_init__(self):
        if self.lam == 0:
            raise ValueError("lambda = 0 is not supported")
        if self.ascent < 1:
            raise ValueError("ascent must be >= 1")


@dataclass
class FundamentalValues:
    """Values of v^L, v^R and their x-derivatives at a point."""

    vL: complex
    dvL: complex
    vR: complex
    dvR: complex


def _mu(params: ModelParams, lam):
    """Principal square roots sqrt(lambda), sqrt(lambda / a_R)."""
    lam = np.asarray(lam, dtype=complex)
    return np.sqrt(lam), np.sqrt(lam / params.a_R)


def _vR_coeffs(params: ModelParams, lam):
    """Coefficients (c1, c2) of v^R = c1 sin(mu_R x) + c2 cos(mu_R x).

    Chosen so that a_R dv^R(1) + c v^R(1) = 0 (the stated Robin condition;
    the sign convention makes v^R(x) = mu cos(mu(1-x)) for a_R=1, c=0).
    """
    a_R, c = params.a_R, params.c
    _, muR = _mu(params, lam)
    c1 = a_R * muR * np.sin(muR) - c * np.cos(muR)
    c2 = a_R * muR * np.cos(muR) + c * np.sin(muR)
    return c1, c2


def fundamental_solutions(params: ModelParams, lam, x) -> FundamentalValues:
    """Evaluate v^L, v^R and their derivatives at x (scalar or array)."""
    muL, muR = _mu(params, lam)
    c1, c2 = _vR_coeffs(params, lam)
    x = np.asarray(x, dtype=float)
    vL = np.sin(muL * x)
    dvL = muL * np.cos(muL * x)
    vR = c1 * np.sin(muR * x) + c2 * np.cos(muR * x)
    dvR = muR * (c1 * np.cos(muR * x) - c2 * np.sin(muR * x))
    return FundamentalValues(vL=vL, dvL=dvL, vR=vR, dvR=dvR)


def transmission_matrix(params: ModelParams, lam: complex) -> np.ndarray:
    """2x2 matrix coupling the left/right ansatz coefficients at x=b."""
    f = fundamental_solutions(params, lam, params.b)
    return np.array(
        [[f.vL, -f.vR], [f.dvL, -params.a_R * f.dvR]], dtype=complex
    )


def det_transmission(params: ModelParams, lam) -> complex:
    """det of the transmission matrix; lambda is an eigenvalue iff zero.

    Vectorized over lam.  Up to a global sign this is independent of the
    square-root branch.
    """
    f = fundamental_solutions(params, lam, params.b)
    return f.vL * (-params.a_R * f.dvR) + f.vR * f.dvL


def default_radius(lam0: complex) -> float:
    """Scale-aware default contour radius."""
    return max(1e-2, 1e-3 * abs(lam0))


def _trapezoid_taylor(f_on_circle, lam0, n, radius, nodes):
    """Taylor coefficients 0..n of f about lam0 from one trapezoid pass."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    z = radius * np.exp(1j * theta)
    fv = f_on_circle(lam0 + z)
    ell = np.arange(n + 1)
    # gamma_l = (1/n) sum_k f_k exp(-i l theta_k) / radius^l
    phase = np.exp(-1j * np.outer(ell, theta))
    return (phase @ fv) / nodes / radius**ell


def taylor_coefficients(
    params: ModelParams,
    lambda0: complex,
    n: int,
    radius: float,
    nodes: int = DEFAULT_NODES,
) -> np.ndarray:
    """Taylor coefficients gamma_0..gamma_n of det M about lambda0.

    Computed by the trapezoid rule on |lambda - lambda0| = radius applied to
    Cauchy's integral; certified by agreement with a doubled node count.
    """
    if n < 0 or radius <= 0 or nodes < 16:
        raise ValueError("need n >= 0, radius > 0, nodes >= 16")
    f = lambda z: det_transmission(params, z)
    ell = np.arange(n + 1)
    g1 = _trapezoid_taylor(f, lambda0, n, radius, nodes)
    # certify by node doubling; escalate a few times before giving up so that
    # large |lambda0| (fast oscillation on the circle) stays usable
    m = nodes
    while True:
        g2 = _trapezoid_taylor(f, lambda0, n, radius, 2 * m)
        scale = np.max(np.abs(g2) * radius**ell)
        diff = np.abs(g2 - g1) * radius**ell
        if scale == 0.0 or np.all(diff <= CERT_RTOL * scale):
            return g2
        if 2 * m >= 16 * nodes:
            raise ContourNotConvergedError(
                f"contour rule not converged at nodes={2 * m} "
                f"(max scaled change {np.max(diff) / scale:.3e})"
            )
        g1, m = g2, 2 * m


def scaled_magnitudes(gamma: np.ndarray, radius: float) -> np.ndarray:
    """|gamma_l| radius^l normalized by the dominant term (dimensionless)."""
    ell = np.arange(len(gamma))
    mags = np.abs(gamma) * radius**ell
    top = np.max(mags)
    return mags / top if top > 0 else mags


def ascent_of(
    params: ModelParams,
    lambda0: complex,
    radius: float | None = None,
    nodes: int = DEFAULT_NODES,
    max_order: int = 6,
) -> int:
    """Order of the zero of det M at lambda0 (= ascent of the eigenvalue)."""
    rho = default_radius(lambda0) if radius is None else radius
    gamma = taylor_coefficients(params, lambda0, max_order, rho, nodes)
    mags = scaled_magnitudes(gamma, rho)
    if mags[0] > ASCENT_TOL:
        raise NoRootHereError(
            f"det M does not vanish at {lambda0} (scaled |gamma_0| = {mags[0]:.3e})"
        )
    for ell in range(1, max_order + 1):
        if mags[ell] > ASCENT_TOL:
            return ell
    raise NoRootHereError(
        f"no nonvanishing Taylor coefficient up to order {max_order}"
    )


def _det_scale(params: ModelParams, lam0: complex, nodes: int = 32) -> float:
    """max |det M| on the radius-1 circle around lam0."""
    theta = 2.0 * np.pi * np.arange(nodes) / nodes
    return float(np.max(np.abs(det_transmission(params, lam0 + np.exp(1j * theta)))))


def polish_eigenvalue(
    params: ModelParams,
    lambda_guess: complex,
    max_steps: int = 50,
    rtol: float = 1e-12,
) -> complex:
    """Newton-refine a root of det M, derivative from the contour rule.

    Converged when |det M| <= rtol * (max |det M| on a radius-1 circle).
    """
    if lambda_guess == 0:
        raise ValueError("lambda = 0 is not supported")
    lam = complex(lambda_guess)
    for _ in range(max_steps):
        scale = _det_scale(params, lam)
        f0 = det_transmission(params, lam)
        if abs(f0) <= rtol * scale:
            return lam
        rho = default_radius(lam)
        gamma = taylor_coefficients(params, lam, 1, rho)
        if gamma[1] == 0:
            raise NewtonDivergedError("vanishing derivative of det M")
        step = -gamma[0] / gamma[1]
        # plain damping: halve the step while |det| does not decrease
        lam_new = lam + step
        for _ in range(20):
            if abs(det_transmission(params, lam_new)) < abs(f0):
                break
            step /= 2.0
            lam_new = lam + step
        lam = lam_new
        if abs(lam) > 1e6:
            raise NewtonDivergedError(f"iterate left plausibility region: {lam}")
    scale = _det_scale(params, lam)
    if abs(det_transmission(params, lam)) <= rtol * scale:
        return lam
    raise NewtonDivergedError(
        f"no convergence within {max_steps} steps (|det| = "
        f"{abs(det_transmission(params, lam)):.3e}, scale = {scale:.3e})"
    )


@dataclass
class Jet:
    """Generalized-eigenfunction jet w_l = d^{l-1} u / d lambda^{l-1}.

    samples[l-1] evaluates (w_l, w_l') at points of [0,1]; the underlying
    family u(lambda, x) uses the smooth null-vector parametrization of the
    transmission matrix and the derivatives come from Cauchy-integral
    differentiation on a circle around lambda0.
    """

    params: ModelParams
    lam0: complex
    order: int
    _contour_z: np.ndarray
    _weights: np.ndarray  # (order, nodes) Cauchy differentiation weights
    _A1: np.ndarray
    _A2: np.ndarray

    @property
    def samples(self):
        return [self._make_sample(ell) for ell in range(1, self.order + 1)]

    def _family_values(self, x):
        """u(lambda_k, x) and du/dx for all contour nodes; shape (k, nx)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lam = self.lam0 + self._contour_z
        f = fundamental_solutions(self.params, lam[:, None], x[None, :])
        left = x[None, :] <= self.params.b
        val = np.where(left, self._A1[:, None] * f.vL, self._A2[:, None] * f.vR)
        der = np.where(left, self._A1[:, None] * f.dvL, self._A2[:, None] * f.dvR)
        return val, der

    def _make_sample(self, ell: int):
        w = self._weights[ell - 1]

        def evaluate(x):
            val, der = self._family_values(x)
            return w @ val, w @ der

        return evaluate

    def value_matrix(self, x):
        """(order, nx) arrays of w_l values and derivatives at points x."""
        val, der = self._family_values(x)
        return self._weights @ val, self._weights @ der


def eigenfunction_jet(
    params: ModelParams,
    lambda0: complex,
    order: int,
    radius: float | None = None,
    nodes: int = DEFAULT_NODES,
) -> Jet:
    """Jet of generalized eigenfunctions w_1..w_order at the root lambda0."""
    if order < 1:
        raise ValueError("order must be >= 1")
    rho = default_radius(lambda0) if radius is None else radius

    M0 = transmission_matrix(params, lambda0)
    norm = np.max(np.abs(M0))
    if norm == 0.0:
        raise DegenerateParametrizationError("transmission matrix is zero")
    # smooth null-vector family: (A1, A2) = (M12, -M11), fallback (M22, -M21)
    use_first = max(abs(M0[0, 1]), abs(M0[0, 0])) > 1e-12 * norm

    def coeffs_at(m):
        theta = 2.0 * np.pi * np.arange(m) / m
        z = rho * np.exp(1j * theta)
        f = fundamental_solutions(params, lambda0 + z, params.b)
        if use_first:
            A1, A2 = -f.vR, -f.vL
        else:
            A1, A2 = -params.a_R * f.dvR, -f.dvL
        return theta, z, A1, A2

    # certification mirrors taylor_coefficients: the lambda-Taylor
    # coefficients of the null-vector functions must be node-stable
    ell = np.arange(order)

    def taylor_of(A, theta, m):
        return np.exp(-1j * np.outer(ell, theta)) @ A / m / rho**ell

    m = nodes
    theta, z, A1, A2 = coeffs_at(m)
    t1 = np.concatenate([taylor_of(A1, theta, m), taylor_of(A2, theta, m)])
    while True:
        theta, z, A1, A2 = coeffs_at(2 * m)
        t2 = np.concatenate(
            [taylor_of(A1, theta, 2 * m), taylor_of(A2, theta, 2 * m)]
        )
        scale = np.max(np.abs(t2) * np.concatenate([rho**ell, rho**ell]))
        diff = np.abs(t2 - t1) * np.concatenate([rho**ell, rho**ell])
        if scale == 0.0 or np.all(diff <= CERT_RTOL * scale):
            break
        if 2 * m >= 16 * nodes:
            raise ContourNotConvergedError("jet contour rule not converged")
        t1, m = t2, 2 * m
    n = 2 * m
    theta = 2.0 * np.pi * np.arange(n) / n

    if max(np.max(np.abs(A1)), np.max(np.abs(A2))) == 0.0:
        raise DegenerateParametrizationError("both null-vector candidates vanish")

    # w_l = (l-1)! * (Taylor coefficient l-1 of u(lambda, x)); the trapezoid
    # rule turns that into a fixed weight vector over the contour nodes.
    ells = np.arange(order)
    fact = np.array([float(math.factorial(k)) for k in ells])
    weights = (
        fact[:, None] * np.exp(-1j * np.outer(ells, theta)) / n / rho ** ells[:, None]
    )
    return Jet(
        params=params,
        lam0=lambda0,
        order=order,
        _contour_z=z,
        _weights=weights,
        _A1=A1,
        _A2=A2,
    )
