"""
Analytic side of the toolkit: Mittag-Leffler series, scale functions of the stable
process, Laplace exponents and the closed-form bounds the simulations are checked against.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma, gammaln
from scipy.stats import poisson

from slt.errors import NumericalError, ParameterError, UnsupportedRangeError

logger = logging.getLogger(__name__)

ML_MAX_ARGUMENT = 100.0
ML_TOLERANCE = 1e-16
ML_MAX_TERMS = 1 << 13


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")


def _integrate(
    f: Callable[[float], float], lo: float, hi: float, max_abserr: float, **kwargs: Any
) -> Tuple[float, float]:
    """scipy quad that raises :class:`NumericalError` when a warning comes with a large error estimate."""
    result = quad(f, lo, hi, full_output=1, limit=kwargs.pop("limit", 200), **kwargs)
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        diagnostics: Dict[str, Any] = {"lo": lo, "hi": hi, "abserr": abserr, "neval": result[2].get("neval")}
        if abserr > max_abserr:
            raise NumericalError("quadrature did not converge", diagnostics)
        logger.debug("quadrature warning accepted: %s", diagnostics)
    return value, abserr


# --- Mittag-Leffler -----------------------------------------------------------------


def mittag_leffler(
    rho: float,
    beta: float,
    x: float,
    tol: float = ML_TOLERANCE,
    max_argument: float = ML_MAX_ARGUMENT,
) -> float:
    """
    Two-parameter Mittag-Leffler function E_{rho,beta}(x) = sum_k x^k / Gamma(beta + k rho).

    Terms are summed until they decrease below ``tol * max(1, |partial sum|)``.

    Raises:
        UnsupportedRangeError: If ``|x|`` exceeds ``max_argument``
    """
    if not rho > 0.0:
        raise ParameterError(f"rho must be positive, got {rho}")
    if not beta > 0.0:
        raise ParameterError(f"beta must be positive, got {beta}")
    if not tol > 0.0:
        raise ParameterError(f"tol must be positive, got {tol}")
    if abs(x) > max_argument:
        raise UnsupportedRangeError(f"|x| = {abs(x)} exceeds the supported range {max_argument}")
    if x == 0.0:
        return float(1.0 / gamma(beta))

    log_x = math.log(abs(x))
    n = 32
    while True:
        k = np.arange(n)
        log_mag = k * log_x - gammaln(beta + k * rho)
        terms = np.exp(log_mag)
        if x < 0.0:
            terms[1::2] *= -1.0
        partial = np.cumsum(terms)
        peak = int(np.argmax(log_mag))
        done = np.flatnonzero((k > peak) & (np.abs(terms) <= tol * np.maximum(1.0, np.abs(partial))))
        if done.size:
            return float(partial[done[0]])
        if n >= ML_MAX_TERMS:
            raise NumericalError(
                "Mittag-Leffler series did not settle", {"rho": rho, "beta": beta, "x": x, "terms": n}
            )
        n *= 2


@dataclass(frozen=True)
class MLParams:
    """E_{rho,beta} with rho = 1 + alpha in (1, 2)."""

    rho: float
    beta: float
    tol: float = ML_TOLERANCE

    def __post_init__(self) -> None:
        if not 1.0 < self.rho < 2.0:
            raise ParameterError(f"rho must lie in (1, 2), got {self.rho}")
        if not self.beta > 0.0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if not self.tol > 0.0:
            raise ParameterError(f"tol must be positive, got {self.tol}")

    def __call__(self, x: float, max_argument: float = ML_MAX_ARGUMENT) -> float:
        return mittag_leffler(self.rho, self.beta, x, self.tol, max_argument)


# --- Scale functions ----------------------------------------------------------------


def scale_W(alpha: float, q: float, x: float, max_argument: float = ML_MAX_ARGUMENT) -> float:
    """q-scale function W^(q)(x) = x^alpha E_{1+alpha,1+alpha}(q x^(1+alpha))."""
    _check_alpha(alpha)
    if q < 0.0:
        raise ParameterError(f"q must be non-negative, got {q}")
    if x < 0.0:
        raise ParameterError(f"x must be non-negative, got {x}")
    if x == 0.0:
        return 0.0
    rho = 1.0 + alpha
    return x**alpha * mittag_leffler(rho, rho, q * x**rho, max_argument=max_argument)


def scale_Z(alpha: float, q: float, x: float, max_argument: float = ML_MAX_ARGUMENT) -> float:
    """Z^(q)(x) = E_{1+alpha}(q x^(1+alpha))."""
    _check_alpha(alpha)
    if q < 0.0:
        raise ParameterError(f"q must be non-negative, got {q}")
    if x < 0.0:
        raise ParameterError(f"x must be non-negative, got {x}")
    rho = 1.0 + alpha
    return mittag_leffler(rho, 1.0, q * x**rho, max_argument=max_argument)


def scale_W_laplace(alpha: float, q: float, eta: float) -> float:
    """
    Numerical Laplace transform int_0^inf e^(-eta x) W^(q)(x) dx.

    The integrand decays like e^(-(eta - q^(1/(1+alpha))) x); the range is cut where it
    has fallen by e^-40.
    """
    _check_alpha(alpha)
    rho = 1.0 + alpha
    if not eta**rho > q:
        raise ParameterError(f"need eta^(1+alpha) > q, got eta={eta}, q={q}")
    upper = 40.0 / (eta - q ** (1.0 / rho))
    max_argument = max(ML_MAX_ARGUMENT, 1.01 * q * upper**rho)
    value, _ = _integrate(
        lambda x: math.exp(-eta * x) * scale_W(alpha, q, x, max_argument),
        0.0,
        upper,
        max_abserr=1e-8,
        epsabs=0.0,
        epsrel=1e-11,
    )
    return value


# --- Restricted-process exponent ----------------------------------------------------


def theta_b_closed(alpha: float, a: float, b: float, q: float) -> float:
    """
    Laplace exponent of the inverse local time at 0 of the process restricted to [0, b].

    With time-scale ``a`` the exponent is a * Theta_1(q / a): the argument is rescaled and so is
    the result, which a bare substitution of q / a would leave at the a = 1 normalisation.
    """
    _check_alpha(alpha)
    _check_restricted(a, b, q)
    if q == 0.0:
        return 0.0
    rho = 1.0 + alpha
    arg = q * b**rho / a
    ratio = (mittag_leffler(rho, 1.0 - alpha, arg) - 1.0 / gamma(1.0 - alpha)) / mittag_leffler(rho, 1.0, arg)
    return a * b ** (-alpha) * ratio


def theta_b_integral(alpha: float, a: float, b: float, q: float) -> float:
    """
    Same exponent from (1/Z^(q)(b)) int_0^b double-tail(b - z) q W^(q)(z) dz.

    The (b - z)^(-alpha) singularity is removed with z = b - v^(1/(1-alpha)).
    """
    _check_alpha(alpha)
    _check_restricted(a, b, q)
    if q == 0.0:
        return 0.0
    q1 = q / a
    power = 1.0 / (1.0 - alpha)
    const = q1 / ((1.0 - alpha) * gamma(1.0 - alpha))

    def integrand(v: float) -> float:
        return const * scale_W(alpha, q1, max(b - v**power, 0.0))

    value, _ = _integrate(integrand, 0.0, b ** (1.0 - alpha), max_abserr=1e-10, epsabs=1e-15, epsrel=1e-13)
    return a * value / scale_Z(alpha, q1, b)


def _check_restricted(a: float, b: float, q: float) -> None:
    if not a > 0.0:
        raise ParameterError(f"a must be positive, got {a}")
    if not b > 0.0:
        raise ParameterError(f"b must be positive, got {b}")
    if q < 0.0:
        raise ParameterError(f"q must be non-negative, got {q}")


# --- Subordinators and passage probabilities ----------------------------------------


def laplace_tau0(alpha: float, xi: float) -> float:
    """Laplace exponent (1+alpha) xi^(alpha/(1+alpha)) of the inverse local time at 0."""
    _check_alpha(alpha)
    if xi < 0.0:
        raise ParameterError(f"xi must be non-negative, got {xi}")
    return (1.0 + alpha) * xi ** (alpha / (1.0 + alpha))


def subordinator_theta(alpha: float, q: float, c: float, xi: float) -> float:
    """Laplace exponent c Gamma(1 - alpha/q) xi^(alpha/q) of the marked-count subordinator."""
    _check_alpha(alpha)
    if not q > alpha:
        raise ParameterError(f"q={q} must exceed alpha={alpha}")
    if xi < 0.0:
        raise ParameterError(f"xi must be non-negative, got {xi}")
    return c * gamma(1.0 - alpha / q) * xi ** (alpha / q)


def lemma7_prob(alpha: float, y: float) -> float:
    """
    P(T_y < lambda) for an independent lambda ~ Exp(1) and a level y > 0.
    """
    _check_alpha(alpha)
    if not y > 0.0:
        raise ParameterError(f"y must be positive, got {y}")
    rho = 1.0 + alpha
    sin_pa, cos_pa = math.sin(math.pi * alpha), math.cos(math.pi * alpha)

    def integrand(s: float) -> float:
        sr = s**rho
        return sin_pa * sr / (sr * sr + 2.0 * sr * cos_pa + 1.0) * math.exp(-y * s)

    head, _ = _integrate(integrand, 0.0, 1.0, max_abserr=1e-9, epsabs=1e-12, epsrel=1e-12)
    tail, _ = _integrate(integrand, 1.0, math.inf, max_abserr=1e-9, epsabs=1e-12, epsrel=1e-12)
    return rho / math.pi * (head + tail)


# --- Bounds -------------------------------------------------------------------------


def poisson_mdp(t: float, z: float, delta: float) -> Tuple[float, float]:
    """
    Both sides of P(|N_t - t| >= sqrt(2 z t log t)) <= t^(-z + delta) for a Poisson N_t of mean t.

    Returns:
        ``(lhs, rhs)``, the exact probability and the bound
    """
    if not t > 1.0:
        raise ParameterError(f"t must exceed 1, got {t}")
    if not z > delta > 0.0:
        raise ParameterError(f"need z > delta > 0, got z={z}, delta={delta}")
    d = math.sqrt(t * math.log(t)) * math.sqrt(2.0 * z)
    lhs = float(poisson.cdf(math.floor(t - d), t) + poisson.sf(math.ceil(t + d) - 1, t))
    return lhs, t ** (-z + delta)


def holder_moment_bound(c: float, x: float, p: float, gamma_: float) -> float:
    """
    Bound on E[D_gamma^p] for the gamma-Holder constant of BESQ(c) from x on [0, 1].

    Requires p > 2 and 0 < gamma < (p - 2) / (2p).
    """
    if not p > 2.0:
        raise ParameterError(f"p must exceed 2, got {p}")
    if not 0.0 < gamma_ < (p - 2.0) / (2.0 * p):
        raise ParameterError(f"gamma must lie in (0, {(p - 2.0) / (2.0 * p)}), got {gamma_}")
    if not c > 0.0:
        raise ParameterError(f"c must be positive, got {c}")
    numerator = 2.0 ** (gamma_ * p + p + 1.0) * (
        c
        + 2.0 * math.sqrt((p - 1.0) * (c + p - 2.0))
        + 2.0 * math.sqrt(p - 1.0) * math.sqrt(abs(x) + 2.0 * (c + p - 2.0))
    )
    return numerator / (1.0 - 2.0 ** (gamma_ + (2.0 - p) / (2.0 * p))) ** p


def besq_moment_bound(x: float, delta: float, t: float, p: float) -> float:
    """L^p-norm bound x + t (delta + 2 (p - 1)^+) for BESQ(delta) from x at time t."""
    if x < 0.0 or delta < 0.0 or t < 0.0:
        raise ParameterError("x, delta and t must be non-negative")
    if not p >= 1.0:
        raise ParameterError(f"p must be at least 1, got {p}")
    return x + t * (delta + 2.0 * max(p - 1.0, 0.0))
