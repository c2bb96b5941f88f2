"""Reliability quantities for the Inverse Polya, Weibull-1 and Weibull models.

Discrete lifetimes ``N`` count solicitations to failure and take values
``1, 2, ...``. For every discrete model::

    hazard(n)   = P[N = n | N > n - 1]
    pmf(n)      = P[N = n]     = survival(n - 1) - survival(n)
    survival(n) = P[N > n]     = prod_{i <= n} (1 - hazard(i))

The Inverse Polya survival is accumulated as a sum of ``log(1 - hazard)`` so
that it stays representable for very large ``n``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np

from .special import (
    _gamma_q_contfrac,
    lgamma,
    log_lower_incomplete_gamma,
    regularized_lower_gamma,
)

# Relative accuracy targeted by the series MTTF evaluations.
MTTF_RTOL = 1e-14
_CHUNK = 65_536
_MAX_TERMS = 200_000_000


@dataclass(frozen=True)
class IpdParams:
    """Inverse Polya parameters.

    ``alpha`` is the failure probability at the first solicitation and
    ``zeta`` the ageing intensity. ``zeta = 0`` is the geometric limit.
    """

    alpha: float
    zeta: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not (self.zeta >= 0.0 and math.isfinite(self.zeta)):
            raise ValueError(f"zeta must be finite and >= 0, got {self.zeta!r}")

    @property
    def ratio(self) -> float:
        """Ageing ratio ``zeta / alpha``."""
        return self.zeta / self.alpha


@dataclass(frozen=True)
class UrnScheme:
    """Polya urn with ``a`` failure balls, ``b`` operating balls and ``z``
    failure balls added after every survived solicitation."""

    a: int
    b: int
    z: int

    def __post_init__(self):
        for name in ("a", "b", "z"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise TypeError(f"{name} must be an integer")
        if self.a < 1 or self.b < 1 or self.z < 0:
            raise ValueError("urn requires a >= 1, b >= 1, z >= 0")

    @property
    def alpha_exact(self) -> Fraction:
        return Fraction(self.a, self.a + self.b)

    @property
    def zeta_exact(self) -> Fraction:
        return Fraction(self.z, self.a + self.b)

    def to_params(self) -> IpdParams:
        return IpdParams(float(self.alpha_exact), float(self.zeta_exact))


@dataclass(frozen=True)
class W1Params:
    """Weibull-1 (type I discrete Weibull) parameters with scale ``eta`` and
    shape ``beta``; ``theta = exp(-(1/eta)**beta)``.

    ``theta`` rounds to 1.0 once ``(1/eta)**beta`` drops below about 1e-16;
    :attr:`one_minus_theta` keeps full relative accuracy.
    """

    eta: float
    beta: float
    theta: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        _check_weibull_pair(self.eta, self.beta)
        object.__setattr__(self, "theta", math.exp(-((1.0 / self.eta) ** self.beta)))

    @property
    def one_minus_theta(self) -> float:
        """Failure probability at the first solicitation."""
        return -math.expm1(-((1.0 / self.eta) ** self.beta))

    @classmethod
    def from_theta(cls, theta: float, beta: float) -> "W1Params":
        if not 0.0 < theta < 1.0:
            raise ValueError("theta must lie in (0, 1)")
        return cls(eta=(-math.log(theta)) ** (-1.0 / beta), beta=beta)


@dataclass(frozen=True)
class WeibullParams:
    """Continuous Weibull parameters (scale ``eta``, shape ``beta``)."""

    eta: float
    beta: float

    def __post_init__(self):
        _check_weibull_pair(self.eta, self.beta)


def _check_weibull_pair(eta, beta):
    if not (eta > 0 and math.isfinite(eta)):
        raise ValueError(f"eta must be finite and > 0, got {eta!r}")
    if not (beta > 0 and math.isfinite(beta)):
        raise ValueError(f"beta must be finite and > 0, got {beta!r}")


def _as_index(n, minimum):
    arr = np.asarray(n)
    if arr.dtype.kind == "f":
        if np.any(arr != np.floor(arr)):
            raise ValueError("solicitation counts must be integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind not in "iu":
        raise TypeError("solicitation counts must be integers")
    if np.any(arr < minimum):
        raise ValueError(f"solicitation count must be >= {minimum}")
    return arr.astype(np.int64)


def _scalar_or_array(values, n):
    return float(values) if np.ndim(n) == 0 else values


# ---------------------------------------------------------------------------
# Inverse Polya
# ---------------------------------------------------------------------------


def ipd_hazard(params: IpdParams, n):
    """Hazard ``(alpha + (n-1) zeta) / (1 + (n-1) zeta)`` for ``n >= 1``."""
    k = _as_index(n, 1).astype(float) - 1.0
    lam = (params.alpha + k * params.zeta) / (1.0 + k * params.zeta)
    return _scalar_or_array(lam, n)


def _ipd_log1m_hazard(params, k):
    # log(1 - hazard(k + 1)) = log(1 - alpha) - log1p(k zeta)
    return math.log1p(-params.alpha) - np.log1p(k * params.zeta)


def ipd_log_survival(params: IpdParams, n):
    """``log S(n)`` for ``n >= 0``."""
    idx = _as_index(n, 0)
    flat = np.atleast_1d(idx)
    top = int(flat.max()) if flat.size else 0
    # cum[m] = sum_{i=1..m} log1p((i-1) zeta); log1p(0) = 0 for i = 1
    k = np.arange(top, dtype=float)
    cum = np.concatenate(([0.0], np.cumsum(np.log1p(k * params.zeta))))
    out = flat * math.log1p(-params.alpha) - cum[flat]
    return _scalar_or_array(out.reshape(idx.shape), n)


def ipd_survival(params: IpdParams, n):
    """Survival ``P[N > n] = prod_{i=1..n} (1 - hazard(i))``."""
    return _scalar_or_array(np.exp(ipd_log_survival(params, n)), n)


def ipd_log_pmf(params: IpdParams, n):
    idx = _as_index(n, 1)
    k = idx.astype(float) - 1.0
    log_hazard = np.log(params.alpha + k * params.zeta) - np.log1p(k * params.zeta)
    out = log_hazard + np.asarray(ipd_log_survival(params, idx - 1))
    return _scalar_or_array(out, n)


def ipd_pmf(params: IpdParams, n):
    """Probability of failing at solicitation ``n``: ``hazard(n) * S(n - 1)``."""
    return _scalar_or_array(np.exp(ipd_log_pmf(params, n)), n)


def _series_mttf(log_one_minus_hazard, tail_bound):
    """Sum ``S(0) + S(1) + ...`` chunk by chunk.

    ``log_one_minus_hazard(k)`` returns ``log(1 - hazard(k + 1))`` for an array of
    ``k``; ``tail_bound(N, log_S_N)`` bounds ``sum_{n > N} S(n)`` from above.
    Stops once the bound drops below ``MTTF_RTOL`` times the running sum, and
    adds half the bound (so the error is at most half the bound).
    """
    total = 1.0  # S(0)
    log_s = 0.0
    start = 0
    while start < _MAX_TERMS:
        k = np.arange(start, start + _CHUNK, dtype=float)
        log_s_chunk = log_s + np.cumsum(log_one_minus_hazard(k))
        s_chunk = np.exp(log_s_chunk)
        csum = total + np.cumsum(s_chunk)
        n_vals = k + 1.0
        bounds = tail_bound(n_vals, log_s_chunk)
        done = np.nonzero(bounds <= MTTF_RTOL * csum)[0]
        if done.size:
            i = done[0]
            return float(csum[i] + 0.5 * bounds[i])
        total = float(csum[-1])
        log_s = float(log_s_chunk[-1])
        start += _CHUNK
    raise ArithmeticError("MTTF series did not converge; parameters are pathological")


def ipd_mttf(params: IpdParams) -> float:
    """Mean number of solicitations to failure, ``sum_{n >= 0} S(n)``.

    The tail after ``N`` is bounded geometrically with ``hazard(N + 1)``, a lower
    bound for every later hazard since the hazard is nondecreasing.
    """
    if params.zeta == 0.0:
        return 1.0 / params.alpha

    def tail(n_vals, log_s):
        lam = (params.alpha + n_vals * params.zeta) / (1.0 + n_vals * params.zeta)
        return np.exp(log_s) * (1.0 - lam) / lam

    return _series_mttf(lambda k: _ipd_log1m_hazard(params, k), tail)


def ipd_mttf_closed_form(params: IpdParams) -> float:
    """Incomplete-gamma expression of the IPD mean, with the exponent base read
    as ``1 - alpha``. Reported for comparison only; :func:`ipd_mttf` is the
    reference evaluation."""
    a, z = params.alpha, params.zeta
    if z == 0.0:
        return 1.0 / a
    u = (1.0 - z) / z
    v = (1.0 - a) / z
    if u <= 0:
        return float("nan")
    log_val = (
        math.log(abs(1.0 - z))
        + (1.0 / z - 2.0) * math.log(z)
        - u * math.log1p(-a)
        + v
        + log_lower_incomplete_gamma(u, v)
    )
    return math.copysign(math.exp(log_val), 1.0 - z)


# ---------------------------------------------------------------------------
# Weibull-1 and continuous Weibull
# ---------------------------------------------------------------------------


def _cumhaz(params, n):
    # (n / eta) ** beta, exact zero at n = 0
    return (np.asarray(n, dtype=float) / params.eta) ** params.beta


def _cumhaz_step(params, n):
    """``(n/eta)**beta - ((n-1)/eta)**beta`` without cancellation, ``n >= 1``."""
    n = np.asarray(n, dtype=float)
    scale = (n / params.eta) ** params.beta
    with np.errstate(divide="ignore"):
        ratio_term = -np.expm1(params.beta * np.log1p(-1.0 / n))
    return np.where(n == 1.0, scale, scale * ratio_term)


def w1_survival(params: W1Params, n):
    """``exp(-(n/eta)**beta)`` for ``n >= 0``."""
    idx = _as_index(n, 0)
    return _scalar_or_array(np.exp(-_cumhaz(params, idx)), n)


def w1_hazard(params: W1Params, n):
    """``1 - exp(-(n/eta)**beta + ((n-1)/eta)**beta)`` for ``n >= 1``."""
    idx = _as_index(n, 1)
    return _scalar_or_array(-np.expm1(-_cumhaz_step(params, idx)), n)


def w1_log_pmf(params: W1Params, n):
    idx = _as_index(n, 1)
    out = -_cumhaz(params, idx - 1) + np.log(-np.expm1(-_cumhaz_step(params, idx)))
    return _scalar_or_array(out, n)


def w1_pmf(params: W1Params, n):
    """``S(n - 1) - S(n)``, evaluated as ``S(n - 1) * hazard(n)``."""
    idx = _as_index(n, 1)
    out = np.exp(-_cumhaz(params, idx - 1)) * -np.expm1(-_cumhaz_step(params, idx))
    return _scalar_or_array(out, n)


def _w1_tail_bound(params):
    beta, eta = params.beta, params.eta

    def tail(n_vals, log_s):
        s = np.exp(log_s)
        if beta >= 1.0:
            # nondecreasing hazard: geometric tail with ratio 1 - hazard(N + 1)
            lam = -np.expm1(-_cumhaz_step(params, n_vals + 1.0))
            with np.errstate(divide="ignore"):
                return np.where(lam > 0, s * (1.0 - lam) / lam, np.inf)
        # decreasing hazard: bound by the integral of S over [N, inf), using
        # (t/eta)**beta >= X (t/N)**beta and Gamma(s, X) <= X**(s-1) e**-X / (1 - (s-1)/X)
        x = (n_vals / eta) ** beta
        shape = 1.0 / beta
        with np.errstate(divide="ignore", invalid="ignore"):
            denom = 1.0 - (shape - 1.0) / x
            bound = n_vals / (beta * x) * s / denom
        return np.where(denom > 0, bound, np.inf)

    return tail


def w1_mttf(params: W1Params) -> float:
    """Mean of the Weibull-1 law, ``sum_{n >= 0} exp(-(n/eta)**beta)``.

    Summation stops when a certified bound on the remaining tail falls below
    ``MTTF_RTOL`` of the partial sum.
    """
    if params.beta < 1.0 and weibull_quantile(params, 1.0 - 1e-16) > _EM_THRESHOLD:
        return _w1_mttf_euler_maclaurin(params)
    return _series_mttf(
        lambda k: -_cumhaz_step(params, k + 1.0), _w1_tail_bound(params)
    )


_EM_THRESHOLD = 1 << 22
_EM_HEAD = _CHUNK


def _w1_mttf_euler_maclaurin(params: W1Params) -> float:
    """Heavy-tailed W1 mean: direct sum of ``S(0..N-1)`` plus the
    Euler-Maclaurin tail ``int_N^inf S + S(N)/2 - S'(N)/12``.

    Used for small shapes, where the series would need far too many terms.
    The result is ``inf`` when the mean overflows a double.
    """
    eta, beta = params.eta, params.beta
    n = float(_EM_HEAD)
    head = math.fsum(np.exp(-_cumhaz(params, np.arange(_EM_HEAD))).tolist())
    x = (n / eta) ** beta
    shape = 1.0 / beta
    if x >= shape + 1.0:
        log_q = math.log(_gamma_q_contfrac(shape, x))
    else:
        log_q = math.log1p(-regularized_lower_gamma(shape, x))
    log_integral = math.log(eta) - math.log(beta) + float(lgamma(shape)) + log_q
    if log_integral > 709.0:
        return math.inf
    s_n = math.exp(-x)
    ds_n = -s_n * beta * x / n
    return head + math.exp(log_integral) + 0.5 * s_n - ds_n / 12.0


def weibull_survival(params, t):
    t = np.asarray(t, dtype=float)
    return _scalar_or_array(np.exp(-((t / params.eta) ** params.beta)), t)


def weibull_density(params, t):
    """Continuous Weibull density ``(beta/eta) (t/eta)**(beta-1) exp(-(t/eta)**beta)``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("density is defined for t > 0")
    z = t_arr / params.eta
    out = params.beta / params.eta * z ** (params.beta - 1.0) * np.exp(-(z**params.beta))
    return _scalar_or_array(out, t)


def weibull_log_density(params, t):
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("density is defined for t > 0")
    log_z = np.log(t_arr) - math.log(params.eta)
    out = (
        math.log(params.beta)
        - math.log(params.eta)
        + (params.beta - 1.0) * log_z
        - np.exp(params.beta * log_z)
    )
    return _scalar_or_array(out, t)


def weibull_mean(params) -> float:
    """``eta * Gamma(1 + 1/beta)``."""
    return params.eta * math.exp(float(lgamma(1.0 + 1.0 / params.beta)))


def weibull_quantile(params, q):
    """Quantile ``eta * (-log(1 - q))**(1/beta)``, shared by W and W1 pairs."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr > 0) & (q_arr < 1))):
        raise ValueError("q must lie in (0, 1)")
    out = params.eta * (-np.log1p(-q_arr)) ** (1.0 / params.beta)
    return _scalar_or_array(out, q)


def weibull_hazard_rate(params, t):
    """Continuous Weibull hazard rate ``(beta/eta) (t/eta)**(beta-1)``."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(~(t_arr > 0)):
        raise ValueError("hazard rate is defined for t > 0")
    out = params.beta / params.eta * (t_arr / params.eta) ** (params.beta - 1.0)
    return _scalar_or_array(out, t)
