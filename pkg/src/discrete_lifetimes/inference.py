"""Censored maximum likelihood for IPD, Weibull-1 and Weibull, and the
Kaplan-Meier estimator.

Notation for the Inverse Polya likelihood of a grouped sample (``k_i`` records
censored at ``n_i``, failures at ``n_j``)::

    A  = sum_i k_i n_i + sum_j n_j - r      exponent of (1 - alpha)
    mu = sum_i k_i + r                      number of records

    loglik = A log(1 - alpha) + sum_j log(alpha + (n_j - 1) zeta)
             - sum_records sum_{k=1}^{n-1} log(1 + k zeta)

The last double sum is evaluated as ``sum_k c(k) log1p(k zeta)`` where
``c(k)`` counts the records with value ``> k``. It equals the log-Gamma form
``sum_records [n log(zeta) + lgamma(n + 1/zeta) - lgamma(1/zeta)]``, which is
kept as :func:`ipd_log_likelihood_gamma_form`; the finite sum stays accurate when
``zeta`` is tiny and ``lgamma`` differences cancel catastrophically.
"""

from dataclasses import dataclass, field
from enum import Enum
import logging
import math

import numpy as np

from . import distributions as dist
from .distributions import IpdParams, W1Params, WeibullParams
from .sampling import GroupedSample, LifetimeSample
from .special import digamma, lgamma, trigamma

logger = logging.getLogger(__name__)

QUANTILE_LEVELS = (0.5, 0.75, 0.9, 0.99)


class Model(str, Enum):
    IPD = "ipd"
    W1 = "w1"
    WEIBULL = "weibull"


class FitError(RuntimeError):
    """Base class of estimation failures; ``result`` holds the last iterate
    when one exists."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class AllCensored(FitError):
    pass


class DegenerateSample(FitError):
    pass


class NonInvertibleHessian(FitError):
    pass


class MaxIterationsExceeded(FitError):
    pass


@dataclass(frozen=True)
class FitConfig:
    tol: float = 1e-8
    max_iter: int = 200
    max_halvings: int = 60
    alpha_eps: float = 1e-12
    singular_tol: float = 1e-12
    grid_size: int = 50
    alpha_grid: tuple = (1e-8, 0.5)
    zeta_grid: tuple = (1e-12, 10.0)
    polish_steps: int = 3


@dataclass(frozen=True)
class FitResult:
    model: Model
    params: object
    log_likelihood: float
    converged: bool
    iterations: int
    stderr: tuple | None = None
    grid_log_likelihood: float | None = None
    residuals: tuple | None = None
    message: str = ""
    active_bounds: tuple = field(default=())

    @property
    def mttf(self) -> float:
        if self.model is Model.IPD:
            return dist.ipd_mttf(self.params)
        if self.model is Model.W1:
            return dist.w1_mttf(self.params)
        return dist.weibull_mean(self.params)

    def quantile(self, q: float) -> float:
        if self.model is Model.IPD:
            return float(ipd_quantile(self.params, q))
        return float(dist.weibull_quantile(self.params, q))

    @property
    def derived(self) -> dict:
        """MTTF and quantiles, recomputed from the fitted parameters."""
        out = {"mttf": self.mttf}
        for q in QUANTILE_LEVELS:
            out[f"q{round(q * 100)}"] = self.quantile(q)
        return out

    def param_dict(self) -> dict:
        if self.model is Model.IPD:
            return {"alpha": self.params.alpha, "zeta": self.params.zeta}
        return {"eta": self.params.eta, "beta": self.params.beta}


def ipd_quantile(params: IpdParams, q: float) -> int:
    """Smallest ``n`` with ``P[N <= n] >= q``."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    target = math.log1p(-q)
    log_s = 0.0
    start = 0
    chunk = 4096
    while True:
        k = np.arange(start, start + chunk, dtype=float)
        steps = math.log1p(-params.alpha) - np.log1p(k * params.zeta)
        cum = log_s + np.cumsum(steps)
        hit = np.nonzero(cum <= target)[0]
        if hit.size:
            return int(start + hit[0] + 1)
        log_s = float(cum[-1])
        start += chunk
        chunk = min(chunk * 2, 1 << 22)


# ---------------------------------------------------------------------------
# Inverse Polya likelihood
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IpdLikelihoodStats:
    """Sufficient summaries of a grouped sample for the IPD likelihood."""

    s: int
    r: int
    A: int
    mu: int
    failure_values: np.ndarray  # distinct failure values
    failure_counts: np.ndarray
    at_risk_counts: np.ndarray  # c(k) for k = 1..max_n - 1

    @classmethod
    def from_grouped(cls, sample: GroupedSample) -> "IpdLikelihoodStats":
        sv, sc, fl = sample.survivor_values, sample.survivor_counts, sample.failures
        r = int(fl.size)
        A = int((sc * sv).sum() + fl.sum() - r)
        mu = int(sc.sum() + r)
        fv, fc = np.unique(fl, return_counts=True)
        top = int(max(sv.max(initial=0), fl.max(initial=0)))
        # c(k) = #records with value >= k + 1, for k = 1..top-1
        hist = np.zeros(top + 1, dtype=np.int64)
        np.add.at(hist, sv, sc)
        np.add.at(hist, fl, 1)
        ge = np.cumsum(hist[::-1])[::-1]  # ge[v] = #records with value >= v
        at_risk = ge[2:].astype(float) if top >= 2 else np.zeros(0)
        return cls(int(sv.size), r, A, mu, fv.astype(float), fc.astype(float), at_risk)

    @property
    def k(self) -> np.ndarray:
        return np.arange(1, self.at_risk_counts.size + 1, dtype=float)


def _stats(sample) -> IpdLikelihoodStats:
    if isinstance(sample, IpdLikelihoodStats):
        return sample
    if isinstance(sample, LifetimeSample):
        sample = sample.grouped()
    if len(sample) == 0:
        raise ValueError("sample is empty")
    return IpdLikelihoodStats.from_grouped(sample)


def _ipd_ll(st: IpdLikelihoodStats, alpha: float, zeta: float) -> float:
    if not (0.0 < alpha < 1.0) or zeta < 0.0:
        return -math.inf
    fail_terms = alpha + (st.failure_values - 1.0) * zeta
    return float(
        st.A * math.log1p(-alpha)
        + np.dot(st.failure_counts, np.log(fail_terms))
        - np.dot(st.at_risk_counts, np.log1p(st.k * zeta))
    )


def ipd_log_likelihood(sample, params: IpdParams) -> float:
    """Log-likelihood of a (grouped or flat) censored sample under IPD.

    Returns ``-inf`` on the degenerate boundary ``alpha in {0, 1}``.
    """
    st = _stats(sample)
    if isinstance(params, IpdParams):
        return _ipd_ll(st, params.alpha, params.zeta)
    alpha, zeta = params
    return _ipd_ll(st, alpha, zeta)


def ipd_log_likelihood_gamma_form(sample, params: IpdParams) -> float:
    """Same likelihood through ``Gamma(n + 1/zeta) / Gamma(1/zeta)``; needs
    ``zeta > 0`` and loses accuracy as ``zeta`` shrinks."""
    st = _stats(sample)
    a, z = params.alpha, params.zeta
    if z <= 0:
        raise ValueError("gamma form requires zeta > 0")
    x = 1.0 / z
    if isinstance(sample, LifetimeSample):
        sample = sample.grouped()
    sv, sc, fl = sample.survivor_values, sample.survivor_counts, sample.failures
    denom = (
        (st.A + st.r) * math.log(z)
        + float(np.dot(sc, lgamma(sv + x)))
        + float(np.sum(lgamma(fl + x)))
        - st.mu * float(lgamma(x))
    )
    numer = st.A * math.log1p(-a) + float(np.sum(np.log(a + (fl - 1.0) * z)))
    return numer - denom


def ipd_gradient(sample, params: IpdParams, method: str = "sum") -> np.ndarray:
    """Gradient ``(d/dalpha, d/dzeta)`` of the IPD log-likelihood.

    ``method="digamma"`` evaluates the zeta-derivative through
    ``psi(n + 1/zeta) - psi(1/zeta)`` (requires ``zeta > 0``); ``"sum"`` uses
    the equivalent finite sums and is the one used by the optimizer.
    """
    st = _stats(sample)
    a, z = params.alpha, params.zeta
    fv, fc = st.failure_values, st.failure_counts
    denom = a + (fv - 1.0) * z
    g_alpha = -st.A / (1.0 - a) + float(np.dot(fc, 1.0 / denom))
    g_zeta_fail = float(np.dot(fc, (fv - 1.0) / denom))
    if method == "sum":
        kk = st.k
        g_zeta = g_zeta_fail - float(np.dot(st.at_risk_counts, kk / (1.0 + kk * z)))
    elif method == "digamma":
        g_zeta = g_zeta_fail - _harmonic_terms(sample, z)[0]
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.array([g_alpha, g_zeta])


def ipd_hessian(sample, params: IpdParams, method: str = "sum") -> np.ndarray:
    """Hessian of the IPD log-likelihood in ``(alpha, zeta)``."""
    st = _stats(sample)
    a, z = params.alpha, params.zeta
    fv, fc = st.failure_values, st.failure_counts
    inv2 = 1.0 / (a + (fv - 1.0) * z) ** 2
    h_aa = -st.A / (1.0 - a) ** 2 - float(np.dot(fc, inv2))
    h_az = -float(np.dot(fc, (fv - 1.0) * inv2))
    h_zz_fail = -float(np.dot(fc, (fv - 1.0) ** 2 * inv2))
    if method == "sum":
        kk = st.k
        h_zz = h_zz_fail + float(np.dot(st.at_risk_counts, kk**2 / (1.0 + kk * z) ** 2))
    elif method == "digamma":
        h_zz = h_zz_fail + _harmonic_terms(sample, z)[1]
    else:
        raise ValueError(f"unknown method {method!r}")
    return np.array([[h_aa, h_az], [h_az, h_zz]])


def _harmonic_terms(sample, z):
    """``sum_records sum_{k<n} k/(1+kz)`` and ``sum_records sum_{k<n} k^2/(1+kz)^2``
    through digamma and trigamma differences."""
    if z <= 0:
        raise ValueError("digamma form requires zeta > 0")
    if isinstance(sample, LifetimeSample):
        sample = sample.grouped()
    values = np.concatenate([sample.survivor_values, sample.failures]).astype(float)
    weights = np.concatenate(
        [sample.survivor_counts, np.ones(sample.failures.size)]
    ).astype(float)
    x = 1.0 / z
    d1 = digamma(values + x) - digamma(x)
    d2 = trigamma(values + x) - trigamma(x)
    first = np.dot(weights, values / z - d1 / z**2)
    second = np.dot(weights, values / z**2 - 2.0 * d1 / z**3 - d2 / z**4)
    return float(first), float(second)


def ipd_score_equations(sample, params: IpdParams) -> tuple:
    """Residuals of the two stationarity equations, in digamma form.

    First: ``sum_j (1 - alpha) / (alpha + (n_j - 1) zeta) - A``.
    Second: ``sum_j (n_j - 1) zeta^2 / (alpha + (n_j - 1) zeta) - (A + r) zeta
    + sum_j k'_j psi(n'_j + 1/zeta) - mu psi(1/zeta)``, i.e. ``zeta^2`` times
    the zeta-derivative of the log-likelihood.
    """
    st = _stats(sample)
    if isinstance(sample, LifetimeSample):
        sample = sample.grouped()
    a, z = params.alpha, params.zeta
    fv, fc = st.failure_values, st.failure_counts
    denom = a + (fv - 1.0) * z
    first = float(np.dot(fc, (1.0 - a) / denom)) - st.A
    if z == 0.0:
        return first, 0.0
    x = 1.0 / z
    psi_sum = float(np.dot(sample.survivor_counts, digamma(sample.survivor_values + x)))
    psi_sum += float(np.sum(digamma(sample.failures + x)))
    second = (
        float(np.dot(fc, (fv - 1.0) * z**2 / denom))
        - (st.A + st.r) * z
        + psi_sum
        - st.mu * float(digamma(x))
    )
    return first, second


def ipd_grid_search(st: IpdLikelihoodStats, config: FitConfig):
    """Crude maximization over a log-spaced ``alpha x zeta`` grid.

    Ties resolve to the lexicographically smallest ``(alpha, zeta)``.
    """
    alphas = np.logspace(*np.log10(config.alpha_grid), config.grid_size)
    zetas = np.logspace(*np.log10(config.zeta_grid), config.grid_size)
    kk = st.k
    zeta_term = np.array([np.dot(st.at_risk_counts, np.log1p(kk * z)) for z in zetas])
    fail_term = np.einsum(
        "f,abf->ab",
        st.failure_counts,
        np.log(alphas[:, None, None] + (st.failure_values - 1.0)[None, None, :] * zetas[None, :, None]),
    )
    ll = st.A * np.log1p(-alphas)[:, None] + fail_term - zeta_term[None, :]
    i, j = np.unravel_index(np.argmax(ll), ll.shape)
    return float(alphas[i]), float(zetas[j]), float(ll[i, j])


def _ipd_residuals(st, a, z, g):
    # per-record elasticities alpha dl/dalpha and zeta dl/dzeta
    return (abs(a * g[0]) / st.mu, abs(z * g[1]) / st.mu)


def fit_ipd(sample, config: FitConfig = FitConfig()) -> FitResult:
    """Censored maximum-likelihood fit of the Inverse Polya model.

    Grid initialization followed by Newton-Raphson steps solving
    ``H delta = -g``. The step length is cut back to stay in
    ``alpha in [eps, 1 - eps], zeta >= 0`` and then halved until the
    log-likelihood does not decrease. Parameters pinned at a bound with an
    outward-pointing gradient are held fixed (Karush-Kuhn-Tucker conditions).
    A singular Hessian falls back to a scaled gradient step for that
    iteration.
    """
    st = _stats(sample)
    if st.r == 0:
        raise AllCensored("no failure observed: the IPD likelihood has no maximum")
    lo, hi = config.alpha_eps, 1.0 - config.alpha_eps

    a, z, grid_ll = ipd_grid_search(st, config)
    ll = _ipd_ll(st, a, z)
    converged = False
    polish_left = config.polish_steps
    residuals = (math.inf, math.inf)
    active = ()
    it = 0
    for it in range(1, config.max_iter + 1):
        g = ipd_gradient(st, IpdParams(a, z))
        H = ipd_hessian(st, IpdParams(a, z))
        fixed = [
            (a <= lo and g[0] <= 0) or (a >= hi and g[0] >= 0),
            z <= 0.0 and g[1] <= 0,
        ]
        free = [i for i in range(2) if not fixed[i]]
        active = tuple(name for name, f in zip(("alpha", "zeta"), fixed) if f)
        res = _ipd_residuals(st, a, z, g)
        residuals = tuple(res[i] if i in free else 0.0 for i in range(2))
        if not free or max(residuals) < config.tol:
            converged = True
            if not free or polish_left == 0:
                break
            polish_left -= 1

        direction, singular = _newton_direction(H, g, free, config.singular_tol)
        step, new_ll = _ascent_step(
            lambda p: _ipd_ll(st, p[0], p[1]),
            np.array([a, z]),
            direction,
            _scaled_gradient(H, g, free),
            ll,
            np.array([lo, 0.0]),
            np.array([hi, math.inf]),
            config.max_halvings,
        )
        if step is None:
            if converged:
                break
            if singular:
                raise NonInvertibleHessian(
                    "Hessian singular and no ascent step after step-size reduction",
                    _ipd_result(st, a, z, ll, False, it, grid_ll, residuals, active),
                )
            break
        a, z = float(step[0]), float(step[1])
        ll = new_ll
    else:
        if not converged:
            raise MaxIterationsExceeded(
                f"IPD Newton-Raphson did not converge in {config.max_iter} iterations",
                _ipd_result(st, a, z, ll, False, it, grid_ll, residuals, active),
            )

    if not converged:
        raise MaxIterationsExceeded(
            "IPD Newton-Raphson stalled before reaching the tolerance",
            _ipd_result(st, a, z, ll, False, it, grid_ll, residuals, active),
        )
    return _ipd_result(st, a, z, ll, True, it, grid_ll, residuals, active)


def _ipd_result(st, a, z, ll, converged, it, grid_ll, residuals, active):
    params = IpdParams(a, z)
    H = ipd_hessian(st, params)
    stderr = _stderr(H, [name not in active for name in ("alpha", "zeta")])
    return FitResult(
        Model.IPD,
        params,
        ll,
        converged,
        it,
        stderr=stderr,
        grid_log_likelihood=grid_ll,
        residuals=residuals,
        active_bounds=active,
    )


def _stderr(H, free_mask):
    idx = [i for i, f in enumerate(free_mask) if f]
    if not idx:
        return None
    sub = -H[np.ix_(idx, idx)]
    try:
        np.linalg.cholesky(sub)
        cov = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        return None
    out = [None] * len(free_mask)
    for pos, i in enumerate(idx):
        out[i] = float(math.sqrt(cov[pos, pos]))
    return tuple(out)


def _is_singular(Hf, tol):
    if Hf.shape == (1, 1):
        return abs(Hf[0, 0]) == 0.0
    scale = abs(Hf[0, 0] * Hf[1, 1]) + Hf[0, 1] ** 2
    return scale == 0.0 or abs(np.linalg.det(Hf)) <= tol * scale


def _scaled_gradient(H, g, free):
    d = np.zeros(2)
    diag = np.abs(np.diag(H))
    for i in free:
        d[i] = g[i] / diag[i] if diag[i] > 0 else g[i]
    return d


def _newton_direction(H, g, free, singular_tol):
    """Newton direction on the free coordinates, or the scaled gradient when
    the Hessian is singular or not negative definite. Returns the direction and
    whether the Hessian was singular."""
    Hf = H[np.ix_(free, free)]
    singular = _is_singular(Hf, singular_tol)
    if not singular:
        try:
            np.linalg.cholesky(-Hf)
            d = np.zeros(2)
            d[free] = np.linalg.solve(Hf, -g[free])
            return d, False
        except np.linalg.LinAlgError:
            pass
    return _scaled_gradient(H, g, free), singular


def _ascent_step(f, x, direction, fallback, f0, lower, upper, max_halvings):
    """Line search along ``direction``, then along ``fallback`` if that fails."""
    step, value = _box_line_search(f, x, direction, f0, lower, upper, max_halvings)
    if step is None and not np.array_equal(direction, fallback):
        step, value = _box_line_search(f, x, fallback, f0, lower, upper, max_halvings)
    return step, value


def _box_line_search(f, x, d, f0, lower, upper, max_halvings):
    """Largest step ``t * d`` (``t = t_max / 2**j``) that keeps ``x`` in the box
    and does not decrease ``f`` beyond its rounding resolution; ``(None, f0)``
    when every halving fails."""
    slack = 8.0 * np.finfo(float).eps * max(1.0, abs(f0))
    t = 1.0
    hit = None
    for i in range(x.size):
        if d[i] < 0 and x[i] + d[i] < lower[i]:
            ti = (lower[i] - x[i]) / d[i]
            if ti < t:
                t, hit = ti, (i, lower[i])
        elif d[i] > 0 and x[i] + d[i] > upper[i]:
            ti = (upper[i] - x[i]) / d[i]
            if ti < t:
                t, hit = ti, (i, upper[i])
    for j in range(max_halvings + 1):
        cand = np.clip(x + t * d, lower, upper)
        if j == 0 and hit is not None:
            cand[hit[0]] = hit[1]
        fc = f(cand)
        if fc >= f0 - slack and not np.array_equal(cand, x):
            return cand, fc
        t *= 0.5
    return None, f0


# ---------------------------------------------------------------------------
# Weibull-1 and continuous Weibull
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Compressed:
    fail_values: np.ndarray
    fail_counts: np.ndarray
    cens_values: np.ndarray
    cens_counts: np.ndarray
    size: int


def _compress(sample: LifetimeSample) -> _Compressed:
    fv, fc = np.unique(sample.failures, return_counts=True)
    cv, cc = np.unique(sample.censors, return_counts=True)
    return _Compressed(
        fv.astype(float), fc.astype(float), cv.astype(float), cc.astype(float), len(sample)
    )


def _w1_ll_grad(data: _Compressed, u: float, v: float, want_grad=True):
    """W1 log-likelihood and gradient in ``(log eta, log beta)``."""
    beta = math.exp(v)
    n = data.fail_values
    log_n = np.log(n)
    x_n = np.exp(beta * (log_n - u))
    with np.errstate(divide="ignore"):
        log_prev = np.where(n > 1, np.log(n - 1.0), -np.inf)
        x_prev = np.where(n > 1, np.exp(beta * (log_prev - u)), 0.0)
        ratio = -np.expm1(beta * np.log1p(-1.0 / n))
    d = np.where(n > 1, x_n * ratio, x_n)
    log_hz = np.log(-np.expm1(-d))
    cens = data.cens_values
    x_c = np.exp(beta * (np.log(cens) - u))
    ll = float(np.dot(data.fail_counts, log_hz - x_prev) - np.dot(data.cens_counts, x_c))
    if not want_grad:
        return ll, None
    # derivatives of x(m) = exp(beta (log m - u)): dx/du = -beta x, dx/dv = beta x (log m - u)
    lr_n = log_n - u
    lr_prev = np.where(n > 1, log_prev - u, 0.0)
    dx_prev_u = -beta * x_prev
    dx_prev_v = beta * x_prev * lr_prev
    dd_u = -beta * d
    with np.errstate(divide="ignore", invalid="ignore"):
        step_log = np.where(n > 1, -np.log1p(-1.0 / n), 0.0)
    dd_v = beta * (d * lr_n + x_prev * step_log)
    w = 1.0 / np.expm1(d)
    g_u = np.dot(data.fail_counts, -dx_prev_u + dd_u * w) + np.dot(
        data.cens_counts, beta * x_c
    )
    g_v = np.dot(data.fail_counts, -dx_prev_v + dd_v * w) - np.dot(
        data.cens_counts, beta * x_c * (np.log(cens) - u)
    )
    return ll, np.array([g_u, g_v])


def _weibull_ll_grad(data: _Compressed, u: float, v: float, want_grad=True):
    """Continuous Weibull censored log-likelihood and gradient in
    ``(log eta, log beta)``."""
    beta = math.exp(v)
    lt = np.log(data.fail_values) - u
    x_t = np.exp(beta * lt)
    lc = np.log(data.cens_values) - u
    x_c = np.exp(beta * lc)
    fc, cc = data.fail_counts, data.cens_counts
    ll = float(np.dot(fc, v - u + (beta - 1.0) * lt - x_t) - np.dot(cc, x_c))
    if not want_grad:
        return ll, None
    g_u = np.dot(fc, -beta + beta * x_t) + np.dot(cc, beta * x_c)
    g_v = np.dot(fc, 1.0 + beta * lt * (1.0 - x_t)) - np.dot(cc, beta * x_c * lc)
    return ll, np.array([g_u, g_v])


def w1_log_likelihood(sample: LifetimeSample, params: W1Params) -> float:
    """Sum of ``log pmf`` over failures and ``log S`` over right-censors."""
    return _w1_ll_grad(_compress(sample), math.log(params.eta), math.log(params.beta), False)[0]


def weibull_log_likelihood(sample: LifetimeSample, params) -> float:
    """Continuous Weibull censored log-likelihood, values read as real times."""
    return _weibull_ll_grad(
        _compress(sample), math.log(params.eta), math.log(params.beta), False
    )[0]


def _w1_ll_grid(data: _Compressed, u, v):
    """W1 log-likelihood on broadcast arrays of ``log eta`` and ``log beta``."""
    beta = np.exp(v)[..., None]
    u = np.asarray(u)[..., None]
    n = data.fail_values
    x_n = np.exp(beta * (np.log(n) - u))
    with np.errstate(divide="ignore"):
        x_prev = np.where(n > 1, np.exp(beta * (np.log(np.maximum(n - 1.0, 1.0)) - u)), 0.0)
        ratio = -np.expm1(beta * np.log1p(-1.0 / n))
    d = np.where(n > 1, x_n * ratio, x_n)
    with np.errstate(divide="ignore"):
        fail = np.log(-np.expm1(-d)) - x_prev
    cens = np.exp(beta * (np.log(data.cens_values) - u))
    return fail @ data.fail_counts - cens @ data.cens_counts


def _weibull_ll_grid(data: _Compressed, u, v):
    beta = np.exp(v)[..., None]
    vv = np.asarray(v)[..., None]
    u = np.asarray(u)[..., None]
    lt = np.log(data.fail_values) - u
    fail = vv - u + (beta - 1.0) * lt - np.exp(beta * lt)
    cens = np.exp(beta * (np.log(data.cens_values) - u))
    return fail @ data.fail_counts - cens @ data.cens_counts


_GRID_FUNCS = {}


def _weibull_grid(data: _Compressed, ll_grad, size=40):
    """Best point of a log-spaced ``eta x beta`` grid."""
    values = np.concatenate([data.fail_values, data.cens_values])
    log_etas = np.linspace(math.log(0.5 * values.min()), math.log(100.0 * values.max()), size)
    log_betas = np.linspace(math.log(0.1), math.log(30.0), size)
    U, V = np.meshgrid(log_etas, log_betas, indexing="ij")
    ll = _GRID_FUNCS[ll_grad](data, U, V)
    ll = np.where(np.isnan(ll), -np.inf, ll)
    i, j = np.unravel_index(np.argmax(ll), ll.shape)
    return float(ll[i, j]), float(log_etas[i]), float(log_betas[j])


def _fd_hessian(grad_fn, x, h=1e-5):
    H = np.empty((2, 2))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        H[:, i] = (grad_fn(x + e) - grad_fn(x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def _fit_log_scale(sample, config, ll_grad, model, params_cls):
    if sample.n_failures == 0:
        raise AllCensored("no failure observed")
    if np.unique(sample.values).size == 1:
        raise DegenerateSample(
            "all observed values are identical; the shape parameter is unbounded"
        )
    data = _compress(sample)
    grid_ll, u, v = _weibull_grid(data, ll_grad)
    x = np.array([u, v])
    ll, g = ll_grad(data, u, v)

    def grad_fn(p):
        return ll_grad(data, p[0], p[1])[1]

    converged = False
    polish_left = config.polish_steps
    lower = np.array([-math.inf, math.log(1e-3)])
    upper = np.array([math.inf, math.log(1e3)])
    it = 0
    for it in range(1, config.max_iter + 1):
        gnorm = float(np.linalg.norm(g)) / data.size
        if gnorm < config.tol:
            converged = True
            if polish_left == 0:
                break
            polish_left -= 1
        H = _fd_hessian(grad_fn, x)
        direction, _ = _newton_direction(H, g, [0, 1], config.singular_tol)
        # cap the move to keep the line search in a sane region
        scale = np.max(np.abs(direction))
        if scale > 2.0:
            direction = direction * (2.0 / scale)
        step, new_ll = _ascent_step(
            lambda p: ll_grad(data, p[0], p[1], False)[0],
            x,
            direction,
            _scaled_gradient(H, g, [0, 1]),
            ll,
            lower,
            upper,
            config.max_halvings,
        )
        if step is None:
            break
        x = step
        ll, g = ll_grad(data, x[0], x[1])
        if x[1] >= upper[1] or x[1] <= lower[1]:
            break

    eta, beta = math.exp(x[0]), math.exp(x[1])
    params = params_cls(eta, beta)
    gnorm = float(np.linalg.norm(g)) / data.size
    converged = converged or gnorm < config.tol
    H = _fd_hessian(grad_fn, x)
    stderr_log = _stderr(H, [True, True])
    stderr = None
    if stderr_log is not None:
        # delta method back to (eta, beta)
        stderr = (eta * stderr_log[0], beta * stderr_log[1])
    result = FitResult(
        model,
        params,
        ll,
        converged,
        it,
        stderr=stderr,
        grid_log_likelihood=grid_ll,
        residuals=(gnorm,),
    )
    if not converged:
        if x[1] >= upper[1] or x[1] <= lower[1]:
            raise DegenerateSample(
                f"shape estimate ran to the bound (beta = {beta:.3g})", result
            )
        raise MaxIterationsExceeded(
            f"{model.value} fit did not reach mean score norm {config.tol} "
            f"(got {gnorm:.3g} after {it} iterations)",
            result,
        )
    return result


_GRID_FUNCS[_w1_ll_grad] = _w1_ll_grid
_GRID_FUNCS[_weibull_ll_grad] = _weibull_ll_grid


def fit_w1(sample: LifetimeSample, config: FitConfig = FitConfig()) -> FitResult:
    """Weibull-1 censored MLE by damped Newton ascent in ``(log eta, log beta)``
    from the best point of a log-spaced grid.

    Convergence is declared when the norm of the score in log coordinates,
    divided by the number of records, drops below ``config.tol``.
    """
    return _fit_log_scale(sample, config, _w1_ll_grad, Model.W1, W1Params)


def fit_weibull(sample: LifetimeSample, config: FitConfig = FitConfig()) -> FitResult:
    """Continuous Weibull censored MLE on integer lifetimes read as times."""
    return _fit_log_scale(sample, config, _weibull_ll_grad, Model.WEIBULL, WeibullParams)


# ---------------------------------------------------------------------------
# Kaplan-Meier
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class KaplanMeierCurve:
    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    deaths: np.ndarray

    @property
    def steps(self):
        return list(
            zip(
                self.times.tolist(),
                self.survival.tolist(),
                self.at_risk.tolist(),
                self.deaths.tolist(),
            )
        )

    def __call__(self, n):
        """Survival estimate at ``n`` (right-continuous step function)."""
        idx = np.searchsorted(self.times, np.asarray(n), side="right") - 1
        return np.where(idx >= 0, self.survival[np.maximum(idx, 0)], 1.0)


def kaplan_meier(sample: LifetimeSample) -> KaplanMeierCurve:
    """Product-limit estimate; records censored at ``n`` stay at risk at ``n``."""
    if len(sample) == 0:
        raise ValueError("sample is empty")
    times, deaths = np.unique(sample.failures, return_counts=True)
    values = np.sort(sample.values)
    at_risk = values.size - np.searchsorted(values, times, side="left")
    surv = np.cumprod(1.0 - deaths / at_risk)
    return KaplanMeierCurve(times.astype(np.int64), surv, at_risk.astype(np.int64), deaths.astype(np.int64))
