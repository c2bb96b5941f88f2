"""Random generation of censored discrete lifetime samples.

Randomness comes from :class:`SeededStream`, a numpy ``PCG64`` bit generator
seeded through ``SeedSequence(entropy=seed, spawn_key=(stream_id,))``. Equal
``(seed, stream_id)`` pairs reproduce the same draws bit for bit; distinct
stream ids give independent substreams for parallel replicates.
"""

from dataclasses import dataclass, field
from enum import IntEnum
import math

import numpy as np

from .distributions import IpdParams, W1Params, WeibullParams

MAX_SOLICITATIONS = 10**9


class Event(IntEnum):
    """Observation type; the integer values are the CSV codes."""

    CENSORED = 0
    FAILURE = 1


class NonTerminationError(RuntimeError):
    """The urn sampler ran past :data:`MAX_SOLICITATIONS`."""


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.stream_id < 0:
            raise ValueError("stream_id must be >= 0")

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of the stream."""
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(seq))


def _rng(stream):
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


@dataclass(frozen=True, eq=False)
class LifetimeSample:
    """Flat censored sample.

    ``values`` are positive solicitation counts and ``events`` is a boolean
    array, ``True`` for an observed failure and ``False`` for a right-censored
    record. ``latent`` optionally keeps the uncensored lifetimes behind the
    censored records (instrumented mode of :func:`apply_censoring`).
    """

    values: np.ndarray
    events: np.ndarray
    provenance: dict | None = None
    latent: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.dtype.kind not in "iu":
            if values.size and np.any(values != np.floor(values)):
                raise ValueError("lifetime values must be integers")
            values = values.astype(np.int64)
        events = np.asarray(self.events, dtype=bool)
        if values.ndim != 1 or values.shape != events.shape:
            raise ValueError("values and events must be 1-d arrays of equal length")
        if values.size and values.min() < 1:
            raise ValueError("lifetime values must be >= 1")
        object.__setattr__(self, "values", values.astype(np.int64))
        object.__setattr__(self, "events", events)

    @classmethod
    def from_records(cls, records, provenance=None):
        """Build from ``(value, event)`` pairs, ``event`` an :class:`Event` or 0/1."""
        records = list(records)
        values = np.array([int(v) for v, _ in records], dtype=np.int64)
        events = np.array([int(e) == Event.FAILURE for _, e in records], dtype=bool)
        return cls(values, events, provenance)

    @classmethod
    def uncensored(cls, values, provenance=None):
        values = np.asarray(values, dtype=np.int64)
        return cls(values, np.ones(values.shape, dtype=bool), provenance)

    def __len__(self):
        return int(self.values.size)

    def __eq__(self, other):
        if not isinstance(other, LifetimeSample):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(
            self.events, other.events
        )

    __hash__ = None

    def records(self):
        return [
            (int(v), Event.FAILURE if e else Event.CENSORED)
            for v, e in zip(self.values, self.events)
        ]

    @property
    def failures(self) -> np.ndarray:
        return self.values[self.events]

    @property
    def censors(self) -> np.ndarray:
        return self.values[~self.events]

    @property
    def n_failures(self) -> int:
        return int(self.events.sum())

    @property
    def n_censored(self) -> int:
        return int((~self.events).sum())

    def summary(self) -> dict:
        """The data-summary block of a fit report."""
        return {
            "size": len(self),
            "failures": self.n_failures,
            "censors": self.n_censored,
            "sum_observed": int(self.values.sum()),
        }

    def grouped(self) -> "GroupedSample":
        return GroupedSample.from_flat(self)


@dataclass(frozen=True, eq=False)
class GroupedSample:
    """Survivors grouped as ``k_i`` records censored at ``n_i``, plus the list
    of failure values."""

    survivor_values: np.ndarray
    survivor_counts: np.ndarray
    failures: np.ndarray

    def __post_init__(self):
        sv = np.asarray(self.survivor_values, dtype=np.int64)
        sc = np.asarray(self.survivor_counts, dtype=np.int64)
        fl = np.sort(np.asarray(self.failures, dtype=np.int64))
        if sv.shape != sc.shape:
            raise ValueError("survivor values and counts differ in length")
        if sc.size and sc.min() < 1:
            raise ValueError("survivor multiplicities must be >= 1")
        if (sv.size and sv.min() < 1) or (fl.size and fl.min() < 1):
            raise ValueError("values must be >= 1")
        order = np.argsort(sv, kind="stable")
        object.__setattr__(self, "survivor_values", sv[order])
        object.__setattr__(self, "survivor_counts", sc[order])
        object.__setattr__(self, "failures", fl)

    @classmethod
    def from_flat(cls, sample: LifetimeSample) -> "GroupedSample":
        sv, sc = np.unique(sample.censors, return_counts=True)
        return cls(sv, sc, sample.failures)

    @classmethod
    def from_pairs(cls, survivors, failures):
        survivors = list(survivors)
        return cls(
            np.array([n for n, _ in survivors], dtype=np.int64),
            np.array([k for _, k in survivors], dtype=np.int64),
            np.asarray(list(failures), dtype=np.int64),
        )

    @property
    def survivors(self):
        return list(zip(self.survivor_values.tolist(), self.survivor_counts.tolist()))

    def __len__(self):
        return int(self.survivor_counts.sum() + self.failures.size)

    def __eq__(self, other):
        if not isinstance(other, GroupedSample):
            return NotImplemented
        return (
            np.array_equal(self.survivor_values, other.survivor_values)
            and np.array_equal(self.survivor_counts, other.survivor_counts)
            and np.array_equal(self.failures, other.failures)
        )

    __hash__ = None

    def to_flat(self) -> LifetimeSample:
        censored = np.repeat(self.survivor_values, self.survivor_counts)
        values = np.concatenate([self.failures, censored])
        events = np.concatenate(
            [np.ones(self.failures.size, bool), np.zeros(censored.size, bool)]
        )
        return LifetimeSample(values, events)


def _check_count(count):
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    return int(count)


def sample_ipd(params: IpdParams, count: int, rng) -> LifetimeSample:
    """Draw ``count`` lifetimes from the Inverse Polya law by the urn cohort
    algorithm.

    All ``count`` items are solicited together: at step ``k`` each surviving
    item fails with probability ``(alpha + (k-1) zeta) / (1 + (k-1) zeta)``;
    the number of failures among the ``n_k`` survivors is a binomial draw.
    The values are returned in random order.
    """
    count = _check_count(count)
    gen = _rng(rng)
    values = np.empty(count, dtype=np.int64)
    alive = count
    filled = 0
    k = 1
    while alive > 0:
        if k > MAX_SOLICITATIONS:
            raise NonTerminationError(
                f"urn sampler exceeded {MAX_SOLICITATIONS} solicitations"
            )
        hazard = (params.alpha + (k - 1) * params.zeta) / (1.0 + (k - 1) * params.zeta)
        failed = int(gen.binomial(alive, hazard))
        values[filled : filled + failed] = k
        filled += failed
        alive -= failed
        k += 1
    gen.shuffle(values)
    return LifetimeSample.uncensored(
        values, {"model": "ipd", "alpha": params.alpha, "zeta": params.zeta}
    )


def _weibull_inversion(eta, beta, count, gen):
    # T = eta * E**(1/beta) with E standard exponential
    return eta * gen.standard_exponential(count) ** (1.0 / beta)


def sample_w1(params: W1Params, count: int, rng) -> LifetimeSample:
    """Draw Weibull-1 lifetimes as ``ceil(T)`` with ``T`` continuous Weibull.

    Exact, because ``P[ceil(T) > n] = P[T > n] = exp(-(n/eta)**beta)`` at every
    integer ``n``.
    """
    count = _check_count(count)
    t = _weibull_inversion(params.eta, params.beta, count, _rng(rng))
    values = np.maximum(np.ceil(t), 1.0).astype(np.int64)
    return LifetimeSample.uncensored(
        values, {"model": "w1", "eta": params.eta, "beta": params.beta}
    )


def sample_weibull_discretized(params: WeibullParams, count: int, rng) -> LifetimeSample:
    """Continuous Weibull draws rounded up to integers; the result follows
    ``W1(eta, beta)``."""
    sample = sample_w1(W1Params(params.eta, params.beta), count, rng)
    return LifetimeSample(
        sample.values,
        sample.events,
        {"model": "weibull-discretized", "eta": params.eta, "beta": params.beta},
    )


CENSOR_MECHANISMS = ("uniform", "independent")


def _calibrate_scale(lifetimes, rate):
    """Scale ``theta`` with ``mean_i P[ceil(theta E) < n_i] = rate``, E ~ Exp(1)."""
    gaps = lifetimes.astype(float) - 1.0

    def frac(theta):
        return float(np.mean(-np.expm1(-gaps / theta)))

    if rate >= float(np.mean(gaps > 0)):
        raise ValueError("censoring rate unreachable: too many lifetimes equal 1")
    lo, hi = 1e-12, 1.0
    while frac(hi) > rate:
        hi *= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if frac(mid) > rate:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < 1e-13:
            break
    return math.sqrt(lo * hi)


def apply_censoring(
    sample: LifetimeSample,
    rate: float,
    rng,
    *,
    exact_count: bool = False,
    keep_latent: bool = False,
    mechanism: str = "uniform",
) -> LifetimeSample:
    """Right-censor an uncensored sample.

    ``mechanism="uniform"`` (default): each record is selected independently
    with probability ``rate`` (or, with ``exact_count``, exactly
    ``ceil(rate * len(sample))`` records are chosen at random), and a selected
    record with lifetime ``n`` is replaced by a censoring value drawn uniformly
    on ``{1, ..., n}``. The censoring value depends on the lifetime, so this
    scheme is informative: likelihood fits that treat censors as ``S(c)`` are
    biased under it.

    ``mechanism="independent"``: censoring times ``C = ceil(theta * E)``, ``E``
    standard exponential and independent of the lifetimes, with ``theta``
    calibrated on the sample so that the expected censored fraction is
    ``rate``. A record is censored at ``C`` when ``C < n``.

    Parameters
    ----------
    sample : LifetimeSample
        Uncensored sample.
    rate : float
        Target censoring fraction in ``[0, 1)``.
    rng : SeededStream or numpy.random.Generator
    exact_count : bool
        Censor a deterministic number of records (uniform mechanism only).
    keep_latent : bool
        Attach the original lifetimes as ``latent`` on the result.
    mechanism : {"uniform", "independent"}
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError("censoring rate must lie in [0, 1)")
    if mechanism not in CENSOR_MECHANISMS:
        raise ValueError(f"unknown censoring mechanism {mechanism!r}")
    if sample.n_censored:
        raise ValueError("sample is already censored")
    gen = _rng(rng)
    size = len(sample)
    values = sample.values.copy()
    if mechanism == "independent":
        if exact_count:
            raise ValueError("exact_count applies to the uniform mechanism only")
        if rate == 0.0:
            chosen = np.zeros(size, dtype=bool)
        else:
            theta = _calibrate_scale(values, rate)
            cens_times = np.maximum(np.ceil(theta * gen.standard_exponential(size)), 1)
            chosen = cens_times < values
            values[chosen] = cens_times[chosen].astype(np.int64)
    else:
        if exact_count:
            chosen = np.zeros(size, dtype=bool)
            m = min(size, math.ceil(rate * size))
            chosen[gen.choice(size, size=m, replace=False)] = True
        else:
            chosen = gen.random(size) < rate
        values[chosen] = gen.integers(1, values[chosen] + 1)
    provenance = dict(sample.provenance or {})
    provenance["censor_rate"] = rate
    provenance["censor_mechanism"] = mechanism
    return LifetimeSample(
        values,
        ~chosen,
        provenance,
        latent=sample.values.copy() if keep_latent else None,
    )
