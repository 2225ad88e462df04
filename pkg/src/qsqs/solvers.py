"""Samplers for quadratic binary objectives.

Four interchangeable strategies: exhaustive enumeration (exact, capped at
25 variables), greedy single-flip descent, tabu search, and multi-read
simulated annealing.  All of them respect the instance's sense, return a
:class:`SampleSet`, and are deterministic for a fixed seed.  The
``*Sampler`` classes at the bottom wrap the functions in a scikit-learn
style parameter surface so they can be cloned and grid-searched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .exceptions import EmptyInputError, InvalidInputError, TooLargeError
from .qubo import QuboInstance, Sense, qubo_energy

EXHAUSTIVE_MAX_VARS = 25
_ENUM_CHUNK = 1 << 17


@dataclass(frozen=True)
class Sample:
    """One distinct assignment with its energy and read count."""

    bits: tuple[int, ...]
    energy: float
    count: int


@dataclass(frozen=True)
class SampleSet:
    """Aggregated solver output.

    Samples are unique assignments in canonical order: descending count,
    then better energy under the instance's sense, then lexicographically
    smaller bit string.  ``total_reads`` is the number of raw reads the
    samples aggregate, so counts sum to it.
    """

    samples: tuple[Sample, ...]
    total_reads: int
    sense: Sense

    @property
    def best(self) -> Sample:
        """Sample with the best energy (ties: lexicographically smaller bits)."""
        worse = -1.0 if self.sense is Sense.MAXIMIZE else 1.0
        return min(self.samples, key=lambda s: (worse * s.energy, s.bits))


def pick_solution(result: SampleSet) -> tuple[int, ...]:
    """Select the answer from a sample set.

    Highest count wins; ties fall to the better energy under the set's
    sense, then to the lexicographically smallest bit string.  With the
    canonical sample order this is the first sample, but the rule is
    applied explicitly so externally built sets behave the same.
    """
    if not result.samples:
        raise EmptyInputError("empty sample set")
    worse = -1.0 if result.sense is Sense.MAXIMIZE else 1.0
    chosen = min(result.samples, key=lambda s: (-s.count, worse * s.energy, s.bits))
    return chosen.bits


@dataclass(frozen=True)
class AnnealSchedule:
    """Simulated-annealing run parameters.

    ``sweeps`` full passes over the variables per read, with the inverse
    temperature ramped geometrically from ``beta_start`` to ``beta_end``.
    ``sweeps = 0`` with equal endpoints is allowed as a degenerate
    schedule that just returns the random initial states.
    """

    sweeps: int = 150
    beta_start: float = 0.1
    beta_end: float = 30.0
    reads: int = 1000

    def __post_init__(self) -> None:
        if self.sweeps < 0:
            raise InvalidInputError(f"sweeps {self.sweeps} must be >= 0")
        if not (0.0 < self.beta_start <= self.beta_end):
            raise InvalidInputError(
                f"need 0 < beta_start <= beta_end, got {self.beta_start}, {self.beta_end}")
        if self.reads < 1:
            raise InvalidInputError(f"reads {self.reads} must be >= 1")


@dataclass(frozen=True)
class TabuParams:
    """Tabu-search run parameters.

    Each start is a greedy descent to a local optimum followed by
    ``max_iterations`` tabu moves with the given tenure; ``restarts``
    extra starts are run from fresh random states, so the total number
    of starts is ``restarts + 1``.
    """

    tenure: int = 3
    max_iterations: int = 20
    restarts: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tenure < 1:
            raise InvalidInputError(f"tenure {self.tenure} must be >= 1")
        if self.max_iterations < 0:
            raise InvalidInputError(
                f"max_iterations {self.max_iterations} must be >= 0")
        if self.restarts < 0:
            raise InvalidInputError(f"restarts {self.restarts} must be >= 0")


def _cost_terms(instance: QuboInstance) -> tuple[np.ndarray, np.ndarray]:
    """Linear and symmetric pairwise terms of the minimized cost.

    Internally every solver minimizes; a maximization instance is handled
    by negating the terms here and reporting true energies at the end.
    Returns ``(diag, sym)`` where ``sym[i, j]`` holds the pair coefficient
    for ``i != j`` and a zero diagonal, so the cost of ``x`` is
    ``diag @ x + (x @ sym @ x) / 2`` and flip gains stay O(n).
    """
    q = instance.q
    sym = q + q.T
    np.fill_diagonal(sym, 0.0)
    diag = np.diag(q).copy()
    if instance.sense is Sense.MAXIMIZE:
        return -diag, -sym
    return diag, sym


def _aggregate(instance: QuboInstance, reads: list[tuple[int, ...]]) -> SampleSet:
    """Count duplicate reads, attach energies, and order canonically."""
    counts: dict[tuple[int, ...], int] = {}
    for bits in reads:
        counts[bits] = counts.get(bits, 0) + 1
    worse = -1.0 if instance.sense is Sense.MAXIMIZE else 1.0
    samples = [Sample(bits=bits, energy=qubo_energy(instance, bits), count=count)
               for bits, count in counts.items()]
    samples.sort(key=lambda s: (-s.count, worse * s.energy, s.bits))
    return SampleSet(samples=tuple(samples), total_reads=len(reads),
                     sense=instance.sense)


def solve_exhaustive(instance: QuboInstance) -> SampleSet:
    """Enumerate all ``2^n`` assignments and return every exact optimum.

    Each optimal assignment appears once with count 1.  Raises
    :class:`TooLargeError` above ``EXHAUSTIVE_MAX_VARS`` variables.
    """
    n = instance.n
    if n > EXHAUSTIVE_MAX_VARS:
        raise TooLargeError(
            f"{n} variables exceed the exhaustive cap of {EXHAUSTIVE_MAX_VARS}")
    sign = -1.0 if instance.sense is Sense.MAXIMIZE else 1.0
    q = sign * instance.q
    best_cost = math.inf
    best_codes: list[int] = []
    shifts = np.arange(n, dtype=np.uint32)
    for start in range(0, 1 << n, _ENUM_CHUNK):
        stop = min(start + _ENUM_CHUNK, 1 << n)
        codes = np.arange(start, stop, dtype=np.uint32)
        x = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        costs = np.einsum("bi,ij,bj->b", x, q, x, optimize=True)
        chunk_min = costs.min()
        if chunk_min < best_cost:
            best_cost = chunk_min
            best_codes = []
        if chunk_min <= best_cost:
            best_codes.extend(codes[costs == best_cost].tolist())
    reads = [tuple((code >> i) & 1 for i in range(n)) for code in best_codes]
    return _aggregate(instance, reads)


def _greedy_descent(diag: np.ndarray, sym: np.ndarray, x: np.ndarray,
                    field: np.ndarray) -> None:
    """Flip single bits while any flip strictly lowers the cost.

    ``field`` must equal ``sym @ x`` on entry; both ``x`` and ``field``
    are updated in place.
    """
    while True:
        gains = (1.0 - 2.0 * x) * (diag + field)
        i = int(np.argmin(gains))
        if gains[i] >= 0.0:
            return
        step = 1.0 - 2.0 * x[i]
        x[i] += step
        field += step * sym[i]


def solve_greedy(instance: QuboInstance, seed: int = 0) -> SampleSet:
    """Single greedy descent from a random state; one read."""
    rng = np.random.default_rng(seed)
    diag, sym = _cost_terms(instance)
    x = rng.integers(0, 2, size=instance.n).astype(np.float64)
    field = sym @ x
    _greedy_descent(diag, sym, x, field)
    return _aggregate(instance, [tuple(int(v) for v in x)])


def solve_tabu(instance: QuboInstance, params: TabuParams = TabuParams()) -> SampleSet:
    """Multistart tabu search; one read per start.

    Every start first descends greedily, so the result is never worse
    than :func:`solve_greedy` from the same start.  A flipped variable is
    tabu for ``tenure`` iterations unless flipping it would beat the best
    cost seen in this start (aspiration).
    """
    rng = np.random.default_rng(params.seed)
    diag, sym = _cost_terms(instance)
    n = instance.n
    reads: list[tuple[int, ...]] = []
    for _ in range(params.restarts + 1):
        x = rng.integers(0, 2, size=n).astype(np.float64)
        field = sym @ x
        _greedy_descent(diag, sym, x, field)
        cost = float(diag @ x + x @ field / 2.0)
        best_cost = cost
        best_x = x.copy()
        tabu_until = np.zeros(n, dtype=np.int64)
        for iteration in range(1, params.max_iterations + 1):
            gains = (1.0 - 2.0 * x) * (diag + field)
            allowed = (tabu_until < iteration) | (cost + gains < best_cost)
            if not np.any(allowed):
                allowed = tabu_until == tabu_until.min()
            candidate = np.where(allowed, gains, np.inf)
            i = int(np.argmin(candidate))
            step = 1.0 - 2.0 * x[i]
            x[i] += step
            field += step * sym[i]
            cost += gains[i]
            tabu_until[i] = iteration + params.tenure
            if cost < best_cost:
                best_cost = cost
                best_x = x.copy()
        reads.append(tuple(int(v) for v in best_x))
    return _aggregate(instance, reads)


def solve_anneal(instance: QuboInstance,
                 schedule: AnnealSchedule = AnnealSchedule(),
                 seed: int = 0) -> SampleSet:
    """Simulated annealing with Metropolis single-flip sweeps.

    All reads start from independent random states and are annealed in
    parallel through the same geometric beta ramp.  Stands in for a
    quantum annealer: many reads of one instance, aggregated by count.
    """
    rng = np.random.default_rng(seed)
    diag, sym = _cost_terms(instance)
    n = instance.n
    x = rng.integers(0, 2, size=(schedule.reads, n)).astype(np.float64)
    if schedule.sweeps > 0:
        betas = np.geomspace(schedule.beta_start, schedule.beta_end,
                             num=schedule.sweeps)
        field = x @ sym
        for beta in betas:
            for i in range(n):
                gains = (1.0 - 2.0 * x[:, i]) * (diag[i] + field[:, i])
                accept = rng.random(schedule.reads) < np.exp(
                    -beta * np.maximum(gains, 0.0))
                step = np.where(accept, 1.0 - 2.0 * x[:, i], 0.0)
                x[:, i] += step
                field += step[:, None] * sym[i][None, :]
    reads = [tuple(int(v) for v in row) for row in x]
    return _aggregate(instance, reads)


def random_qubo(n: int, seed: int, density: float = 0.5) -> QuboInstance:
    """Random benchmark instance.

    Diagonal entries are uniform on ``[0, 1)``; each upper off-diagonal
    entry is present with probability ``density`` and uniform on
    ``[-1, 0)``.  Mirrors the structure of detection objectives
    (rewarding diagonal, penalizing pairs) and is maximized.
    """
    if n < 1:
        raise InvalidInputError(f"n {n} must be >= 1")
    if not 0.0 <= density <= 1.0:
        raise InvalidInputError(f"density {density} outside [0, 1]")
    rng = np.random.default_rng(seed)
    q = np.zeros((n, n), dtype=np.float64)
    np.fill_diagonal(q, rng.uniform(0.0, 1.0, size=n))
    upper = np.triu_indices(n, k=1)
    values = rng.uniform(-1.0, 0.0, size=len(upper[0]))
    present = rng.random(len(upper[0])) < density
    q[upper] = np.where(present, values, 0.0)
    return QuboInstance(q=q, sense=Sense.MAXIMIZE, labels=tuple(range(n)))


class ExhaustiveSampler(BaseEstimator):
    """Exact enumeration sampler; usable up to 25 variables."""

    def sample(self, instance: QuboInstance) -> SampleSet:
        return solve_exhaustive(instance)


class GreedySampler(BaseEstimator):
    """Single greedy descent from a seeded random state."""

    def __init__(self, random_state: int = 0):
        self.random_state = random_state

    def sample(self, instance: QuboInstance) -> SampleSet:
        return solve_greedy(instance, seed=self.random_state)


class TabuSampler(BaseEstimator):
    """Multistart tabu search sampler."""

    def __init__(self, tenure: int = 3, max_iterations: int = 20,
                 restarts: int = 0, random_state: int = 0):
        self.tenure = tenure
        self.max_iterations = max_iterations
        self.restarts = restarts
        self.random_state = random_state

    def sample(self, instance: QuboInstance) -> SampleSet:
        params = TabuParams(tenure=self.tenure,
                            max_iterations=self.max_iterations,
                            restarts=self.restarts, seed=self.random_state)
        return solve_tabu(instance, params)


class AnnealingSampler(BaseEstimator):
    """Multi-read simulated-annealing sampler."""

    def __init__(self, sweeps: int = 150, beta_start: float = 0.1,
                 beta_end: float = 30.0, reads: int = 1000,
                 random_state: int = 0):
        self.sweeps = sweeps
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.reads = reads
        self.random_state = random_state

    def sample(self, instance: QuboInstance) -> SampleSet:
        schedule = AnnealSchedule(sweeps=self.sweeps,
                                  beta_start=self.beta_start,
                                  beta_end=self.beta_end, reads=self.reads)
        return solve_anneal(instance, schedule, seed=self.random_state)
