"""Generational mu+lambda evolutionary algorithm over real vectors (minimization)."""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..errors import InvalidArgument
from ..rng import SeededRng

log = logging.getLogger(__name__)

WORST_FITNESS = math.inf


@dataclass
class EAConfig:
    n_pop: int = 250
    n_tour: int = 8
    n_gen: int = 500
    p_crossover: float = 0.8
    p_mutation: float = 0.2
    mutation_sigma: float = 0.15
    alpha_low: float = -1.0
    alpha_high: float = 2.0
    diversity_retries: int = 10
    init_low: Optional[float] = None     # None: representation default
    init_high: Optional[float] = None
    seed: int = 0

    def validate(self) -> "EAConfig":
        if self.n_pop < 1:
            raise InvalidArgument("n_pop must be >= 1")
        if not 1 <= self.n_tour <= self.n_pop:
            raise InvalidArgument(f"n_tour must lie in [1, n_pop], got {self.n_tour}")
        if self.n_gen < 0:
            raise InvalidArgument("n_gen must be >= 0")
        if not (0 <= self.p_crossover <= 1 and 0 <= self.p_mutation <= 1) \
                or abs(self.p_crossover + self.p_mutation - 1.0) > 1e-12:
            raise InvalidArgument("operator probabilities must be in [0, 1] and sum to 1")
        if not self.mutation_sigma > 0:
            raise InvalidArgument("mutation sigma must be positive")
        if self.diversity_retries < 0:
            raise InvalidArgument("diversity retries must be >= 0")
        return self


@dataclass
class Individual:
    genotype: np.ndarray
    fitness: float = WORST_FITNESS


@dataclass(frozen=True)
class HistoryRecord:
    iteration: int
    best: float
    median: float
    sd: float
    best_hash: str


@dataclass
class EvolutionHistory:
    records: list = field(default_factory=list)
    best: Optional[Individual] = None
    population: list = field(default_factory=list)

    @property
    def best_fitness(self) -> list[float]:
        return [r.best for r in self.records]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "best", "median", "sd", "best_hash"])
            for r in self.records:
                w.writerow([r.iteration, f"{r.best:.9g}", f"{r.median:.9g}", f"{r.sd:.9g}", r.best_hash])


def gaussian_mutation(x: np.ndarray, sigma: float, rng: SeededRng) -> np.ndarray:
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive")
    return x + rng.normal(0.0, sigma, size=len(x))


def extended_segment_crossover(x1: np.ndarray, x2: np.ndarray, rng: SeededRng,
                               low: float = -1.0, high: float = 2.0) -> np.ndarray:
    if len(x1) != len(x2):
        raise InvalidArgument(f"parent dimensions differ: {len(x1)} vs {len(x2)}")
    alpha = rng.uniform(low, high, size=len(x1))
    return x1 + alpha * (x2 - x1)


def tournament_select(fitnesses: Sequence[float], n_tour: int, rng: SeededRng) -> int:
    """Index of the fittest among ``n_tour`` uniform draws with replacement;
    ties go to the lowest population index."""
    if len(fitnesses) == 0:
        raise InvalidArgument("empty population")
    picks = rng.integers(0, len(fitnesses), size=n_tour)
    return int(min(picks, key=lambda i: (fitnesses[i], i)))


def genotype_hash(x: np.ndarray) -> str:
    return hashlib.sha1(np.ascontiguousarray(x, dtype=np.float64).tobytes()).hexdigest()[:12]


def _safe_eval(fn: Callable, x: np.ndarray) -> float:
    try:
        v = float(fn(x))
    except Exception as exc:  # any failure of a candidate is a worst-fitness candidate
        log.warning("fitness evaluation failed: %s", exc)
        return WORST_FITNESS
    return WORST_FITNESS if math.isnan(v) else v


class _Evaluator:
    def __init__(self, fn: Callable, workers: int):
        self.fn = fn
        self.pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    def __call__(self, genotypes: list[np.ndarray]) -> list[float]:
        if self.pool is None:
            return [_safe_eval(self.fn, g) for g in genotypes]
        return list(self.pool.map(_safe_eval, [self.fn] * len(genotypes), genotypes))

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()


def _record(iteration: int, pop: list[Individual]) -> HistoryRecord:
    f = np.array([ind.fitness for ind in pop])
    finite = f[np.isfinite(f)]
    sd = float(np.std(finite)) if len(finite) else math.nan
    return HistoryRecord(iteration, float(f[0]), float(np.median(f)), sd, genotype_hash(pop[0].genotype))


def _truncate(pop: list[Individual], n: int) -> list[Individual]:
    # stable sort: earlier individuals (parents) win ties
    order = sorted(range(len(pop)), key=lambda i: (pop[i].fitness, i))
    return [pop[i] for i in order[:n]]


def evolve(config: EAConfig, dimension: int, fitness_fn: Callable[[np.ndarray], float],
           rng: Optional[SeededRng] = None, init_range: tuple[float, float] = (0.0, 1.0),
           workers: int = 1, on_iteration: Optional[Callable[[HistoryRecord], None]] = None) -> EvolutionHistory:
    config.validate()
    rng = rng or SeededRng(config.seed)
    low = config.init_low if config.init_low is not None else init_range[0]
    high = config.init_high if config.init_high is not None else init_range[1]
    evaluate = _Evaluator(fitness_fn, workers)
    history = EvolutionHistory()
    try:
        genotypes = [rng.uniform(low, high, size=dimension) for _ in range(config.n_pop)]
        pop = [Individual(g, f) for g, f in zip(genotypes, evaluate(genotypes))]
        pop = _truncate(pop, config.n_pop)
        history.records.append(_record(0, pop))
        if on_iteration:
            on_iteration(history.records[-1])
        for it in range(1, config.n_gen + 1):
            fit = [ind.fitness for ind in pop]
            seen = {ind.genotype.tobytes() for ind in pop}
            children = []
            for _ in range(config.n_pop):
                for _attempt in range(config.diversity_retries + 1):
                    if rng.random() < config.p_crossover:
                        a = pop[tournament_select(fit, config.n_tour, rng)].genotype
                        b = pop[tournament_select(fit, config.n_tour, rng)].genotype
                        child = extended_segment_crossover(a, b, rng, config.alpha_low, config.alpha_high)
                    else:
                        a = pop[tournament_select(fit, config.n_tour, rng)].genotype
                        child = gaussian_mutation(a, config.mutation_sigma, rng)
                    if child.tobytes() not in seen:
                        break
                seen.add(child.tobytes())
                children.append(child)
            offspring = [Individual(g, f) for g, f in zip(children, evaluate(children))]
            pop = _truncate(pop + offspring, config.n_pop)
            history.records.append(_record(it, pop))
            if on_iteration:
                on_iteration(history.records[-1])
    finally:
        evaluate.close()
    history.population = pop
    history.best = pop[0]
    return history


def sphere(x: np.ndarray) -> float:
    return float(np.dot(x, x))
