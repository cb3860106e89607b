"""NSGA-II with Gaussian mutation only, a decaying sigma and the speed cap
enforced by re-mutating from the parent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .genome import N_GENES, STEP_LENGTH, DomainError, decode, is_feasible, max_feasible_step_gene

Fitness = tuple[float, float]


@dataclass
class Individual:
    genotype: np.ndarray
    fitness: Fitness | None = None
    rank: int | None = None
    crowding: float = 0.0
    generation: int = 0
    index: int = 0
    sigma: float | None = None  # None for the random initial population
    eval_seed: int = 0
    slip_count: int = 0
    fell: bool = False

    @property
    def evaluated(self) -> bool:
        return self.fitness is not None


@dataclass(frozen=True)
class EvoConfig:
    population: int = 8
    generations: int = 8  # counts the initial population; see ``count_initial``
    runs: int = 3
    mutation_probability: float = 1.0
    sigma_initial: float = 1.0 / 6.0
    sigma_decay: float = 0.05
    sigma_min: float = 0.05
    max_remutation_attempts: int = 100
    count_initial: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.population < 2:
            raise DomainError("population must be at least 2")
        if self.generations < 1 or self.runs < 1:
            raise DomainError("generations and runs must be positive")
        if not 0.0 < self.mutation_probability <= 1.0:
            raise DomainError("mutation_probability must be in (0, 1]")
        if self.sigma_initial <= 0 or self.sigma_min <= 0 or self.sigma_decay < 0:
            raise DomainError("sigma parameters must be positive")
        if self.max_remutation_attempts < 1:
            raise DomainError("max_remutation_attempts must be positive")

    @property
    def offspring_generations(self) -> int:
        """Mutation rounds after the initial population."""
        return self.generations - 1 if self.count_initial else self.generations

    @property
    def evaluations_per_run(self) -> int:
        return self.population * (self.offspring_generations + 1)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """Pareto dominance with both objectives maximised."""
    return all(x >= y for x, y in zip(a, b)) and any(x > y for x, y in zip(a, b))


def fast_non_dominated_sort(fits: Sequence[Sequence[float]]) -> list[list[int]]:
    """Indices of ``fits`` grouped into successive non-dominated fronts."""
    if len(fits) == 0:
        return []
    F = np.asarray(fits, dtype=float).reshape(len(fits), -1)
    n = len(F)
    ge = np.all(F[:, None, :] >= F[None, :, :], axis=2)
    gt = np.any(F[:, None, :] > F[None, :, :], axis=2)
    dom = ge & gt  # dom[i, j]: i dominates j
    count = dom.sum(axis=0)
    fronts = []
    current = [i for i in range(n) if count[i] == 0]
    while current:
        fronts.append(current)
        nxt = []
        for i in current:
            for j in np.flatnonzero(dom[i]):
                count[j] -= 1
                if count[j] == 0:
                    nxt.append(int(j))
        current = sorted(nxt)
    return fronts


def crowding_distance(fits: Sequence[Sequence[float]]) -> np.ndarray:
    """Crowding distance of every member of one front."""
    F = np.asarray(fits, dtype=float).reshape(len(fits), -1)
    n, m = F.shape
    if n == 0:
        raise DomainError("empty front")
    d = np.zeros(n)
    if n <= 2:
        d[:] = math.inf
        return d
    for k in range(m):
        order = np.argsort(F[:, k], kind="stable")
        lo, hi = F[order[0], k], F[order[-1], k]
        d[order[0]] = d[order[-1]] = math.inf
        if hi == lo:
            continue
        gaps = (F[order[2:], k] - F[order[:-2], k]) / (hi - lo)
        d[order[1:-1]] += gaps
    return d


def assign_rank_and_crowding(pop: list[Individual]) -> list[list[int]]:
    fronts = fast_non_dominated_sort([ind.fitness for ind in pop])
    for r, front in enumerate(fronts):
        cd = crowding_distance([pop[i].fitness for i in front])
        for i, c in zip(front, cd):
            pop[i].rank = r
            pop[i].crowding = float(c)
    return fronts


def sigma_schedule(generation: int, cfg: EvoConfig | None = None) -> float:
    """Mutation step size for mutation round ``generation`` (0-based)."""
    if generation < 0:
        raise DomainError("generation must be non-negative")
    cfg = cfg or EvoConfig()
    return max(cfg.sigma_initial - cfg.sigma_decay * generation, cfg.sigma_min)


def mutate(genes, sigma: float, rng: np.random.Generator, *, max_attempts: int = 100,
           probability: float = 1.0) -> np.ndarray:
    """Gaussian mutation clamped to [0, 1] that always returns a feasible genotype.

    Infeasible children are discarded and the parent mutated afresh. After
    ``max_attempts`` failures the last child keeps its other genes and gets
    the largest feasible step-length gene.
    """
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    parent = np.asarray(genes, dtype=float)
    child = parent
    for _ in range(max_attempts):
        step = rng.normal(0.0, sigma, size=parent.shape)
        if probability < 1.0:
            step *= rng.random(parent.shape) < probability
        child = np.clip(parent + step, 0.0, 1.0)
        if is_feasible(decode(child)):
            return child
    child = child.copy()
    child[STEP_LENGTH] = max_feasible_step_gene(child)
    return child


def sample_feasible(rng: np.random.Generator) -> np.ndarray:
    while True:
        g = rng.random(N_GENES)
        if is_feasible(decode(g)):
            return g


def _stream(seed: int, generation: int, index: int) -> tuple[np.random.Generator, int]:
    ss = np.random.SeedSequence([seed, generation, index])
    eval_seed = int(ss.generate_state(1, np.uint32)[0])
    return np.random.default_rng(ss), eval_seed


def _better(a: Individual, b: Individual) -> bool:
    return (a.rank, -a.crowding) < (b.rank, -b.crowding)


def tournament(pop: list[Individual], rng: np.random.Generator) -> Individual:
    i, j = rng.choice(len(pop), size=2, replace=False)
    return pop[j] if _better(pop[j], pop[i]) else pop[i]


def survive(pool: list[Individual], mu: int) -> list[Individual]:
    """(mu + lambda) truncation by front, then by crowding distance."""
    fronts = assign_rank_and_crowding(pool)
    chosen: list[int] = []
    for front in fronts:
        if len(chosen) + len(front) <= mu:
            chosen.extend(front)
            continue
        rest = sorted(front, key=lambda i: -pool[i].crowding)
        chosen.extend(rest[: mu - len(chosen)])
        break
    survivors = [pool[i] for i in chosen]
    assign_rank_and_crowding(survivors)
    return survivors


def hypervolume(fits: Sequence[Sequence[float]], ref: Fitness = (0.0, -1.0)) -> float:
    """Area dominated by ``fits`` and bounded below by ``ref`` (2 objectives, maximised)."""
    pts = [tuple(f) for f in fits if f[0] > ref[0] and f[1] > ref[1]]
    if not pts:
        return 0.0
    pts.sort(key=lambda f: (-f[0], -f[1]))
    area, best_y = 0.0, ref[1]
    for x, y in pts:
        if y > best_y:
            area += (x - ref[0]) * (y - best_y)
            best_y = y
    return area


@dataclass
class EvoHistory:
    seed: int
    evaluated: list[Individual] = field(default_factory=list)
    populations: list[list[Individual]] = field(default_factory=list)
    error: str | None = None

    def generation(self, g: int) -> list[Individual]:
        return [ind for ind in self.evaluated if ind.generation == g]

    @property
    def final_population(self) -> list[Individual]:
        return self.populations[-1] if self.populations else []


Evaluator = Callable[[np.ndarray, int], object]


def _snapshot(pop: list[Individual]) -> list[Individual]:
    # survivors are re-ranked in later rounds, so freeze rank/crowding here
    return [replace(ind) for ind in pop]


def _evaluate(evaluator: Evaluator, ind: Individual) -> None:
    res = evaluator(ind.genotype, ind.eval_seed)
    ind.fitness = (float(res.speed), float(res.stability))
    ind.slip_count = int(getattr(res, "slip_count", 0))
    ind.fell = bool(getattr(res, "fell", False))


def run(evaluator: Evaluator, cfg: EvoConfig = EvoConfig(), seed: int | None = None,
        on_evaluated: Callable[[Individual], None] | None = None) -> EvoHistory:
    """One evolutionary run.

    ``evaluator(genotype, eval_seed)`` must return an object with ``speed``
    and ``stability`` attributes (``slip_count`` and ``fell`` are optional).
    Randomness for individual ``i`` of generation ``g`` comes from its own
    stream keyed on (seed, g, i), so results do not depend on evaluation
    order. If the evaluator raises, the history so far is kept on the
    exception as ``exc.history`` before it propagates.
    """
    seed = cfg.seed if seed is None else seed
    hist = EvoHistory(seed)

    def record(ind: Individual) -> None:
        hist.evaluated.append(ind)
        if on_evaluated is not None:
            on_evaluated(ind)

    try:
        pop = []
        for i in range(cfg.population):
            rng, es = _stream(seed, 0, i)
            ind = Individual(sample_feasible(rng), generation=0, index=i, eval_seed=es)
            _evaluate(evaluator, ind)
            record(ind)
            pop.append(ind)
        assign_rank_and_crowding(pop)
        hist.populations.append(_snapshot(pop))

        for g in range(1, cfg.offspring_generations + 1):
            sigma = sigma_schedule(g - 1, cfg)
            kids = []
            for i in range(cfg.population):
                rng, es = _stream(seed, g, i)
                parent = tournament(pop, rng)
                genes = mutate(parent.genotype, sigma, rng, max_attempts=cfg.max_remutation_attempts,
                               probability=cfg.mutation_probability)
                kid = Individual(genes, generation=g, index=i, sigma=sigma, eval_seed=es)
                _evaluate(evaluator, kid)
                record(kid)
                kids.append(kid)
            pop = survive(pop + kids, cfg.population)
            hist.populations.append(_snapshot(pop))
    except Exception as exc:
        hist.error = repr(exc)
        exc.history = hist
        raise
    return hist
