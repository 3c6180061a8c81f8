"""
probepath.tsp

Closed-tour optimisation over a TimeMatrix: start at the depot (index 0), visit every
MP exactly once, return to the depot.

Features:
  - brute_force: exact oracle for m <= 10 (lexicographically first optimum)
  - nearest_neighbor: greedy baseline, ties to the lowest index
  - solve_sa: simulated annealing, 2-opt reversal / pair swap moves, NN start
  - solve_ga: order crossover + swap mutation, tournament selection, elitism of 1
  - solve_aco: ant colony on directed edges, desirability 1 / T[i][q]
  - preprocess_inaccessible / eliminate_unreachable / solve_accessible: A_inf handling

A_inf legs stay in the objective at their sentinel value; any tour that still uses one
is flagged `tainted`. Every solver is deterministic for a given seed and returns the
best tour it has seen.
"""
from __future__ import annotations

import itertools
import logging
import math
import random
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, NamedTuple, Sequence, Tuple

import numpy as np

from .config import SolverParams
from .errors import SolverSizeError
from .timing import TimeMatrix, tour_time

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX = 10


@dataclass(frozen=True)
class Tour:
    order: Tuple[int, ...]
    total_time: float
    tainted: bool
    solver: str
    seed: int = 0
    iterations: int = 0
    history: Tuple[float, ...] = ()

    def ids(self, T: TimeMatrix) -> List[str]:
        return [T.id_of(k) for k in self.order]


def _tour(order: Sequence[int], T: TimeMatrix, solver: str, seed: int = 0, iterations: int = 0,
          history: Sequence[float] = ()) -> Tour:
    cost = tour_time(order, T)
    return Tour(tuple(order), cost.total, cost.tainted, solver, seed, iterations, tuple(history))


def _cost(order: Sequence[int], rows: List[List[float]]) -> float:
    total = rows[0][order[0]]
    for a, b in zip(order, order[1:]):
        total += rows[a][b]
    return total + rows[order[-1]][0]


# ---------------------------------------------------------------------------
# inaccessible MPs
# ---------------------------------------------------------------------------

def preprocess_inaccessible(T: TimeMatrix) -> Tuple[TimeMatrix, List[str]]:
    """Drop MPs whose off-diagonal entries are all A_inf, repeating until none are left."""
    keep = list(range(1, T.m + 1))
    excluded: List[str] = []
    changed = True
    while changed:
        changed = False
        nodes = [0, *keep]
        for k in list(keep):
            if all(T.is_inf(k, other) for other in nodes if other != k):
                keep.remove(k)
                excluded.append(T.id_of(k))
                changed = True
        if changed:
            logger.debug("inaccessible after pass: %s", excluded)
    return T.reduced(keep), excluded


def eliminate_unreachable(T: TimeMatrix) -> Tuple[TimeMatrix, List[str]]:
    """Drop MPs that no A_inf-free tour can contain.

    An MP needs two finite neighbours (one when it is the only MP) and must share a
    finite-edge component with the depot.
    """
    keep = set(range(1, T.m + 1))
    changed = True
    while changed:
        changed = False
        needed = 1 if len(keep) == 1 else 2
        for k in sorted(keep):
            degree = sum(1 for other in [0, *keep] if other != k and not T.is_inf(k, other))
            if degree < needed:
                keep.discard(k)
                changed = True
                break
    reached = {0}
    frontier = [0]
    while frontier:
        node = frontier.pop()
        for other in keep:
            if other not in reached and not T.is_inf(node, other):
                reached.add(other)
                frontier.append(other)
    kept = sorted(keep & reached)
    excluded = [T.id_of(k) for k in range(1, T.m + 1) if k not in kept]
    return T.reduced(kept), excluded


# ---------------------------------------------------------------------------
# exact and greedy
# ---------------------------------------------------------------------------

def brute_force(T: TimeMatrix) -> Tour:
    m = T.m
    if m > BRUTE_FORCE_MAX:
        raise SolverSizeError(f"brute force supports at most {BRUTE_FORCE_MAX} MPs, got {m}")
    if m == 0:
        return _tour((), T, "BruteForce")
    rows = T.values.tolist()
    symmetric = bool(np.array_equal(T.values, T.values.T))
    best_order: Tuple[int, ...] = ()
    best = math.inf
    count = 0
    for order in itertools.permutations(range(1, m + 1)):
        # a reversed tour costs the same; keep the lexicographically smaller of the pair
        if symmetric and m > 1 and order[0] > order[-1]:
            continue
        count += 1
        cost = _cost(order, rows)
        if cost < best - 1e-9:
            best, best_order = cost, order
    return _tour(best_order, T, "BruteForce", iterations=count)


def nearest_neighbor(T: TimeMatrix, start: int = 0) -> Tour:
    rows = T.values.tolist()
    unvisited = list(range(1, T.m + 1))
    order: List[int] = []
    current = start
    while unvisited:
        nxt = min(unvisited, key=lambda k: (rows[current][k], k))
        order.append(nxt)
        unvisited.remove(nxt)
        current = nxt
    return _tour(order, T, "NN")


# ---------------------------------------------------------------------------
# simulated annealing
# ---------------------------------------------------------------------------

def _initial_temperature(T: TimeMatrix) -> float:
    off = T.values[~np.eye(T.m + 1, dtype=bool)]
    finite = off[off < T.a_inf]
    if len(finite) == 0:
        return 1.0
    return float(finite.mean()) * T.m


def solve_sa(T: TimeMatrix, params: SolverParams = SolverParams()) -> Tour:
    start = nearest_neighbor(T)
    m = T.m
    per_temperature = params.sa_iterations_per_temperature
    if per_temperature is None:
        per_temperature = 100 * m
    t0 = params.sa_initial_temperature
    if t0 is None:
        t0 = _initial_temperature(T)
    if m < 2 or per_temperature == 0 or t0 <= 0:
        return Tour(start.order, start.total_time, start.tainted, "SA", params.seed)

    rng = random.Random(params.seed)
    rows = T.values.tolist()
    symmetric = bool(np.array_equal(T.values, T.values.T))
    seq = [0, *start.order, 0]
    current = _cost(seq[1:-1], rows)
    best_seq, best = seq[:], current
    history = [best]
    t_stop = t0 * params.sa_final_temperature_ratio
    temperature = t0
    proposals = 0
    steps = 0

    while temperature > t_stop:
        if params.sa_max_temperatures is not None and steps >= params.sa_max_temperatures:
            break
        for _ in range(per_temperature):
            p, q = sorted(rng.sample(range(1, m + 1), 2))
            reverse = rng.random() < 0.5
            if reverse:
                if symmetric:
                    delta = (rows[seq[p - 1]][seq[q]] + rows[seq[p]][seq[q + 1]]
                             - rows[seq[p - 1]][seq[p]] - rows[seq[q]][seq[q + 1]])
                else:
                    trial = seq[:p] + seq[p:q + 1][::-1] + seq[q + 1:]
                    delta = _cost(trial[1:-1], rows) - current
            else:
                edges = sorted({p - 1, p, q - 1, q})
                swapped = {p: seq[q], q: seq[p]}

                def at(k):
                    return swapped.get(k, seq[k])

                delta = sum(rows[at(e)][at(e + 1)] - rows[seq[e]][seq[e + 1]] for e in edges)
            proposals += 1
            if delta <= 0 or rng.random() < math.exp(-delta / temperature):
                if reverse:
                    seq[p:q + 1] = seq[p:q + 1][::-1]
                else:
                    seq[p], seq[q] = seq[q], seq[p]
                current += delta
                if current < best - 1e-9:
                    current = _cost(seq[1:-1], rows)
                    if current < best:
                        best, best_seq = current, seq[:]
        history.append(best)
        temperature *= params.sa_cooling_rate
        steps += 1

    logger.debug("SA: %d temperatures, %d proposals, best %.3f", steps, proposals, best)
    return _tour(best_seq[1:-1], T, "SA", params.seed, proposals, history)


# ---------------------------------------------------------------------------
# genetic algorithm
# ---------------------------------------------------------------------------

def _order_crossover(p1: List[int], p2: List[int], rng: random.Random) -> List[int]:
    n = len(p1)
    a, b = sorted(rng.sample(range(n + 1), 2))
    child: List[int] = [0] * n
    child[a:b] = p1[a:b]
    taken = set(p1[a:b])
    fill = [g for g in p2[b:] + p2[:b] if g not in taken]
    for offset, gene in enumerate(fill):
        child[(b + offset) % n] = gene
    return child


def solve_ga(T: TimeMatrix, params: SolverParams = SolverParams()) -> Tour:
    start = nearest_neighbor(T)
    m = T.m
    if m < 2:
        return Tour(start.order, start.total_time, start.tainted, "GA", params.seed)
    rng = random.Random(params.seed)
    rows = T.values.tolist()

    population = [list(start.order)]
    while len(population) < params.ga_population:
        individual = list(range(1, m + 1))
        rng.shuffle(individual)
        population.append(individual)
    costs = [_cost(ind, rows) for ind in population]
    best_index = min(range(len(population)), key=lambda k: (costs[k], k))
    best, best_cost = population[best_index][:], costs[best_index]
    history = [best_cost]

    def tournament() -> List[int]:
        contenders = rng.sample(range(len(population)), min(params.ga_tournament, len(population)))
        return population[min(contenders, key=lambda k: (costs[k], k))]

    for _ in range(params.ga_generations):
        offspring = [best[:]]
        while len(offspring) < params.ga_population:
            p1, p2 = tournament(), tournament()
            child = _order_crossover(p1, p2, rng) if rng.random() < params.ga_crossover_rate else p1[:]
            if rng.random() < params.ga_mutation_rate:
                i, j = rng.sample(range(m), 2)
                child[i], child[j] = child[j], child[i]
            offspring.append(child)
        population = offspring
        costs = [_cost(ind, rows) for ind in population]
        gen_best = min(range(len(population)), key=lambda k: (costs[k], k))
        if costs[gen_best] < best_cost:
            best, best_cost = population[gen_best][:], costs[gen_best]
        history.append(best_cost)

    logger.debug("GA: %d generations, best %.3f", params.ga_generations, best_cost)
    return _tour(best, T, "GA", params.seed, params.ga_generations, history)


# ---------------------------------------------------------------------------
# ant colony
# ---------------------------------------------------------------------------

def solve_aco(T: TimeMatrix, params: SolverParams = SolverParams()) -> Tour:
    start = nearest_neighbor(T)
    m = T.m
    if m < 2:
        return Tour(start.order, start.total_time, start.tainted, "ACO", params.seed)
    rng = random.Random(params.seed)
    rows = T.values.tolist()

    tau0 = 1.0 / (m * max(start.total_time, 1e-12))
    tau = np.full((m + 1, m + 1), tau0)
    eta = 1.0 / np.maximum(T.values, 1e-12)
    best, best_cost = list(start.order), _cost(start.order, rows)
    history = [best_cost]

    for _ in range(params.aco_iterations):
        attraction = (tau ** params.aco_alpha) * (eta ** params.aco_beta)
        tours = []
        for _ant in range(params.aco_ants):
            unvisited = list(range(1, m + 1))
            order: List[int] = []
            current = 0
            while unvisited:
                weights = [float(attraction[current, k]) for k in unvisited]
                if sum(weights) > 0:
                    nxt = rng.choices(unvisited, weights=weights)[0]
                else:
                    nxt = min(unvisited, key=lambda k: (rows[current][k], k))
                order.append(nxt)
                unvisited.remove(nxt)
                current = nxt
            tours.append((order, _cost(order, rows)))
        tau *= 1.0 - params.aco_evaporation
        for order, cost in tours:
            deposit = params.aco_deposit / max(cost, 1e-12)
            for a, b in zip([0, *order], [*order, 0]):
                tau[a, b] += deposit
            if cost < best_cost:
                best, best_cost = order, cost
        history.append(best_cost)

    logger.debug("ACO: %d iterations x %d ants, best %.3f", params.aco_iterations, params.aco_ants, best_cost)
    return _tour(best, T, "ACO", params.seed, params.aco_iterations, history)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

SOLVER_NAMES = {"sa": "SA", "ga": "GA", "aco": "ACO", "nn": "NN", "brute": "BruteForce"}

SOLVERS: Dict[str, Callable[[TimeMatrix, SolverParams], Tour]] = {
    "sa": solve_sa,
    "ga": solve_ga,
    "aco": solve_aco,
    "nn": lambda T, params: nearest_neighbor(T),
    "brute": lambda T, params: brute_force(T),
}


def solve(T: TimeMatrix, solver: str = "sa", params: SolverParams = SolverParams()) -> Tour:
    try:
        fn = SOLVERS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}") from None
    started = time.perf_counter()
    tour = fn(T, params)
    logger.info("%s solved %d MPs in %.2f s: %.3f s tour%s", tour.solver, T.m,
                time.perf_counter() - started, tour.total_time, " (tainted)" if tour.tainted else "")
    return tour


class AccessibleSolution(NamedTuple):
    tour: Tour
    matrix: TimeMatrix   # the matrix the tour indexes into
    excluded: List[str]


def solve_accessible(T: TimeMatrix, solver: str = "sa", params: SolverParams = SolverParams()) -> AccessibleSolution:
    """preprocess_inaccessible, solve, and when the tour is tainted eliminate_unreachable and re-solve."""
    reduced, excluded = preprocess_inaccessible(T)
    if excluded:
        logger.info("%d inaccessible MPs excluded: %s", len(excluded), ", ".join(excluded))
    if reduced.m == 0:
        return AccessibleSolution(_tour((), reduced, SOLVER_NAMES.get(solver, solver)), reduced, excluded)
    tour = solve(reduced, solver, params)
    if tour.tainted:
        pruned, more = eliminate_unreachable(reduced)
        if more:
            logger.info("%d MPs only reachable through A_inf legs: %s", len(more), ", ".join(more))
            excluded = excluded + more
            reduced = pruned
            tour = solve(reduced, solver, params) if reduced.m else _tour((), reduced, tour.solver)
    return AccessibleSolution(tour, reduced, excluded)


__all__ = [
    "BRUTE_FORCE_MAX",
    "Tour",
    "preprocess_inaccessible",
    "eliminate_unreachable",
    "brute_force",
    "nearest_neighbor",
    "solve_sa",
    "solve_ga",
    "solve_aco",
    "SOLVER_NAMES",
    "SOLVERS",
    "solve",
    "AccessibleSolution",
    "solve_accessible",
]
