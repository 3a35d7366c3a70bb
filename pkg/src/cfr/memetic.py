"""Memetic search over continued-fraction models.

Thirteen agents form a depth-3 ternary tree: agent 0 is the root and the
children of agent ``i`` are ``3i+1 .. 3i+3``.  Each agent holds a *pocket*
(its best model so far) and a *current* model.  Every generation mutates
currents, recombines within each leader-plus-three-supporters subpopulation,
locally optimizes every current with the simplex search, then lets good
pockets bubble up toward the root.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from cfr.config import MAConfig
from cfr.data import Dataset, mse, nmse, DegenerateTargetError
from cfr.model import ContinuedFraction, predict, random_fraction, used_variables
from cfr.nelder_mead import guiding_value, local_search

__all__ = [
    "MAConfig",
    "Agent",
    "Population",
    "RunResult",
    "POPULATION_SIZE",
    "children",
    "init_population",
    "maintain_invariant",
    "propagate_pockets",
    "recombine",
    "recombine_population",
    "toggle_variables",
    "modify_variable",
    "choose_mutation",
    "mutate_population",
    "run",
]

POPULATION_SIZE = 13
LEADERS = (0, 1, 2, 3)


def children(i: int) -> list[int]:
    return [c for c in (3 * i + 1, 3 * i + 2, 3 * i + 3) if c < POPULATION_SIZE]


@dataclass
class Agent:
    pocket: ContinuedFraction
    pocket_score: float
    current: ContinuedFraction
    current_score: float


@dataclass
class Population:
    agents: list[Agent]

    def __post_init__(self):
        if len(self.agents) != POPULATION_SIZE:
            raise ValueError(f"a population has exactly {POPULATION_SIZE} agents")

    def __getitem__(self, i) -> Agent:
        return self.agents[i]

    def __len__(self):
        return len(self.agents)

    @property
    def root(self) -> Agent:
        return self.agents[0]


@dataclass
class RunResult:
    best: ContinuedFraction
    best_score: float
    trace: list[float]
    seed: int | None
    config: MAConfig
    train_mse: float
    train_nmse: float
    test_mse: float = math.nan
    test_nmse: float = math.nan
    wall_seconds: float = 0.0
    n_resets: int = 0
    feature_names: tuple[str, ...] | None = None

    @property
    def n_vars_used(self) -> int:
        return len(used_variables(self.best))


class _Scorer:
    """Guiding function bound to one training set."""

    def __init__(self, train: Dataset, delta: float):
        self.X = np.ascontiguousarray(train.features)
        self.y = np.ascontiguousarray(train.targets)
        self.delta = delta

    def __call__(self, cf: ContinuedFraction) -> float:
        return guiding_value(cf, self.X, self.y, self.delta)


def _random_model(n_vars, config: MAConfig, rng):
    return random_fraction(n_vars, config.depth, rng, config.coeff_lo, config.coeff_hi,
                           config.whitelist_p, seed=config.seed)


def maintain_invariant(agent: Agent) -> bool:
    """Swap pocket and current when the current is strictly better."""
    if agent.current_score < agent.pocket_score:
        agent.pocket, agent.current = agent.current, agent.pocket
        agent.pocket_score, agent.current_score = agent.current_score, agent.pocket_score
        return True
    return False


def propagate_pockets(pop: Population) -> int:
    """Bubble strictly better pockets toward the root.

    Repeats until no child pocket beats its parent's pocket and no current
    beats its own pocket; returns the number of swaps made.
    """
    swaps = 0
    changed = True
    while changed:
        changed = False
        for agent in pop.agents:
            if maintain_invariant(agent):
                swaps += 1
                changed = True
        for parent in range(POPULATION_SIZE):
            for child in children(parent):
                p, c = pop[parent], pop[child]
                if c.pocket_score < p.pocket_score:
                    p.pocket, c.pocket = c.pocket, p.pocket
                    p.pocket_score, c.pocket_score = c.pocket_score, p.pocket_score
                    swaps += 1
                    changed = True
    return swaps


def init_population(n_vars: int, train: Dataset, config: MAConfig, rng,
                    scorer: Callable | None = None) -> Population:
    scorer = scorer or _Scorer(train, config.delta)
    agents = []
    for _ in range(POPULATION_SIZE):
        current = _random_model(n_vars, config, rng)
        pocket = _random_model(n_vars, config, rng)
        agent = Agent(pocket, scorer(pocket), current, scorer(current))
        maintain_invariant(agent)
        agents.append(agent)
    return Population(agents)


_SET_OPS = (
    lambda a, b: a | b,
    lambda a, b: a & b,
    lambda a, b: a ^ b,
)


def _used_mask(cf: ContinuedFraction) -> np.ndarray:
    return (cf.active & (cf.coefficients != 0.0)).any(axis=0)


def recombine(first: ContinuedFraction, second: ContinuedFraction, rng,
              operator: int | None = None) -> ContinuedFraction:
    """Child of ``first`` (a pocket) and ``second`` (a current).

    The child's variables are the union, intersection or symmetric difference
    (``operator`` 0, 1, 2; drawn uniformly when None) of the parents' used
    variables.  A coefficient present in both parents' term is blended as
    ``a + r * (b - a) / 3`` with ``r ~ U[-1, 4]``; one present in a single
    parent is copied.  Term constants are always blended.
    """
    if first.n_vars != second.n_vars or first.depth != second.depth:
        raise ValueError("parents must share the number of variables and the depth")
    if operator is None:
        operator = int(rng.integers(3))
    child_vars = _SET_OPS[operator](_used_mask(first), _used_mask(second))

    n_terms, n_vars = first.coefficients.shape
    coefficients = np.zeros((n_terms, n_vars))
    active = np.zeros((n_terms, n_vars), dtype=bool)
    constants = np.empty(n_terms)
    for t in range(n_terms):
        in_a = first.active[t]
        in_b = second.active[t]
        for v in np.flatnonzero(child_vars):
            a, b = first.coefficients[t, v], second.coefficients[t, v]
            if in_a[v] and in_b[v]:
                coefficients[t, v] = a + rng.uniform(-1.0, 4.0) * (b - a) / 3.0
                active[t, v] = True
            elif in_a[v]:
                coefficients[t, v] = a
                active[t, v] = True
            elif in_b[v]:
                coefficients[t, v] = b
                active[t, v] = True
        ca, cb = first.constants[t], second.constants[t]
        constants[t] = ca + rng.uniform(-1.0, 4.0) * (cb - ca) / 3.0
    return ContinuedFraction(coefficients, constants, active, child_vars, first.seed)


def recombine_population(pop: Population, rng, scorer: Callable) -> None:
    """Recombine every subpopulation, top-down, updating currents in place.

    For leader ``l`` with supporters ``s1, s2, s3`` the order is
    ``l <- (l, s1)``, ``s3 <- (s3, l)``, ``s1 <- (s1, s2)``, ``s2 <- (s2, s3)``
    where ``x <- (x, y)`` means current(x) = recombine(pocket(x), current(y)).
    """
    for leader in LEADERS:
        s1, s2, s3 = children(leader)
        for target, donor in ((leader, s1), (s3, leader), (s1, s2), (s2, s3)):
            agent = pop[target]
            child = recombine(agent.pocket, pop[donor].current, rng)
            agent.current = child
            agent.current_score = scorer(child)


def toggle_variables(cf: ContinuedFraction, rng, coeff_lo: float = -3.0,
                     coeff_hi: float = 3.0, var: int | None = None) -> ContinuedFraction:
    """Major mutation: flip one variable in or out of the whole model.

    Switching off keeps ("remembers") or zeroes ("removes") each stored
    coefficient with even odds; switching on sets each coefficient to 0 or to
    a uniform draw, again with even odds.
    """
    coefficients, constants, active, whitelist = cf.mutable_arrays()
    if var is None:
        var = int(rng.integers(cf.n_vars))
    if whitelist[var]:
        for t in range(cf.n_terms):
            active[t, var] = False
            if rng.random() < 0.5:
                coefficients[t, var] = 0.0
    else:
        for t in range(cf.n_terms):
            if not active[t, var]:
                active[t, var] = True
                coefficients[t, var] = 0.0 if rng.random() < 0.5 else rng.uniform(coeff_lo, coeff_hi)
    whitelist[var] = not whitelist[var]
    return ContinuedFraction(coefficients, constants, active, whitelist, cf.seed)


def modify_variable(cf: ContinuedFraction, rng, coeff_lo: float = -3.0,
                    coeff_hi: float = 3.0) -> ContinuedFraction:
    """Soft mutation: flip one (term, whitelisted variable) slot."""
    candidates = np.flatnonzero(cf.whitelist)
    if candidates.size == 0:
        return cf
    var = int(rng.choice(candidates))
    t = int(rng.integers(cf.n_terms))
    coefficients, constants, active, whitelist = cf.mutable_arrays()
    if active[t, var]:
        coefficients[t, var] = 0.0
    else:
        coefficients[t, var] = rng.uniform(coeff_lo, coeff_hi)
    active[t, var] = not active[t, var]
    return ContinuedFraction(coefficients, constants, active, whitelist, cf.seed)


def choose_mutation(current_score: float, pocket_score: float) -> str:
    """``"major"`` when the current is within 120% of the pocket or worse than
    twice the pocket, ``"soft"`` otherwise."""
    if current_score < 1.2 * pocket_score or current_score > 2.0 * pocket_score:
        return "major"
    return "soft"


def mutate_population(pop: Population, rate: float, rng, scorer: Callable,
                      coeff_lo: float = -3.0, coeff_hi: float = 3.0) -> int:
    """Mutate each agent's current with probability ``rate``; pockets are left alone."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("mutation rate must lie in [0, 1]")
    n = 0
    for agent in pop.agents:
        if rng.random() >= rate:
            continue
        if choose_mutation(agent.current_score, agent.pocket_score) == "major":
            agent.current = toggle_variables(agent.current, rng, coeff_lo, coeff_hi)
        else:
            agent.current = modify_variable(agent.current, rng, coeff_lo, coeff_hi)
        agent.current_score = scorer(agent.current)
        n += 1
    return n


def _check_data(train: Dataset, test: Dataset | None):
    if train.n_samples < 1:
        raise ValueError("training set is empty")
    if test is not None and test.n_features != train.n_features:
        raise ValueError("train and test sets have different widths")


def _nmse_or_nan(y, yhat):
    try:
        return nmse(y, yhat)
    except (DegenerateTargetError, ValueError):
        return math.nan


def run(train: Dataset, test: Dataset | None = None, config: MAConfig | None = None,
        callback: Callable | None = None) -> RunResult:
    """One seeded memetic run.

    ``callback(event, generation, population, best_score)`` is invoked with
    event ``"init"`` once, then ``"mutated"`` after each mutation pass and
    ``"generation"`` at the end of every generation.
    """
    config = config or MAConfig()
    _check_data(train, test)
    started = time.perf_counter()

    root_seq = np.random.SeedSequence(config.seed)
    main_seq, search_seq = root_seq.spawn(2)
    rng = np.random.default_rng(main_seq)
    scorer = _Scorer(train, config.delta)

    pop = init_population(train.n_features, train, config, rng, scorer)
    propagate_pockets(pop)
    best, best_score = pop.root.pocket, pop.root.pocket_score
    trace = []
    stalled = 0
    resets = 0
    if callback:
        callback("init", 0, pop, best_score)

    for gen in range(1, config.generations + 1):
        mutate_population(pop, config.mutation_rate, rng, scorer, config.coeff_lo, config.coeff_hi)
        if callback:
            callback("mutated", gen, pop, best_score)
        recombine_population(pop, rng, scorer)

        streams = search_seq.spawn(POPULATION_SIZE)
        for agent, stream in zip(pop.agents, streams):
            agent.current, agent.current_score = local_search(
                agent.current, train, np.random.default_rng(stream), config, agent.current_score)
        propagate_pockets(pop)

        if pop.root.pocket_score < best_score:
            best, best_score = pop.root.pocket, pop.root.pocket_score
            stalled = 0
        else:
            stalled += 1
        if stalled >= config.root_reset_stagnation:
            fresh = _random_model(train.n_features, config, rng)
            pop.root.pocket, pop.root.pocket_score = fresh, scorer(fresh)
            propagate_pockets(pop)
            stalled = 0
            resets += 1

        trace.append(best_score)
        if callback:
            callback("generation", gen, pop, best_score)

    yhat = predict(best, train.features)
    result = RunResult(
        best=best,
        best_score=best_score,
        trace=trace,
        seed=config.seed,
        config=config,
        train_mse=mse(train.targets, yhat),
        train_nmse=_nmse_or_nan(train.targets, yhat),
        n_resets=resets,
        feature_names=train.feature_names,
    )
    if test is not None:
        yhat_test = predict(best, test.features)
        result.test_mse = mse(test.targets, yhat_test)
        result.test_nmse = _nmse_or_nan(test.targets, yhat_test)
    result.wall_seconds = time.perf_counter() - started
    return result
