import math

import numpy as np
import pytest

from cfr.config import MAConfig
from cfr.data import Dataset
from cfr.memetic import (
    POPULATION_SIZE,
    Agent,
    Population,
    children,
    choose_mutation,
    init_population,
    maintain_invariant,
    modify_variable,
    mutate_population,
    propagate_pockets,
    recombine,
    recombine_population,
    run,
    toggle_variables,
)
from cfr.model import ContinuedFraction, predict, random_fraction, set_variable_active, used_variables
from cfr.nelder_mead import guiding_value


class RiggedRng:
    """Stand-in generator returning scripted values."""

    def __init__(self, uniform=0.0, random=0.9, integers=0, choice=None):
        self._uniform, self._random, self._integers, self._choice = uniform, random, integers, choice

    def uniform(self, lo, hi, size=None):
        return self._uniform

    def random(self, size=None):
        return self._random

    def integers(self, n):
        return self._integers

    def choice(self, seq):
        return seq[0] if self._choice is None else self._choice


def _model(coef_rows, whitelist=None, constants=None):
    coef = np.array(coef_rows, dtype=float)
    active = coef != 0.0
    if whitelist is None:
        whitelist = active.any(axis=0)
    if constants is None:
        constants = np.ones(coef.shape[0])
    return ContinuedFraction(coef, constants, active, whitelist)


def _fake_agent(score):
    cf = ContinuedFraction.constant(score)
    return Agent(cf, score, cf, score)


@pytest.fixture
def small_data(rng):
    X = rng.uniform(-1, 1, size=(60, 3))
    return Dataset(X, X[:, 0] - 0.5 * X[:, 2] + 0.25)


class TestTopology:
    def test_children(self):
        assert children(0) == [1, 2, 3]
        assert children(3) == [10, 11, 12]
        assert children(4) == []

    def test_population_size(self):
        with pytest.raises(ValueError):
            Population([_fake_agent(1.0)] * 12)


class TestInit:
    def test_shape_and_invariant(self, small_data, rng):
        pop = init_population(3, small_data, MAConfig(), rng)
        assert len(pop) == POPULATION_SIZE
        solutions = {id(a.pocket) for a in pop.agents} | {id(a.current) for a in pop.agents}
        assert len(solutions) == 26
        for a in pop.agents:
            assert a.pocket_score <= a.current_score
            assert a.pocket_score == guiding_value(a.pocket, small_data.features, small_data.targets)

    def test_deterministic(self, small_data):
        a = init_population(3, small_data, MAConfig(), np.random.default_rng(4))
        b = init_population(3, small_data, MAConfig(), np.random.default_rng(4))
        for x, y in zip(a.agents, b.agents):
            assert x.pocket == y.pocket and x.current == y.current


class TestInvariants:
    def test_swap_when_current_better(self):
        p, c = ContinuedFraction.constant(1.0), ContinuedFraction.constant(2.0)
        agent = Agent(p, 5.0, c, 3.0)
        assert maintain_invariant(agent)
        assert agent.pocket is c and agent.pocket_score == 3.0

    def test_no_swap_on_tie(self):
        agent = Agent(ContinuedFraction.constant(1.0), 3.0, ContinuedFraction.constant(2.0), 3.0)
        assert not maintain_invariant(agent)

    def test_leaf_bubbles_to_root(self):
        pop = Population([_fake_agent(10.0 + i) for i in range(POPULATION_SIZE)])
        pop[12].pocket_score = 0.5
        pop[12].current_score = 0.5
        propagate_pockets(pop)
        assert pop.root.pocket_score == 0.5
        for i in range(POPULATION_SIZE):
            for c in children(i):
                assert pop[i].pocket_score <= pop[c].pocket_score

    def test_all_equal_no_swaps(self):
        pop = Population([_fake_agent(1.0) for _ in range(POPULATION_SIZE)])
        before = [a.pocket for a in pop.agents]
        assert propagate_pockets(pop) == 0
        assert all(a.pocket is b for a, b in zip(pop.agents, before))

    def test_infinite_scores(self):
        pop = Population([_fake_agent(math.inf) for _ in range(POPULATION_SIZE)])
        pop[5].pocket_score = 2.0
        propagate_pockets(pop)
        assert pop.root.pocket_score == 2.0


class TestRecombine:
    def test_identical_parents_fixed_point(self, rng):
        cf = random_fraction(3, 3, rng, whitelist_p=1.0)
        for op in range(3):
            if op == 2:
                continue  # symmetric difference of equal sets is empty
            child = recombine(cf, cf, rng, operator=op)
            np.testing.assert_array_equal(child.coefficients, cf.coefficients)
            np.testing.assert_array_equal(child.constants, cf.constants)

    @pytest.mark.parametrize("op,expected", [(0, {0, 1, 2}), (1, {1}), (2, {0, 2})])
    def test_set_algebra(self, rng, op, expected):
        p1 = _model([[1.0, 2.0, 0.0]] * 3)
        p2 = _model([[0.0, 3.0, 4.0]] * 3)
        child = recombine(p1, p2, rng, operator=op)
        assert set(np.flatnonzero(child.whitelist)) == expected
        assert used_variables(child) <= expected

    def test_blend_formula(self):
        # a=0 and b=3 with r=4: 0 + 4 * 3 / 3 = 4
        p1 = ContinuedFraction([[0.0, 1.0]], [0.0], [[True, True]], [True, True])
        p2 = ContinuedFraction([[3.0, 1.0]], [3.0], [[True, True]], [True, True])
        child = recombine(p1, p2, RiggedRng(uniform=4.0), operator=0)
        assert child.coefficients[0, 0] == 4.0
        assert child.constants[0] == 4.0
        assert child.coefficients[0, 1] == 1.0

    def test_single_parent_copied(self):
        p1 = _model([[2.0, 0.0]])
        p2 = _model([[0.0, 5.0]])
        child = recombine(p1, p2, RiggedRng(uniform=4.0), operator=0)
        np.testing.assert_array_equal(child.coefficients, [[2.0, 5.0]])

    def test_shape_mismatch(self, rng):
        with pytest.raises(ValueError):
            recombine(random_fraction(2, 1, rng), random_fraction(2, 2, rng), rng)

    def test_population_deterministic(self, small_data):
        def make():
            rng = np.random.default_rng(8)
            pop = init_population(3, small_data, MAConfig(), rng)
            recombine_population(pop, rng, lambda cf: guiding_value(cf, small_data.features,
                                                                    small_data.targets))
            return pop

        a, b = make(), make()
        for x, y in zip(a.agents, b.agents):
            assert x.current == y.current

    def test_identical_population_stays(self, rng):
        cf = random_fraction(2, 2, rng, whitelist_p=1.0)
        pop = Population([Agent(cf, 1.0, cf, 1.0) for _ in range(POPULATION_SIZE)])
        recombine_population(pop, rng, lambda m: 1.0)
        for a in pop.agents:
            np.testing.assert_array_equal(a.current.constants, cf.constants)
            if a.current.whitelist.any():
                np.testing.assert_array_equal(a.current.coefficients, cf.coefficients)
            else:
                # symmetric difference of equal variable sets drops every variable
                assert used_variables(a.current) == set()

    def test_pockets_untouched(self, small_data, rng):
        pop = init_population(3, small_data, MAConfig(), rng)
        pockets = [a.pocket for a in pop.agents]
        recombine_population(pop, rng, lambda m: 0.0)
        assert all(a.pocket is p for a, p in zip(pop.agents, pockets))


class TestToggle:
    def test_flips_one_flag(self, rng):
        cf = random_fraction(4, 2, rng, whitelist_p=0.5)
        for _ in range(20):
            out = toggle_variables(cf, rng)
            assert np.count_nonzero(out.whitelist != cf.whitelist) == 1
            var = int(np.flatnonzero(out.whitelist != cf.whitelist)[0])
            others = [j for j in range(4) if j != var]
            np.testing.assert_array_equal(out.coefficients[:, others], cf.coefficients[:, others])
            np.testing.assert_array_equal(out.active[:, others], cf.active[:, others])
            np.testing.assert_array_equal(out.constants, cf.constants)

    def test_switch_off_remember(self, rng):
        cf = random_fraction(2, 2, rng, whitelist_p=1.0)
        off = toggle_variables(cf, RiggedRng(random=0.9), var=0)
        assert not off.whitelist[0] and not off.active[:, 0].any()
        np.testing.assert_array_equal(off.coefficients, cf.coefficients)
        # memory is kept: re-enabling the stored coefficients restores evaluation
        X = rng.normal(size=(20, 2))
        np.testing.assert_array_equal(predict(set_variable_active(off, 0, True), X), predict(cf, X))

    def test_switch_off_remove(self, rng):
        cf = random_fraction(2, 2, rng, whitelist_p=1.0)
        off = toggle_variables(cf, RiggedRng(random=0.1), var=0)
        assert np.all(off.coefficients[:, 0] == 0.0)

    def test_switch_on(self, rng):
        cf = random_fraction(2, 2, rng, whitelist_p=0.0)
        on = toggle_variables(cf, RiggedRng(random=0.9, uniform=2.5), var=1)
        assert on.whitelist[1] and on.active[:, 1].all()
        assert np.all(on.coefficients[:, 1] == 2.5)
        on0 = toggle_variables(cf, RiggedRng(random=0.1), var=1)
        assert np.all(on0.coefficients[:, 1] == 0.0)


class TestModify:
    def test_one_slot_changes(self, rng):
        cf = random_fraction(3, 3, rng, whitelist_p=1.0)
        for _ in range(20):
            out = modify_variable(cf, rng)
            changed = (out.active != cf.active) | (out.coefficients != cf.coefficients)
            assert np.count_nonzero(out.active != cf.active) == 1
            assert np.count_nonzero(changed) == 1

    def test_no_whitelist_noop(self, rng):
        cf = random_fraction(3, 2, rng, whitelist_p=0.0)
        assert modify_variable(cf, rng) is cf

    def test_on_slot_turns_off(self, rng):
        cf = random_fraction(2, 1, rng, whitelist_p=1.0)
        out = modify_variable(cf, RiggedRng(integers=1, choice=1))
        assert out.coefficients[1, 1] == 0.0 and not out.active[1, 1]

    def test_off_slot_turns_on(self, rng):
        cf = random_fraction(2, 1, rng, whitelist_p=1.0)
        off = modify_variable(cf, RiggedRng(integers=1, choice=1))
        on = modify_variable(off, RiggedRng(integers=1, choice=1, uniform=-2.0))
        assert on.active[1, 1] and on.coefficients[1, 1] == -2.0


class TestMutation:
    @pytest.mark.parametrize("ratio,kind", [(1.5, "soft"), (1.1, "major"), (2.5, "major"),
                                            (1.2, "soft"), (2.0, "soft")])
    def test_choice(self, ratio, kind):
        assert choose_mutation(ratio * 10.0, 10.0) == kind

    def test_rate_zero(self, small_data, rng):
        pop = init_population(3, small_data, MAConfig(), rng)
        before = [(a.pocket, a.current) for a in pop.agents]
        assert mutate_population(pop, 0.0, rng, lambda m: 0.0) == 0
        assert all(a.pocket is p and a.current is c for a, (p, c) in zip(pop.agents, before))

    def test_pockets_never_mutated(self, small_data, rng):
        pop = init_population(3, small_data, MAConfig(), rng)
        pockets = [a.pocket for a in pop.agents]
        scorer = lambda m: guiding_value(m, small_data.features, small_data.targets)
        assert mutate_population(pop, 1.0, rng, scorer) == POPULATION_SIZE
        assert all(a.pocket is p for a, p in zip(pop.agents, pockets))

    def test_bad_rate(self, small_data, rng):
        pop = init_population(3, small_data, MAConfig(), rng)
        with pytest.raises(ValueError):
            mutate_population(pop, 1.5, rng, lambda m: 0.0)


class TestRun:
    def test_zero_generations(self, small_data):
        seen = {}

        def cb(event, gen, pop, best):
            if event == "init":
                seen["best"] = min(a.pocket_score for a in pop.agents)

        res = run(small_data, None, MAConfig(generations=0, seed=3), cb)
        assert res.best_score == seen["best"]
        assert res.trace == []

    def test_trace_monotone_and_deterministic(self, small_data):
        cfg = MAConfig(generations=15, seed=11)
        a = run(small_data, small_data, cfg)
        b = run(small_data, small_data, cfg)
        assert all(y <= x for x, y in zip(a.trace, a.trace[1:]))
        assert a.best == b.best and a.trace == b.trace and a.test_mse == b.test_mse
        assert len(a.trace) == 15
        assert a.best_score == a.trace[-1]

    def test_invariants_each_generation(self, small_data):
        def cb(event, gen, pop, best):
            if event != "generation":
                return
            for i, agent in enumerate(pop.agents):
                assert agent.pocket_score <= agent.current_score
                for c in children(i):
                    assert agent.pocket_score <= pop[c].pocket_score

        run(small_data, None, MAConfig(generations=10, seed=2), cb)

    def test_width_mismatch(self, small_data):
        other = Dataset(np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(ValueError):
            run(small_data, other, MAConfig(generations=0))

    def test_linear_fit(self, linear_data):
        res = run(linear_data, linear_data, MAConfig(seed=0, generations=60))
        assert res.train_nmse < 0.01
