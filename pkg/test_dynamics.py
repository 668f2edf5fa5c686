"""
Динамика при конечном β: logit-выбор, матрица переходов, стационарное
распределение, численная оценка стабильных состояний.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from app.errors import InvalidParams, ReducibleChain, StateSpaceTooLarge
from app.services.dynamics import (
    DynamicsConfig,
    RevisionProcess,
    logit_choice,
    numeric_stable_estimate,
    parse_revision,
    stationary_distribution,
    transition_matrix,
)
from app.services.game_specs import NormalFormSpec
from app.services.games import potential_values
from app.services.stability import stochastic_potentials
from app.services.zoo import (
    build_game,
    class_members,
    lb_pos_apx_signature,
    make_lb_pos_instance,
    make_lb_unit_instance,
    make_parallel_links,
    make_triangle,
)


def test_logit_symmetric():
    assert logit_choice([0, 0], 7.0) == pytest.approx([0.5, 0.5])


def test_logit_ratio():
    probs = logit_choice([Fraction(-2), Fraction(-3)], math.log(2))
    assert probs == pytest.approx([2 / 3, 1 / 3], rel=1e-12)


def test_logit_shift_invariant():
    assert np.allclose(logit_choice([1, 2], 5.0), logit_choice([101, 102], 5.0), rtol=0, atol=1e-15)


def test_logit_huge_beta_has_no_overflow():
    probs = logit_choice([0, -1, -1000], 1e6)
    assert np.isfinite(probs).all()
    assert probs[0] == pytest.approx(1.0)
    assert probs.min() > 0


def test_beta_validation():
    with pytest.raises(InvalidParams):
        DynamicsConfig(-1.0)
    with pytest.raises(InvalidParams):
        DynamicsConfig(math.inf)


def test_revision_parsing():
    assert parse_revision("async").kind == "asynchronous"
    assert parse_revision("independent", "1/3").p == Fraction(1, 3)
    custom = parse_revision("custom", custom="0,1:1/2;2:1/2")
    assert custom.support == ((frozenset({2}), Fraction(1, 2)), (frozenset({0, 1}), Fraction(1, 2)))
    with pytest.raises(InvalidParams):
        parse_revision("independent", "3/2")
    with pytest.raises(InvalidParams):
        parse_revision("custom", custom="0:1/3")
    with pytest.raises(InvalidParams):
        parse_revision("sometimes")


def _one_player_flat():
    return build_game(NormalFormSpec(strategy_counts=[2], utilities=[["0"], ["0"]], costs=["0", "0"]))


def test_transition_one_player_uniform():
    P = transition_matrix(_one_player_flat(), DynamicsConfig(0.0, RevisionProcess.independent("1/2"))).matrix
    assert P == pytest.approx(np.array([[0.75, 0.25], [0.25, 0.75]]))


def test_transition_rows_are_stochastic(triangle):
    for revision in (RevisionProcess.independent(), RevisionProcess.asynchronous(),
                     RevisionProcess.custom([([0, 1], "1/2"), ([0], "1/2")])):
        P = transition_matrix(triangle, DynamicsConfig(2.0, revision)).matrix
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
        assert (P >= 0).all()


def test_asynchronous_moves_one_player(triangle, tri):
    P = transition_matrix(triangle, DynamicsConfig(1.0, RevisionProcess.asynchronous())).matrix
    assert P[tri["s0"], tri["s2"]] == 0.0
    assert P[tri["s0"], tri["s1"]] > 0


def test_all_players_row_is_product_of_logit_choices(parallel_12):
    everyone = RevisionProcess.custom([(range(parallel_12.n_players), "1")])
    P = transition_matrix(parallel_12, DynamicsConfig(1.5, everyone)).matrix
    for start in range(parallel_12.n_states):
        marginals = [logit_choice(parallel_12.deviations[start][j], 1.5) for j in range(parallel_12.n_players)]
        for target in range(parallel_12.n_states):
            profile = parallel_12.unpack(target)
            expected = np.prod([marginals[j][a] for j, a in enumerate(profile)])
            assert P[start, target] == pytest.approx(expected, rel=1e-12)


def test_dense_cap(lb_unit_22):
    with pytest.raises(StateSpaceTooLarge):
        transition_matrix(lb_unit_22, DynamicsConfig(1.0), cap=4)


def test_uniform_at_beta_zero(triangle):
    dist = stationary_distribution(transition_matrix(triangle, DynamicsConfig(0.0)))
    assert dist.probabilities == pytest.approx(np.full(4, 0.25))
    assert dist.residual <= 1e-9


@pytest.mark.parametrize("beta", [1.0, 2.0, 3.0, 5.0])
@pytest.mark.parametrize("method", ["solve", "gth"])
def test_gibbs_form(triangle, beta, method):
    phi = np.array([float(x) for x in potential_values(triangle)])
    gibbs = np.exp(-beta * (phi - phi.min()))
    gibbs /= gibbs.sum()
    dist = stationary_distribution(transition_matrix(triangle, DynamicsConfig(beta, RevisionProcess.asynchronous())), method)
    assert np.allclose(dist.probabilities, gibbs, rtol=1e-8, atol=0)


def test_gibbs_ratio_s0_s1(triangle, tri):
    dist = stationary_distribution(transition_matrix(triangle, DynamicsConfig(3.0, RevisionProcess.asynchronous())))
    ratio = dist.probabilities[tri["s0"]] / dist.probabilities[tri["s1"]]
    assert ratio == pytest.approx(math.exp(-4.5), rel=1e-6)


def test_reducible_chain():
    P = np.array([[1.0, 0.0], [0.5, 0.5]])
    with pytest.raises(ReducibleChain):
        stationary_distribution(P)


def test_solvers_agree(lb_unit_22):
    P = transition_matrix(lb_unit_22, DynamicsConfig(4.0))
    assert np.allclose(stationary_distribution(P, "solve").probabilities,
                       stationary_distribution(P, "gth").probabilities, rtol=1e-9, atol=1e-15)


def test_numeric_estimate_triangle_independent(triangle):
    estimate = numeric_stable_estimate(triangle, RevisionProcess.independent())
    assert estimate.persisting == set(range(4))
    assert estimate.max_residual <= 1e-9


def test_numeric_estimate_triangle_async(triangle, tri):
    estimate = numeric_stable_estimate(triangle, RevisionProcess.asynchronous())
    assert estimate.persisting == {tri["s1"], tri["s2"], tri["s3"]}
    assert estimate.vanishing == {tri["s0"]}
    assert estimate.log_mu.shape == (5, 4)


def test_numeric_estimate_lb_pos(lb_pos_22):
    estimate = numeric_stable_estimate(lb_pos_22, RevisionProcess.independent())
    assert estimate.persisting == class_members(lb_pos_22, lb_pos_apx_signature(2, 2))


def test_numeric_estimate_ladder_validation(triangle):
    with pytest.raises(InvalidParams):
        numeric_stable_estimate(triangle, RevisionProcess.independent(), beta_ladder=[4, 8])
    with pytest.raises(InvalidParams):
        numeric_stable_estimate(triangle, RevisionProcess.independent(), beta_ladder=[8, 4, 16])


def test_numeric_estimate_lb_unit_everything_persists():
    game = make_lb_unit_instance(2, 2)
    estimate = numeric_stable_estimate(game, RevisionProcess.independent())
    assert estimate.persisting == set(range(8))


INSTANCES = {
    "triangle": make_triangle,
    "lb-unit-2-2": lambda: make_lb_unit_instance(2, 2),
    "lb-unit-3-2": lambda: make_lb_unit_instance(3, 2),
    "lb-pos-2-2": lambda: make_lb_pos_instance(2, 2),
    "parallel-1-2": lambda: make_parallel_links([Fraction(1), Fraction(2)], 3),
    "parallel-1-1": lambda: make_parallel_links([Fraction(1), Fraction(1)], 3),
}


@pytest.mark.parametrize("name", list(INSTANCES))
@pytest.mark.parametrize("revision", [RevisionProcess.independent(), RevisionProcess.asynchronous()],
                         ids=["independent", "async"])
def test_numeric_estimate_agrees_with_exact_argmin(name, revision):
    game = INSTANCES[name]()
    estimate = numeric_stable_estimate(game, revision)
    assert estimate.persisting == stochastic_potentials(game, revision).argmin
