"""
Tests for recommendation mechanisms and accuracy estimates.
"""

import math

import numpy as np
import pytest

from socrec_dp.audit import random_graph_population
from socrec_dp.errors import DomainError, InstanceTooLargeError, NoCandidatesError, ZeroUtilityError
from socrec_dp.mechanisms import (
    PrivacyParams,
    best_recommendation,
    expected_accuracy,
    exponential_distribution,
    laplace_distribution,
    laplace_sample,
    laplace_two_node_probability,
    monte_carlo_accuracy,
    sample_from,
    smoothed_best,
    smoothing_distribution,
    smoothing_epsilon,
    smoothing_x,
)
from socrec_dp.graph import Graph
from socrec_dp.utility import UtilityConfig, UtilityVector, compute_utility


def vector(*values):
    return UtilityVector.from_mapping(0, {i + 1: float(v) for i, v in enumerate(values)})


class TestPrivacyParams:
    """Test parameter validation and random streams."""

    def test_rejects_non_positive_epsilon(self):
        """epsilon must be positive."""
        with pytest.raises(DomainError):
            PrivacyParams(0.0)

    def test_rejects_bad_seed(self):
        """Seeds must fit in 64 unsigned bits."""
        with pytest.raises(DomainError):
            PrivacyParams(1.0, seed=-1)

    def test_streams_are_keyed(self):
        """The same key reproduces a stream; another key gives another."""
        p = PrivacyParams(1.0, seed=11)
        assert p.stream(3).random() == p.stream(3).random()
        assert p.stream(3).random() != p.stream(4).random()


class TestBestRecommendation:
    """Test the non-private baseline."""

    def test_lowest_id_wins_ties(self):
        """R_best breaks ties towards the smallest id."""
        assert best_recommendation(vector(2, 5, 5)).entries == {1: 0.0, 2: 1.0, 3: 0.0}

    def test_no_candidates(self):
        """An empty utility vector has nothing to recommend."""
        with pytest.raises(NoCandidatesError):
            best_recommendation(UtilityVector(0, np.array([]), np.array([])))


class TestExponential:
    """Test the exponential mechanism."""

    def test_worked_example(self, g2):
        """On G2 with epsilon = ln 2, node 3 gets 2/3 and accuracy is 5/6."""
        u = compute_utility(g2, 0, UtilityConfig.common_neighbors())
        d = exponential_distribution(u, PrivacyParams(math.log(2)))
        assert d.probability_of(3) == pytest.approx(2 / 3)
        assert d.probability_of(4) == pytest.approx(1 / 3)
        assert expected_accuracy(d, u) == pytest.approx(5 / 6)

    def test_normalized_and_monotone(self):
        """Probabilities sum to one and grow with utility."""
        rng = np.random.default_rng(5)
        for _ in range(20):
            values = rng.integers(0, 8, size=12)
            u = vector(*values)
            d = exponential_distribution(u, PrivacyParams(0.7))
            assert d.probabilities.sum() == pytest.approx(1.0)
            order = np.argsort(values, kind="stable")
            assert np.all(np.diff(d.probabilities[order]) >= -1e-15)

    def test_equal_utilities_get_equal_probability(self):
        """Ties share probability evenly."""
        d = exponential_distribution(vector(4, 1, 4, 4), PrivacyParams(2.0))
        assert d.probability_of(1) == pytest.approx(d.probability_of(3))
        assert d.probability_of(3) == pytest.approx(d.probability_of(4))

    def test_large_exponents_do_not_overflow(self):
        """Huge epsilon * u stays finite and normalised."""
        d = exponential_distribution(vector(1000, 0), PrivacyParams(5.0))
        assert d.probability_of(1) == pytest.approx(1.0)

    def test_exchangeability_under_relabeling(self, g2):
        """Swapping candidate labels swaps their probabilities."""
        u = compute_utility(g2, 0, UtilityConfig.common_neighbors())
        p = PrivacyParams(1.0)
        swapped = u.relabeled(0, {3: 4, 4: 3})
        assert exponential_distribution(swapped, p).probability_of(4) == pytest.approx(
            exponential_distribution(u, p).probability_of(3))


class TestLaplace:
    """Test the Laplace noisy-max mechanism."""

    def test_two_node_closed_form(self):
        """Equal utilities split evenly; a unit gap at epsilon = 1 gives 1 - 0.75/e."""
        assert laplace_two_node_probability(0.0, 1.0) == pytest.approx(0.5)
        assert laplace_two_node_probability(1.0, 1.0) == pytest.approx(1 - 0.75 / math.e)

    def test_numeric_matches_closed_form(self):
        """Quadrature agrees with the two-node formula."""
        d = laplace_distribution(vector(1, 0), PrivacyParams(1.0))
        assert d.probability_of(1) == pytest.approx(laplace_two_node_probability(1.0, 1.0), abs=1e-5)

    def test_equal_utilities_are_uniform(self):
        """Four equal utilities win a quarter each."""
        d = laplace_distribution(vector(2, 2, 2, 2), PrivacyParams(1.0))
        assert np.allclose(d.probabilities, 0.25, atol=1e-5)

    def test_numeric_size_guard(self):
        """Quadrature refuses more than 64 candidates."""
        with pytest.raises(InstanceTooLargeError):
            laplace_distribution(vector(*range(65)), PrivacyParams(1.0))

    def test_sampling_frequency(self):
        """Sampled winners follow the two-node probability."""
        u = vector(1, 0)
        p = PrivacyParams(1.0)
        rng = p.stream(0)
        wins = sum(laplace_sample(u, p, rng) == 1 for _ in range(20000))
        assert wins / 20000 == pytest.approx(laplace_two_node_probability(1.0, 1.0), abs=0.015)

    @pytest.mark.parametrize("grouped", [True, False])
    def test_monte_carlo_matches_exact(self, grouped):
        """Both sampling strategies estimate the exact expected accuracy."""
        u = vector(3, 1, 1, 0, 0, 0)
        p = PrivacyParams(1.0, seed=2)
        exact = expected_accuracy(laplace_distribution(u, p), u)
        estimate = monte_carlo_accuracy(u, p, 20000, stream_key=(9,), grouped=grouped)
        assert estimate == pytest.approx(exact, abs=0.02)

    def test_monte_carlo_deterministic(self):
        """Same seed and key give the same estimate."""
        u = vector(5, 3, 3, 1)
        p = PrivacyParams(0.5, seed=7)
        assert monte_carlo_accuracy(u, p, 500, (1,)) == monte_carlo_accuracy(u, p, 500, (1,))

    def test_monte_carlo_single_level(self):
        """With all utilities equal every trial has accuracy one."""
        assert monte_carlo_accuracy(vector(2, 2, 2), PrivacyParams(1.0), 100) == 1.0

    def test_monte_carlo_errors(self):
        """All-zero utilities and zero trials are refused."""
        with pytest.raises(ZeroUtilityError):
            monte_carlo_accuracy(vector(0, 0), PrivacyParams(1.0), 10)
        with pytest.raises(DomainError):
            monte_carlo_accuracy(vector(1, 0), PrivacyParams(1.0), 0)


class TestSmoothing:
    """Test linear smoothing towards the uniform distribution."""

    def test_epsilon_and_weight_are_inverse(self):
        """smoothing_x inverts smoothing_epsilon."""
        assert smoothing_epsilon(smoothing_x(1.0, 5), 5) == pytest.approx(1.0)
        assert smoothing_epsilon(0.0, 5) == 0.0

    def test_zero_weight_is_uniform(self):
        """x = 0 ignores the base algorithm."""
        d = smoothed_best(vector(3, 1, 0), 0.0)
        assert np.allclose(d.probabilities, 1 / 3)

    def test_mixture(self):
        """p'' = (1 - x)/n + x p."""
        d = smoothing_distribution(best_recommendation(vector(3, 1)), 0.6)
        assert d.entries == pytest.approx({1: 0.8, 2: 0.2})

    def test_weight_must_be_below_one(self):
        """x = 1 has no finite epsilon."""
        with pytest.raises(DomainError):
            smoothing_epsilon(1.0, 3)

    def test_sample_from(self):
        """Samples come from the candidates."""
        d = smoothed_best(vector(3, 1), 0.5)
        assert sample_from(d, np.random.default_rng(0)) in (1, 2)


class TestExpectedAccuracy:
    """Test accuracy bookkeeping."""

    def test_mismatched_candidates(self):
        """Distribution and utilities must cover the same nodes."""
        d = best_recommendation(vector(1, 2))
        with pytest.raises(DomainError):
            expected_accuracy(d, vector(1, 2, 3))

    def test_zero_utilities(self):
        """Accuracy is undefined when every utility is 0."""
        u = vector(0, 0)
        with pytest.raises(ZeroUtilityError):
            expected_accuracy(exponential_distribution(u, PrivacyParams(1.0)), u)


class TestProperties:
    """Randomised properties of the mechanisms."""

    @pytest.mark.slow
    @pytest.mark.parametrize("gap", [0.0, 0.25, 0.5, 1.0, 2.0, 4.0])
    def test_two_node_formula_against_draws(self, gap):
        """A million noisy comparisons agree with the closed form within 4 sigma."""
        rng = np.random.default_rng(int(gap * 100))
        draws = 1_000_000
        noise = rng.laplace(0.0, 1.0, size=(draws, 2))
        wins = np.mean(gap + noise[:, 0] > noise[:, 1])
        expected = laplace_two_node_probability(gap, 1.0)
        sigma = math.sqrt(expected * (1 - expected) / draws)
        assert abs(wins - expected) <= 4 * sigma + 1e-12

    def test_smoothing_keeps_base_accuracy_share(self):
        """Smoothed accuracy is at least x times the accuracy of R_best."""
        rng = np.random.default_rng(23)
        for _ in range(1000):
            values = rng.integers(0, 10, size=int(rng.integers(1, 15)))
            if values.max() == 0:
                continue
            u = vector(*values)
            x = float(rng.random()) * 0.999
            base = expected_accuracy(best_recommendation(u), u)
            assert expected_accuracy(smoothed_best(u, x), u) >= x * base - 1e-12

    def test_exchangeable_under_permutations(self, g2):
        """Relabelling nodes while fixing the target relabels the distribution."""
        rng = np.random.default_rng(31)
        cfg = UtilityConfig.common_neighbors()
        p = PrivacyParams(1.0)
        base = exponential_distribution(compute_utility(g2, 0, cfg), p).entries
        for _ in range(100):
            order = [0] + [int(v) + 1 for v in rng.permutation(g2.node_count - 1)]
            mapping = {old: new for old, new in enumerate(order)}
            permuted = type(g2).from_edges(
                g2.node_count, [(mapping[a], mapping[b]) for a, b in g2.edges()])
            relabeled = exponential_distribution(compute_utility(permuted, 0, cfg), p).entries
            for node, probability in base.items():
                assert relabeled[mapping[node]] == pytest.approx(probability)

    @pytest.mark.parametrize(
        "cfg", [UtilityConfig.common_neighbors(), UtilityConfig.weighted_paths(gamma=0.1)], ids=["cn", "wp"])
    def test_exchangeable_on_random_graphs(self, cfg):
        """Utilities and exponential probabilities follow 120 target-fixing relabellings."""
        rng = np.random.default_rng(37)
        p = PrivacyParams(1.0)
        for g in random_graph_population(30, 7, 0.4, seed=12):
            u = compute_utility(g, 0, cfg)
            for _ in range(4):
                order = [0] + [int(v) + 1 for v in rng.permutation(g.node_count - 1)]
                permuted = Graph.from_edges(g.node_count, [(order[a], order[b]) for a, b in g.edges()])
                relabeled = compute_utility(permuted, 0, cfg)
                assert relabeled.entries == pytest.approx({order[x]: value for x, value in u.entries.items()})
                if len(u) == 0:
                    continue
                base = exponential_distribution(u, p).entries
                moved = exponential_distribution(relabeled, p).entries
                for node, probability in base.items():
                    assert moved[order[node]] == pytest.approx(probability)

    def test_laplace_distribution_is_monotone(self):
        """Higher utility always means strictly higher Laplace win probability."""
        rng = np.random.default_rng(41)
        for _ in range(20):
            values = rng.integers(0, 4, size=int(rng.integers(2, 7)))
            u = vector(*values)
            d = laplace_distribution(u, PrivacyParams(1.0)).entries
            for i, ui in u.entries.items():
                for j, uj in u.entries.items():
                    if ui > uj:
                        assert d[i] > d[j], (values.tolist(), i, j)
                    elif ui == uj:
                        assert d[i] == pytest.approx(d[j], abs=1e-6)

    @pytest.mark.slow
    def test_three_candidates_against_draws(self):
        """Numeric win probabilities for n = 3 agree with a million noisy argmaxes within 3 sigma."""
        u = vector(2, 1, 0)
        p = PrivacyParams(1.0)
        exact = laplace_distribution(u, p).probabilities
        draws = 1_000_000
        rng = np.random.default_rng(43)
        noisy = u.values + rng.laplace(0.0, p.noise_scale, size=(draws, len(u)))
        observed = np.bincount(np.argmax(noisy, axis=1), minlength=len(u)) / draws
        sigma = np.sqrt(exact * (1 - exact) / draws)
        assert np.all(np.abs(observed - exact) <= 3 * sigma + 1e-6)
