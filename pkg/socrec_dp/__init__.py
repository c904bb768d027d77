"""
socrec-dp: differentially private social recommendations

Link-analysis utilities (common neighbours, weighted paths), private
recommendation mechanisms, the privacy/accuracy trade-off bounds, and an
audit/experiment harness.

Example:
    >>> from socrec_dp import Graph, recommend, accuracy_bound
    >>> g = Graph.from_edges(5, [(0, 1), (0, 2), (1, 3), (2, 3), (1, 4)])
    >>> recommend(g, 0, epsilon=1.0).entries
    {3: 0.731..., 4: 0.268...}
    >>> round(accuracy_bound(n=400_000_000, k=100, c=0.99, t=150, epsilon=0.1), 2)
    0.46
"""

__version__ = "0.1.0"

from .errors import (
    AuditInternalError,
    ConfigError,
    DomainError,
    GraphEditError,
    GraphFormatError,
    InstanceTooLargeError,
    NoBoundDerivableError,
    NoCandidatesError,
    SocRecError,
    UnsupportedConfigurationError,
    ZeroUtilityError,
)
from .graph import EdgeEdit, EdgeListReport, Graph, load_edge_list, parse_edge_list, write_edge_list
from .utility import UtilityConfig, UtilityKind, UtilityVector, compute_utility, sensitivity_bound
from .mechanisms import (
    Mechanism,
    PrivacyParams,
    RecommendationDistribution,
    expected_accuracy,
    exponential_distribution,
    laplace_distribution,
    laplace_sample,
    monte_carlo_accuracy,
    smoothed_best,
)
from .bounds import BoundInputs, accuracy_upper_bound, epsilon_lower_bound, t_formula, tightest_accuracy_bound
from .audit import AuditReport, audit_mechanism, brute_force_t
from .experiment import AccuracyRecord, ExperimentConfig, run_experiment


# Simple API
def recommend(g, r, epsilon, utility=None):
    """Exponential-mechanism recommendation distribution for target ``r``."""
    cfg = utility or UtilityConfig.common_neighbors()
    u = compute_utility(g, r, cfg)
    return exponential_distribution(u, PrivacyParams(epsilon, sensitivity_bound(cfg, g, r).delta_f))


def accuracy_bound(n, k, c, t, epsilon):
    """Upper bound on the accuracy of any epsilon-private monotone recommender."""
    return accuracy_upper_bound(BoundInputs(n, k, c, t, epsilon=epsilon))


__all__ = [
    'Graph', 'EdgeEdit', 'EdgeListReport', 'parse_edge_list', 'load_edge_list', 'write_edge_list',
    'UtilityConfig', 'UtilityKind', 'UtilityVector', 'compute_utility', 'sensitivity_bound',
    'Mechanism', 'PrivacyParams', 'RecommendationDistribution', 'exponential_distribution',
    'laplace_distribution', 'laplace_sample', 'smoothed_best', 'expected_accuracy', 'monte_carlo_accuracy',
    'BoundInputs', 'accuracy_upper_bound', 'epsilon_lower_bound', 't_formula', 'tightest_accuracy_bound',
    'AuditReport', 'audit_mechanism', 'brute_force_t',
    'AccuracyRecord', 'ExperimentConfig', 'run_experiment',
    'SocRecError', 'GraphFormatError', 'GraphEditError', 'DomainError', 'ConfigError',
    'NoCandidatesError', 'ZeroUtilityError', 'UnsupportedConfigurationError',
    'InstanceTooLargeError', 'NoBoundDerivableError', 'AuditInternalError',
    'recommend', 'accuracy_bound',
]
