"""Distributed function computation over an additive multiple-access channel.

Submodules: ``prob`` (exact pmfs and entropies), ``ka`` (closed-form
inner/outer decompositions and the source-channel-receiver pipeline),
``graphs`` (characteristic graphs, independent sets, colorings), ``rates``
(graph entropies and rate regions), ``scenario``/``report``/``cli``.
"""

from .errors import (
    ConvergenceError,
    DomainError,
    KamacError,
    SizeCapError,
    ValidationError,
)
from .graphs import (
    CharGraph,
    Coloring,
    IndSetFamily,
    build_char_graph,
    build_conditional_char_graph,
    chromatic_number,
    coloring_entropy,
    maximal_independent_sets,
    min_entropy_coloring,
    or_power,
    to_dot,
)
from .ka import (
    KaSystem,
    PipelineTrace,
    catalog,
    evaluate_direct,
    gradient,
    hessian,
    inner_image_distribution,
    pipeline_evaluate,
    taylor2,
)
from .prob import (
    Alphabet,
    JointPmf,
    MaximalCoupling,
    Pmf,
    conditional_entropy,
    coupling_mixture_entropy,
    entropy,
    joint_entropy,
    maximal_coupling,
    pushforward,
)
from .rates import (
    RateReport,
    Region,
    compare,
    conditional_graph_entropy,
    graph_entropy,
    graph_region,
    inner_region,
    sw_region,
)
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"

__all__ = [
    "Alphabet", "Pmf", "JointPmf", "MaximalCoupling", "entropy", "joint_entropy",
    "conditional_entropy", "pushforward", "maximal_coupling", "coupling_mixture_entropy",
    "KaSystem", "PipelineTrace", "catalog", "evaluate_direct", "pipeline_evaluate",
    "inner_image_distribution", "gradient", "hessian", "taylor2",
    "CharGraph", "Coloring", "IndSetFamily", "build_char_graph", "build_conditional_char_graph",
    "or_power", "maximal_independent_sets", "min_entropy_coloring", "coloring_entropy",
    "chromatic_number", "to_dot",
    "Region", "RateReport", "graph_entropy", "conditional_graph_entropy", "sw_region",
    "inner_region", "graph_region", "compare",
    "Scenario", "load_scenario",
    "KamacError", "ValidationError", "SizeCapError", "DomainError", "ConvergenceError",
]
