"""Constrained-graphon variational machinery and finite edge/triangle
ensembles near the line t2 = t1^3."""

__version__ = "0.1.0"

from .entropy import (
    QuotientMin,
    bernoulli_entropy,
    bernoulli_entropy_deriv,
    block_entropy_rate,
    bregman_quotient,
    bregman_quotient_limit,
    bregman_quotient_min,
    entropy_taylor_gap,
    entropy_taylor_gap_series,
)
from .errors import (
    CapacityError,
    ConvergenceError,
    DomainError,
    EpsilonTooLargeError,
    ErgraphonError,
    InfeasibleError,
)
from .graphon import (
    DensityPair,
    ScallopPoint,
    StepGraphon,
    above_line_graphon,
    below_line_global_graphon,
    below_line_local_graphon,
    density_pair,
    edge_density,
    entropy_functional,
    finite_graph_to_graphon,
    scallop_c,
    scallop_graphon,
    scallop_p,
    scallop_point,
    triangle_density,
)
from .perturb import (
    ConstraintResiduals,
    ExclusionReport,
    PerturbationAnsatz,
    SolveReport,
    ansatz_graphon,
    case_entropy,
    constraint_residuals,
    exclusion_scan,
    g12_eliminating_k1,
    k2_quadratic_form,
    reduced_ansatz,
    solve_microcanonical,
)
from .scaling import (
    ConstraintPair,
    MultiplierPair,
    above_line_coefficient,
    below_line_coefficient,
    constant_graphon_sup,
    curve_sweep,
    region_classify,
    specific_relative_entropy,
)
from .ensembles import (
    DenseGraph,
    EnsembleSolution,
    McmcSummary,
    SubgraphCounts,
    calibrate_exact,
    count_constrained,
    counts_to_densities,
    densities_to_counts,
    hom_density,
    mcmc_calibrate,
    mcmc_sample,
    partition_exact,
    relative_entropy_exact,
    subgraph_counts,
)
