"""Causal structure learning from mixed tabular data.

The two pipelines recover a CPDAG by discovering Markov blankets with a
kNN conditional mutual information estimator, reconstructing candidate
exogenous variables by deflation ICA, matching them to observed
variables by assignment on pairwise MI, and intersecting the blankets of
matched exogenous variables to orient parents.
"""

__version__ = "0.1.0"

from .blankets import (MarkovBlankets, backward_phase, forward_phase,
                       improved_iamb, symmetry_check)
from .cmi import (JointTable, KnnCmiEstimator, exact_cmi_discrete, knn_cmi,
                  mutual_information)
from .data import (Dataset, IngestionError, encode_categorical, load_csv,
                   normalize_minmax, sample_rows)
from .exogenous import (AssignmentInfeasibleError, CostMatrix, ExogenousData,
                        IcaError, IcaResult, build_cost_matrix, fast_ica,
                        generate_exogenous, match_exogenous,
                        solve_assignment, whiten)
from .graph import (Graph, GraphError, VStructure, d_separated, dag_to_cpdag,
                    find_v_structures, is_acyclic, is_cpdag, markov_blanket,
                    meek_closure, skeleton, to_dot)
from .intersect import intersect_markov_blankets
from .metrics import (MetricError, aupr, from_adjacency, read_adjacency,
                      shd, to_adjacency, write_adjacency)
from .pipeline import (LearnResult, PipelineError, eembi, eembi_pc,
                       pc_v_structures, run_pipeline)
from .simulate import (Scm, SimulationError, discrete_cpt_scm, exam_fixture,
                       joint_table, linear_gaussian_scm, oracle_ci,
                       random_dag, sample)

__all__ = [name for name in dir() if not name.startswith("_")]
