"""Direct (Kronecker) product factorization of directed graphs.

Given the adjacency matrix A of a directed unweighted graph and a size
split n = dim_b * dim_c, the package searches for a node relabeling p and
binary factors B, C such that A[p][:, p] = B (x) C, certifying every
success bit-exactly.  See README.md for the CLI and the experiment
protocol.
"""

from .core import (
    BinaryMatrix,
    BlockGrid,
    Graph,
    Permutation,
    balanced_blocks,
    block_grid,
    direct_product,
    divisor_splits,
    graph_from_edgelist_text,
    graph_to_edgelist_text,
    is_block_matrix,
    kronecker,
    load_matrix,
    matrix_from_text,
    matrix_to_text,
    permute_symmetric,
    save_matrix,
    swap_pair,
)
from .harness import (
    BatchReport,
    InstanceSpec,
    RunRecord,
    generate_instance,
    growth_study,
    run_batch,
    solve_all_divisor_splits,
    write_batch_csv,
    write_growth_dat,
    write_runs_json,
)
from .metrics import (
    FactorPair,
    MetricKind,
    frob_metric,
    is_exact_kronecker,
    nearest_binary_kronecker,
    residual,
    var_metric,
)
from .oracle import (
    OracleVerdict,
    brute_force_factorize,
    has_kron_permutation,
    is_prime_for_all_splits,
    verify_certificate,
)
from .search import (
    RunReport,
    SearchConfig,
    SearchState,
    alternate_local_search,
    kron_grouping,
    onion_search,
    outsiders,
    random_perturbation,
    warmup,
)

__all__ = [
    "BinaryMatrix",
    "BlockGrid",
    "Graph",
    "Permutation",
    "balanced_blocks",
    "block_grid",
    "direct_product",
    "divisor_splits",
    "graph_from_edgelist_text",
    "graph_to_edgelist_text",
    "is_block_matrix",
    "kronecker",
    "load_matrix",
    "matrix_from_text",
    "matrix_to_text",
    "permute_symmetric",
    "save_matrix",
    "swap_pair",
    "BatchReport",
    "InstanceSpec",
    "RunRecord",
    "generate_instance",
    "growth_study",
    "run_batch",
    "solve_all_divisor_splits",
    "write_batch_csv",
    "write_growth_dat",
    "write_runs_json",
    "FactorPair",
    "MetricKind",
    "frob_metric",
    "is_exact_kronecker",
    "nearest_binary_kronecker",
    "residual",
    "var_metric",
    "OracleVerdict",
    "brute_force_factorize",
    "has_kron_permutation",
    "is_prime_for_all_splits",
    "verify_certificate",
    "RunReport",
    "SearchConfig",
    "SearchState",
    "alternate_local_search",
    "kron_grouping",
    "onion_search",
    "outsiders",
    "random_perturbation",
    "warmup",
]

__version__ = "0.1.0"
