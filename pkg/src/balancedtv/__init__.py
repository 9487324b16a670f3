"""Community detection on weighted sparse graphs via balanced-TV modularity
optimization with a pseudospectral diffusion-threshold (MBO) solver."""

from .build import knn_graph, nonlocal_means_features, planted_partition, two_moons
from .eigen import (
    DiffusionOperator,
    EigenBasis,
    cached_eigenbasis,
    dense_spectrum,
    graph_fingerprint,
    load_basis,
    save_basis,
    smallest_eigenpairs,
)
from .graph import (
    SparseGraph,
    Supervision,
    balanced_cut,
    balanced_cut_centered,
    balanced_tv,
    cut,
    gl_energy,
    graph_tv,
    labels_to_matrix,
    matrix_to_labels,
    modularity,
    ssl_energy,
    validate_partition_matrix,
    volume,
)
from .io import (
    load_edge_list,
    load_features,
    load_label_pairs,
    load_labels,
    save_edge_list,
    save_features,
    save_labels,
    save_matrix,
)
from .mbo import (
    MboConfig,
    MboResult,
    diffuse,
    fidelity_step,
    mbo_run,
    random_partition_matrix,
    select_timestep,
    threshold,
)
from .metrics import RunBatch, classification_rate, consistency, purity
from .partition import (
    CommunitySweep,
    FixedCommunities,
    RecursiveSplit,
    kmeans_init,
    recursive_partition,
    sweep_nhat,
)

__version__ = "0.1.0"
