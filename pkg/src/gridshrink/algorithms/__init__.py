from .bfs import bfs_shrinking, final_segment_shrink, segment_color_shrink, segment_detection
from .incompressible import compute_incompressible_nodes, flags_from_marks, incompressible_tree, oracle_flags
from .run import AlgorithmRun, Recorder, anonymity_audit, permuted_copy
from .target import (
    materialize_target,
    simulate_target_overlay,
    target_tree,
    topological_equivalence_test,
)
from .adjacency import shape_reduction_adjacency
