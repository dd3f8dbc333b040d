from .coverage import (
    CoverageMapping,
    MappingKind,
    MappingStats,
    SumPart,
    build_coverage,
    from_generation,
    mapping_stats,
)
from .exact import det, inverse
from .generation import (
    D,
    GenerationMatrix,
    R,
    RecoveryPlan,
    RecoveryStatus,
    Ref,
    SemiBound,
    Strategy,
    apply_plan,
    recovery_plan,
    semi_bound,
    semi_recover,
    solve_erasures,
    to_physical,
)
from .matrices import (
    circular_displacement,
    minor_determinants,
    mr_full,
    mr_generate,
    pascal_generate,
    spans_check,
)
from .partition import PartitionKind, PartitionScheme, split_sizes
