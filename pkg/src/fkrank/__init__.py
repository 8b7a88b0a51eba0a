"""Rank metric, Fuglede-Kadison determinant, Brown measures and the canonical
form of rank isometries, all at matrix scale."""

from .decomp import DecompositionResult, decompose, normalize_unital, reject_probe, skolem_noether
from .errors import (
    BoundaryAmbiguityError, DegeneracyError, FactorizationError, FKRankError,
    IdempotencyError, IllConditionedSwapError, InconsistencyError, InvarianceError,
    NonBijectiveError, NotAnIsometryError, UsageError,
)
from .fkdet import (
    BrownMeasure, GridMeasure, GridSpec, HSProjectionResult, brown_decompose,
    brown_from_grid, brown_measure, fk_det, fk_det_eps, fk_logdet, hs_projection,
    ldet_at, log_norm, quasinilpotent_check, spectral_radius,
)
from .maps import (
    MapForm, MatrixMap, ProbeSet, Verdict, adjoint_map, compose, conjugation_map,
    from_form, identity_map, invert, is_bijective, is_brown_preserving,
    is_det_preserving, is_multiplicative, is_rank_isometry, left_mult, right_mult,
    support_image, transpose_map,
)
from .matcore import (
    matrix_from_json, matrix_to_json, numerical_rank, pinv, polar, schur,
    schur_reorder, svd,
)
from .regions import (
    Complement, Disk, HalfPlane, Intersection, Region, Singleton, Union,
    region_from_json, region_to_json,
)
from .regring import (
    AmbiguousRankWarning, PeirceBlocks, Projection, idempotent_split, l0_norm,
    peirce_decompose, proj_meet_join, projection_conjugator, rank_metric,
    rank_norm, support_normalizers, supports, sv_function,
)

__version__ = "0.1.0"
