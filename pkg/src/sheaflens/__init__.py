"""Consistency of local data on finite topological spaces.

Sheaves of pseudometric spaces on finite spaces, the consistency radius of an
assignment and its local variants, min-max extension of partial assignments,
consistency filtrations, persistent Čech cohomology of partial covers, and the
point-cloud specialisation with a brute-force Čech-complex oracle.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .finspace import (
    FiniteSpace,
    OpenSet,
    PartialCover,
    alexandrov_from_preorder,
    build_explicit_topology,
    is_continuous,
    refines,
    star,
)
from .stalks import CollapseMap, Euclidean, FiniteTable, MatrixMap, OnePoint, TableMap
from .metricsheaf import (
    Assignment,
    MetricSheaf,
    assignment_distance,
    build_sheaf,
    consistency_diameter,
    consistency_radius,
    consistency_radius_l2,
    constant_sheaf,
    critical_thresholds,
    is_global_section,
    local_consistency_radii,
    local_consistency_radius,
    section_from_top,
    sheaf_lipschitz,
    star_consistency_radius,
)
from .extend import ExtensionProblem, ExtensionResult, extend_minimize, partial_consistency
from .morphism import (
    SheafMorphism,
    build_morphism,
    compose_morphisms,
    identity_morphism,
    pushforward_assignment,
    scaled_morphism,
    validate_shva,
)
from .filtration import (
    CoarseningFiltration,
    InterleavingCandidate,
    MonotoneMap,
    check_interleaving,
    consistency_filtration,
    epsilon_consistent_opens,
    interleaving_upper_bound,
    maximal_consistent_collection,
)
from .cech import (
    PersistenceDiagram,
    PersistenceModule,
    barcode,
    bottleneck,
    cech_cohomology,
    nerve,
    persistence_module_from_filtration,
    refinement_map,
)
from .pointcloud import (
    Ball,
    PointCloud,
    build_cloud_sheaf,
    cech_complex_oracle,
    circumcenter_extension,
    cloud_consistency_filtration,
    cloud_diagram,
    miniball,
    oracle_diagram,
)
