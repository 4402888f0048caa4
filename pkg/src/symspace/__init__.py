"""Symplectic symmetric spaces of Ricci type, with Radon-type transforms.

The models arise by reducing the punctured standard symplectic vector space
along the flow of a generator A with A^2 = lambda Id; the package builds
them in all three cases, verifies the connection / curvature / moment-map
structure numerically, constructs their totally geodesic symplectic
submanifolds, and computes Radon and dual Radon transforms over submanifold
orbits, including the classical plane transform on R^3 with its exact
inversion.
"""

__version__ = "0.1.0"

from .ambient import (
    DEFAULT_TOL,
    AdaptedBasis,
    Generator,
    GeneratorClass,
    SymplecticForm,
    adapted_basis,
    classify_generator,
    darboux_basis,
    generator_from_dict,
    generator_to_dict,
    is_sp_element,
    make_generator,
    normal_form,
    standard_form,
)
from .model import (
    HorizontalVector,
    ModelPoint,
    ModelSpace,
    TangentFrame,
    canonical_rep,
    from_chart,
    geodesic,
    geodesic_trace,
    horizontal_project,
    model_space,
    model_space_from_dict,
    omega_red,
    points_equal,
    rep_distance,
    symmetry,
    to_chart,
)
from .curvature import (
    CurvatureSample,
    curvature_at,
    local_symmetry_defect,
    ricci_from_generator,
    ricci_type_report,
    symplectize,
    vaisman_split,
)
from .group import (
    AlgebraElement,
    GroupElement,
    act,
    algebra_basis,
    case3_moment,
    equivariance_defect,
    fundamental_field,
    moment,
    random_group_element,
    sl_moment,
    su_moment,
    transitive_element,
)
from .geodesic_sub import (
    GeodesicSubmanifold,
    OrbitInvariants,
    act_on_submanifold,
    contains,
    induced_model,
    orbit_invariants,
    random_submanifold,
    submanifold_from_tangent,
)
from .radon import (
    DensityFunction,
    OrbitQuadrature,
    PlaneR3,
    R3Density,
    SubmanifoldQuadrature,
    dual_radon,
    r3_inverse,
    r3_radon,
    r3_reconstruct,
    radon,
    registry_density,
    registry_r3,
    sphere_quadrature,
    vol_form_quadrature,
)
