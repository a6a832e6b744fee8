"""Level-set domains, the curvature functional and the example gallery."""
from .cap import SmoothCap, smooth_cap_apply
from .curvature import (
    CurvatureReport,
    SamplerConfig,
    constants_ABC,
    curvature_h,
    curvature_h_unchecked,
    sample_boundary,
)
from .domains import (
    Ellipsoid,
    Graph,
    HalfSpace,
    IntegralFunctional,
    LevelSetDomain,
    QuadraticField,
    Rational1D,
    Slab,
    Sphere,
    WholeSpace,
    domain_from_spec,
)
from .gallery import (
    ADMISSIBLE,
    INADMISSIBLE,
    UNDETERMINED,
    IntegralDiagnostics,
    ellipsoid_admissibility,
    ellipsoid_threshold,
    graph_domain_h,
    integral_functional_domain,
    integral_functional_h,
    sphere_admissibility,
    sphere_blowup_witness,
)
