"""Width bounds for cone-valued maps, checked on sampled charts.

Geometry of charted maps, minimal enclosing cones, width bounds with the
constant ``A_eta``, the auxiliary-function identities behind them, and
rotational model diagnostics.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    A_SUP,
    AuxParams,
    VerificationReport,
    aux_quantities,
    certify_theorem1,
    certify_theorem2,
    compute_A,
    finale_check,
    hess_u_direction,
    median_base_point,
    omega_region,
    otsuki_direction,
    theorem1_bound,
    theorem2_bound,
)
from .cones import Cone, corner_test, cone_with_axis, min_enclosing_cone  # noqa: E402
from .errors import *  # noqa: E402,F401,F403
from .geometry import (  # noqa: E402
    ChartedMap,
    energy_density,
    hessian_scalar,
    laplace_beltrami_fd,
    pullback_metric,
    second_fundamental_form,
    sectional_curvature,
    tension_field,
)
from .kernels import BACKEND  # noqa: E402
from .models import (  # noqa: E402
    get_family,
    integrability_test,
    paraboloid,
    rotational_model,
    volume_functions,
    volume_ratio,
)
from .sampling import SampleSpec, sample_chart  # noqa: E402
