"""Flow of G2-structures on the cone over S3 x S3.

Subpackages: exterior calculus over the fixed 7-coframe (coeffs, forms,
exterior), G2 linear algebra (g2), the flow and its closed-form solution
(flow), convergence diagnostics (convergence), and the CLI (cli).  Hot
numeric loops live in _kernels with a compiled backend when built.
"""

from ._kernels import backend_name
from .coeffs import A, B, Rat, Sym, differentiate
from .exterior import (
    CoframeIndex,
    PointProfile,
    Profile,
    alpha,
    beta,
    cone_profile,
    constant_profile,
    d,
    dr,
    eval_form,
    t_derivative,
)
from .forms import KForm, contract, wedge
from .g2 import (
    MetricDiag,
    Octonion,
    associative_form,
    cross,
    hodge_star,
    inner,
    metric_from_phi,
    nondegenerate,
    octonion_mul,
    torsion_residuals,
)
from .flow import (
    CharacteristicState,
    FlowData,
    FlowSolution,
    characteristic_oracle,
    cone_phi,
    dphi_closed_form,
    dphidt_closed_form,
    flow_residual,
    from_initial_data,
    quadrature_F,
    residual_ode,
    solution_A,
    solve_B,
)
from .convergence import (
    ConvergenceReport,
    decay_fit,
    limit_metric,
    metric_deviation,
    sup_deviation_B,
    sup_deviation_Bsq,
)

__version__ = "0.1.0"
