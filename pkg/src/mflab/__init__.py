"""mflab: a desk-scale certification lab for quantum mean-field limits.

Exact small-lattice many-body dynamics, mean-field flows on density matrices,
purified excitation counting, and executable certificates for the fidelity /
trace-norm closeness bounds that relate them.

The math core is re-exported here;  the harness lives in ``mflab.config``,
``mflab.runner``, ``mflab.report``, ``mflab.figures``, and ``mflab.cli``.
"""

from . import errors
from .bounds import (
    EnvelopeInputs,
    MarginRecord,
    MarginReport,
    alpha_envelope,
    certify_theorems,
    check_derivative_inequality,
    check_fluctuation_bounds,
    consistency_report,
    envelope_inputs_from,
    fidelity_envelope,
    fluctuation_report,
    trace_envelope,
    with_scaled_alpha,
    with_scaled_lambda,
)
from .dynamics import (
    PropagatorCache,
    TimeGrid,
    Trajectory,
    evolve_trajectory,
    hartree_step,
    lifted_hartree_step,
    nbody_energy,
    propagate_nbody,
)
from .linalg import (
    DensityMatrix,
    PureState,
    TensorShape,
    covariance_check,
    density_matrix,
    herm_eig,
    kron,
    kron_power,
    matrix_sqrt_psd,
    partial_trace,
    permutation_operator,
    pure_state,
    reduced_density,
    schatten_norms,
    svd,
    trace_norm,
)
from .metrics import dpi_margin, fidelity, fvdg_margin, trace_distance
from .model import (
    TorusModel,
    build_fluctuation_operator,
    build_hn,
    build_mean_field_generator,
    convolve,
    density_of,
    density_of_lifted,
    hoelder_bound,
    lambda_of,
    laplacian_ring,
    potential_bounded,
    potential_coulomb_like,
    potential_spiky,
    potential_zero,
)
from .purify import (
    PurifiedPair,
    alpha,
    apply_p,
    counting_bound_margin,
    initial_alpha_bound_check,
    product_weight,
    purify_n_body,
    purify_one_body,
    slot_overlap,
)
from .scenarios import (
    scenario_mixture_counterexample,
    scenario_near_product,
    scenario_product,
)

__version__ = "0.1.0"
