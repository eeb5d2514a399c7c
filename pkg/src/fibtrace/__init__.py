"""Numerical laboratory for the Fibonacci Hamiltonian.

The package is organised around the trace map T(x,y,z) = (2xy-z, x, y),
whose dynamics encodes the spectral and transport properties of the
discrete Schrodinger operator with the golden-ratio circle potential.
It provides:

* the trace map itself, its conserved quantity, Jacobians, the period-6
  orbit through (0,0,a) and the closed-form growth rate d(lambda)
  (``trace_map``);
* the trace polynomials x_k(E), their zeros, derivative growth rates and
  real band structure (``traces``);
* complex connected components of |x_k(z)| <= 1+delta and distortion-ball
  inclusions (``components``);
* transfer-matrix cocycles at complex energy and empirical power-law
  exponents (``transfer``);
* finite-volume Schrodinger dynamics, Abel-averaged moments, outside
  probabilities and the two-sided Parseval check (``dynamics``);
* transport-exponent fits and closed-form lower bounds (``transport``);
* band covers of the spectrum and box-counting dimension estimates
  (``spectrum``).

All functions are pure; parameter sweeps are safe to run concurrently.
"""

from fibtrace.trace_map import (
    TracePoint,
    Coupling,
    MultiplierReport,
    step,
    inverse_step,
    invariant,
    jacobian,
    six_cycle,
    multiplier_report,
    growth_rate,
    torus_semiconjugacy,
    torus_shift,
    spectrum_line_point,
    LOG_PHI,
)
from fibtrace.traces import (
    TraceSequence,
    KeyZero,
    Band,
    fibonacci,
    iterate_traces,
    trace_values,
    trace_and_derivative,
    zeros_of_xk,
    key_zero,
    zero_rates,
    band_components,
    band_containing,
    zeros_to_csv,
    bands_to_csv,
)
from fibtrace.components import (
    ComponentContour,
    trace_component,
    koebe_bounds,
    distortion_ball_radii,
    contour_to_csv,
    contour_to_svg,
)
from fibtrace.transfer import (
    PowerLawFit,
    GOLDEN_FREQUENCY,
    potential,
    fibonacci_word,
    transfer_matrix,
    transfer_product,
    transfer_norms,
    half_trace_check,
    empirical_xi,
    xi_threshold,
    largest_cubic_root,
    fits_to_csv,
)
from fibtrace.dynamics import (
    Hamiltonian,
    DynamicsResult,
    build,
    amplitudes,
    position_moment,
    abel_moment,
    outside_prob,
    parseval_residual,
    outside_bound_ratio,
    compute_dynamics,
    dynamics_to_csv,
)
from fibtrace.transport import (
    TransportFit,
    BoundReport,
    fit_beta,
    theoretical_bounds,
    corollary_check,
)
from fibtrace.spectrum import (
    DimensionEstimate,
    spectrum_cover,
    escape_survivors,
    box_dimension,
    cover_to_csv,
)

__version__ = "0.1.0"
