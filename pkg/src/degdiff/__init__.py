"""degdiff: simulate and verify diffusions with weight-degenerate coefficients.

The library covers weight-class checks (Muckenhoupt A2, doubling,
exponential-BMO, Poincare ratios), diffusion fields A(x) with their SDE
coefficients and generator, Euler-Maruyama simulation with singular-drift
safeguards, kernel/potential estimators, and exact Bessel-process reference
results for the isotropic case.
"""

__version__ = "0.1.0"

from .errors import (CoincidentPointsError, DegenerateTestFunctionError,
                     DivergentIntegralError, EmptyBatchError,
                     IndefiniteMatrixError, NonPositiveRatioError,
                     NonSymmetricMatrixError, SingularEvaluationPointError,
                     SingularPointError, SpecError)
from .geometry import Annulus, Ball, Box, Cube
from .weights import (QuadConfig, Weight, WeightClassReport, a2_ratio,
                      bmo_exp_avg, check_a2, check_doubling, custom_weight,
                      doubling_ratio, eval_weight, exponential_weight,
                      mean_deviation, poincare_ratio, power_weight,
                      product_weight)
from .forms import (DiffusionField, SdeCoefficients, SmoothTestFunction,
                    apply_generator, ball_bump, check_ibp, check_local_norms,
                    custom_field, drift, ellipticity_lambda,
                    exponent_window, exponential_field, form_energy,
                    intrinsic_bounds, isotropic_power_field, power_spd_field,
                    shell_bump, sqrt_spd)
from .sde import (Domain, PathBatch, PathSample, SimConfig, StepPolicy,
                  annulus_domain, ball_domain, em_step, full_domain,
                  hitting_stats, kill_at_exit, realized_covariation,
                  simulate_batch, simulate_path)
from .estimators import (BallMassCache, DensityEstimate, EnvelopeReport,
                         check_hoelder_hypotheses, envelope_stability,
                         fit_heat_kernel_constant, heat_kernel_envelope,
                         indicator_field, kde_transition_density,
                         moment_summary, resolvent_envelope, riesz_potential)
from .oracle import (BesselOracle, RadialSample, besq_mean, besq_radial_cdf,
                     besq_radial_density, besq_variance, bessel_dimension,
                     hits_origin, radial_reference_sim)
