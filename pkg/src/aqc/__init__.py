"""Elliptic operator calculus, Korn-type multipliers, and energy minimisation."""

__version__ = "0.1.0"

from .catalog import (BUILTIN_NAMES, builtin_operator, load_operator,
                      operator_from_json, operator_to_json, save_operator)
from .counterexamples import (PlaneWaveRecipe, build_plane_wave_sequence,
                              find_symbol_kernel, korn_failure_experiment,
                              make_plane_wave_recipe, nonsmooth_kernel_field)
from .errors import (AqcError, DimensionMismatch, EllipticOperator,
                     GridTooSmall, IndexOutOfRange, MalformedDefinition,
                     NegativeShift, NonElliptic, NonFiniteEnergy,
                     NonPositiveWeight, ZeroField)
from .fields import (GridField, apply_operator, apply_operator_adjoint,
                     bump_window, dm_values, gradient_values,
                     random_band_limited_field, read_aqcf, spectral_derivative,
                     write_aqcf)
from .multipliers import (MultiplierKernel, apply_multiplier,
                          build_korn_multiplier, identity_kernel,
                          korn_modular_ratio, muckenhoupt_constant,
                          reconstruct_derivatives, weighted_korn_ratio)
from .nfunctions import (NFunction, check_F1, delta2_nabla2, make_power,
                         make_psi_aux, make_vp_profile, parse_nfunction,
                         psi_aux_bracket, shift, vp_comparison_theta, vp_grad,
                         vp_hessian, vp_value)
from .operators import (DifferentialOperator, EllipticityReport,
                        GradientFormReduction, RangeDecomposition,
                        SymbolMatrix, check_ellipticity, check_exactness,
                        essential_range, operator_norm, pure_tensor,
                        reduce_to_gradient_form, symbol_at)
from .solve import (EnergyProblem, MinimizeResult, SolverConfig, minimize,
                    solve_quadratic_dirichlet)
from .variational import (CoercivityReport, HypothesisReport, Integrand,
                          QuasiconvexityReport, RegularityReport,
                          ShiftedKornReport, check_hypotheses,
                          coercivity_diagnostic, concave_toy_integrand,
                          det_vp_integrand, reduce_integrand,
                          regularity_diagnostic, scaled_vp_integrand,
                          test_shifted_korn_chain, test_strong_quasiconvexity,
                          vp_integrand)
