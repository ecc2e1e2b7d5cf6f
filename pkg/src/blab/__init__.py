"""Spectral tools for transport with fractional dissipation on the torus.

Three layers: spectral primitives (grids, multipliers, Biot-Savart),
a dyadic frequency toolkit (blocks, Besov norms, paraproducts, checked
inequalities), and two integrating-factor RK4 solvers (scalar
transport-diffusion and the coupled vorticity/temperature system) with
their analytical monitors.
"""

from .grid import Field, Grid, SpectralField, VectorField
from .operators import (advect, biot_savart, curl, dealias,
                        dealiased_product, divergence, fractional_laplacian,
                        gradient, gradient_norm, lebesgue_norm, leray_project,
                        mean_value, partial_derivative, riesz_transform,
                        vector_lebesgue_norm, velocity_gradient_norm)
from .dyadic import (BernsteinReport, BesovIndex, BlockHistory,
                     DyadicPartition, bernstein_check, besov_norm,
                     build_partition, dyadic_block, low_pass,
                     spacetime_besov)
from .paradiff import (BonySplit, InequalityReport, bony_split,
                       check_block_commutator, check_conv_commutator,
                       check_generalized_bernstein,
                       check_riesz_commutator_lp,
                       check_riesz_commutator_uniform, commutator_block,
                       commutator_riesz, exact_product_integral,
                       random_divfree_velocity, random_field,
                       torus_convolution)
from .tdsolver import (CFLViolation, TDConfig, TDTrajectory,
                       TrajectoryDiverged, report_besov_propagation,
                       report_log_estimate, report_max_principle,
                       report_smoothing_effect, run_td, td_step)
from .boussinesq import (AprioriRecord, BoussConfig, BoussTrajectory,
                         GammaBudgetReport, PhiFit, SimState, bouss_step,
                         fit_phi, fit_phi_series, gamma, gamma_budget,
                         monitor_apriori, run_boussinesq, standard_config,
                         standard_state, truncate_initial_data)
from .snapshots import SnapshotError, read_fields, read_snapshot, \
    write_fields, write_snapshot
from .config import ConfigError, RunConfig, parse_config
from .csvout import CsvWriter, ResultRow, emit_csv

__version__ = "0.1.0"
