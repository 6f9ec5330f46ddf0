"""Structure-preserving stochastic Lie-Poisson-Langevin simulations."""

from .algebra import LieStructure, ad_star, bracket, casimirs, double_bracket_drift, se3_heavy_top, sharp, so3
from .diagnostics import GibbsSpec, gibbs_log_density, invariant_report, ks_statistic, orbit_rejection_sampler
from .dynamics import (LiePoissonSystem, heavy_top_system, lp_fields, lp_ito_correction, magnetic_particle_system,
                       rigid_body_system)
from .errors import (CollisionError, ConfigError, EfficiencyError, InputError, LPLError, NumericalError,
                     UnsupportedError)
from .integrate import Trajectory, integrate_trajectory, run_ensemble
from .noise import DrivingPath, brownian_path, refine
from .runconfig import __version__
from .sphere import HarmonicBasis, PointVortexSystem, VortexConfig, vortex_drift, vortex_hamiltonian
