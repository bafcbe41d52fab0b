"""Numerical laboratory for critically coupled vortices on the flat torus
and the geometry of their moduli bundle."""

from .lattice import (Divisor, GaugeTransform, TangentVector, TorusGrid,
                      build_grid, chern_degree, dist_to_divisor, dump_field,
                      from_antiholomorphic, gauge_apply, l2_inner, load_field,
                      to_antiholomorphic, torus_dist)
from .vortex import (DecayFit, TaubesSolveReport, VortexField, bradlow_limit,
                     gl_energy, solve_vortex, taubes_bounds_check,
                     vortex_residual)
from .linops import (CoTangentPair, apply_L, apply_L_adjoint, green_scalar,
                     solve_horizontal_correction, vertical_vector)
from .tangent import (FrameReport, TangentSeed, approximate_tangent,
                      bump_section, density_h, horizontal_tangent, rho_min,
                      tangent_frame)
from .berry import (CurvatureReport, HolonomyReport, connection_form,
                    coulomb_fix, curvature_pair, curvature_report,
                    parallel_transport, rescale_large_area, rescale_tangent)
from .loops import (CyclePath, LoopPath, Shadow, current_pairing,
                    cycle_pairing, duality_matrix, make_loop, shadow,
                    standard_test_forms, winding)

__version__ = "0.1.0"
