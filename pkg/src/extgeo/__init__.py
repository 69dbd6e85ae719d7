"""Numerical geometry of immersed submanifolds of flat and hyperbolic
ambient spaces: bending invariants, volume growth, ends, and the curvature
of extrinsic distance spheres.

The pipeline runs chart source text (or a catalog entry) through exact
second-order jets, assembles a weighted mesh graph, and evaluates the
asymptotic invariants on it.  See the README for the command line front
end.
"""

from .catalog import (CATALOG, CatalogEntry, GroundTruth, RotationChart,
                      catalog_build, catalog_names)
from .curves import Curve
from .errors import (ConfigError, CriticalPointError, DegeneratePlaneError,
                     DomainError, EvaluationError, ExtGeoError, GeometryError,
                     HypothesisViolatedError, ParseError, SingularityError,
                     TruncationError)
from .exprchart import ChartBase, ChartSpec, chart_positions, eval_chart, parse_chart
from .immersion import (PointGeometry, ambient_of, extrinsic_sphere_curvature,
                        grid_geometry, hypersurface_principal_curvatures,
                        level_set_tangent_plane, point_geometry,
                        sectional_curvature)
from .invariants import (DecayProfile, DeltaModel, InvariantReport,
                         c_star_bisection, c_star_closed_form,
                         default_tail_radii, invariant_tails, kasue_bound,
                         kasue_closed_form, pinching_functions,
                         threshold_c_star)
from .mesh import (BallRegion, EndsReport, MeshGraph, ambient_for, build_mesh,
                   count_ends, critical_free_radius, ends_stability,
                   extrinsic_ball, intrinsic_distances, mesh_dump)
from .spaceform import (Ambient, ambient_distance, c_kappa, euclidean,
                        geodesic, hyperbolic, lorentz_inner, model_volumes,
                        omega_m, s_kappa)
from .volumetrics import (GapReport, GrowthVerdict, VolumeCurve, ball_volume,
                          default_volume_radii, gap_ratio, sphere_volume,
                          verify_growth_bounds, volume_curve)

__version__ = "0.1.0"
