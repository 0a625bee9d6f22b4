"""Polyelliptic coordinates outside convex polygons.

Confocal elliptic charts attached to the sides (and to the wedges at the
vertices) of a triangle or square are glued along the side extensions into
one orthogonal system ``(mu_c, theta_c)`` covering the whole exterior.
"""

__version__ = "0.1.0"

from .errors import (BoundaryPoint, ConfigError, ConvergenceFailure, DegenerateGeometry,  # noqa: E402
                     OutOfDomain, OutOfRange, PolyellipticError, ProtectedRegion,
                     SeparabilityFailure, Unsupported, WrongSide)
from .geometry import (DashedRay, LocalFrame, PolygonSpec, build_polygon,  # noqa: E402
                       dashed_rays, side_frames)
from .charts import (LocalCoord, cartesian_to_local, local_to_cartesian,  # noqa: E402
                     ray_in_local, tangent_mismatch)
from .atlas import (CommonCoord, SectorTable, ae_c_from_mu_c, angle_transfer,  # noqa: E402
                    forward, hyperbola_ranges, inverse, local_ae_from_common, mu_c_from_ae_c,
                    sector_partition)
from .metric import (jacobian, metric_profile, scale_factors, separability_residual,  # noqa: E402
                     stackel_factors)
from .separated import (angular_spectrum, helmholtz_residual, mathieu_characteristic,  # noqa: E402
                        radial_solution)
