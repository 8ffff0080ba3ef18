"""Testing whether a point cloud in the unit disk lies near a real algebraic
variety of given dimension and degree."""

from .config import Config, load_config
from .covering import CoverNet, build_net, net_size_bound, smooth_approximation
from .discriminant import MarginCertificate, discriminant_margin, raffalli_sphere_distance
from .errors import *  # noqa: F401,F403
from .geometry import PointCloud, ProjectionResult, project_to_variety, sample_variety
from .poly import PolyTuple, eval_and_jacobian, make_poly
from .risk import RiskReport, SamplePlan, empirical_risk, hoeffding_tail, sample_complexity
from .tester import Decision, erm_refine, lipschitz_probe, test_hypothesis

__version__ = "0.1.0"
