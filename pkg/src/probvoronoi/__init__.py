"""Probabilistic Voronoi diagrams and moving nearest-neighbour queries over uncertain objects."""

from .engine import (KnownRegion, RunMetrics, Server, StepResult, Trajectory, build_known_region,
                     ipvd_pmnn, naive_pmnn, ppvd_pmnn, safe_containment, safe_lower_bound)
from .geometry import (Mbr, Point2D, Segment2D, UncertainDisc, UncertainInterval, maxdist,
                       mindist, object_mbr)
from .index import IoCounter, MbrTree
from .kernel import (KernelConfig, ProbResult, TopK, mc_oracle, pnn_prob_1d, pnn_prob_2d,
                     pnn_probs, top1_pnn, topk_pnn)
from .pvd1d import Pvd1D, locate_1d, prob_bisector_1d, prob_voronoi_1d
from .pvd2d import InCell, InMultiPbr, InPbr, Pbr, Pvd2D, locate_2d, prob_bisector_2d, prob_voronoi_2d
from .workload import (WorkloadSpec, gen_objects, gen_trajectory, load_objects, load_trajectory,
                       save_objects, save_trajectory)

__version__ = "0.1.0"
