"""Self-affine plane arcs: affine maps and their flows, zipper attractors,
weak separation search, parabola detection and multizipper extraction."""
from .affine import (AffineMap, compose, compose_word, conjugate, dist_to_identity, eigen2,
                     fixed_set, inverse, mat_exp, mat_log, opnorm)
from .attractor import (ArcApprox, IfsSystem, Zipper, arc_approx, build_arc, check_jordan,
                        hausdorff_distance, index_point, locate, subarc)
from .conic import ConicFit, classify_arc, fit_conic
from .errors import AffarcError
from .flows import (FlowSpec, MapClass, classify, flow_spec, integral_curve, min_speed,
                    normalize_field, power, stationary_set, vector_field)
from .multizipper import (IntersectionCatalog, MultizipperGraph, PartitionP, build_catalog,
                          extract_multizipper, order_and_check, prune_to_finite,
                          reconstruct, refine_and_build_graph, verify_b_properties)
from .wsp import (EpsilonNet, FamilyElement, WspReport, enumerate_family, epsilon_net,
                  fixed_points_on_arc, intersects_arc, proper_intersection,
                  relocate_fixed_points, wsp_check)

__all__ = [
    "AffineMap", "compose", "compose_word", "conjugate", "dist_to_identity", "eigen2",
    "fixed_set", "inverse", "mat_exp", "mat_log", "opnorm", "ArcApprox", "IfsSystem", "Zipper",
    "arc_approx", "build_arc", "check_jordan", "hausdorff_distance", "index_point", "locate",
    "subarc", "ConicFit", "classify_arc", "fit_conic", "AffarcError", "FlowSpec", "MapClass",
    "classify", "flow_spec", "integral_curve", "min_speed", "normalize_field", "power",
    "stationary_set", "vector_field", "IntersectionCatalog", "MultizipperGraph", "PartitionP",
    "build_catalog", "extract_multizipper", "order_and_check", "prune_to_finite",
    "reconstruct", "refine_and_build_graph", "verify_b_properties", "EpsilonNet",
    "FamilyElement", "WspReport", "enumerate_family", "epsilon_net", "fixed_points_on_arc",
    "intersects_arc", "proper_intersection", "relocate_fixed_points", "wsp_check",
]
