"""
Flagforge — services package. The engine lives here; management commands only parse and print.

Re-exports for the common entry points:
  from core.services import Flat, LayeredFamily, count_flags_dp, flags_bound, ...
Submodules:
  from core.services.geometry import join, meet, dualize_3d, generic_section
  from core.services.counting import degree_split, degree_profile
  from core.services.bounds import st_bound, flags3d_restricted_bound
  from core.services.constructions import grid_construction_3d, flag_lower_bound_construction
  from core.services.experiments import run_experiment, fit_exponent, verify_suite
  from core.services.codec import load_family, dump_family
"""

from .bounds import BoundValue, ExponentTuple, flags_bound, partial_flags_bound, valid_exponent_tuples
from .constructions import ConstructionSpec, GeneratedInstance, build
from .counting import (
    LayeredFamily,
    containment_graph,
    count_flags_bruteforce,
    count_flags_dp,
    count_partial_flags,
)
from .experiments import fit_exponent, run_experiment, verify_suite
from .geometry import Flat, contains, flat_from_points, join, meet

__all__ = [
    'BoundValue',
    'ExponentTuple',
    'flags_bound',
    'partial_flags_bound',
    'valid_exponent_tuples',
    'ConstructionSpec',
    'GeneratedInstance',
    'build',
    'LayeredFamily',
    'containment_graph',
    'count_flags_bruteforce',
    'count_flags_dp',
    'count_partial_flags',
    'fit_exponent',
    'run_experiment',
    'verify_suite',
    'Flat',
    'contains',
    'flat_from_points',
    'join',
    'meet',
]
