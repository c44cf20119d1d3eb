"""Renormalisation of Moebius circle maps with a break.

Quick start::

    from breakrenorm import Params, rotation_number, renormalize_T
    p = Params(1.0, 0.5, 2.0)
    rotation_number(p, 10)          # [2, 1, 1, 4, 7, 2, 3, 1, 3, 1]
    renormalize_T(p).new_params

``RENORM_NUMBA=0`` selects the pure NumPy kernels.
"""
from ._accel import backend
from .errors import *  # noqa: F401,F403
from .mobius import (BreakPair, MoebiusMap, Params, TangentVector, canonical_cone_vector,
                     check_commutation, circle_map, in_cone, make_pair, validate_params)
from .renorm import (ContinuedFraction, RegionClass, Status, StepResult,
                     birkhoff_rotation_number, classify, dual_inverse_R, dual_inverse_T,
                     involution_I, prerenormalize, renormalize_R, renormalize_T,
                     rotation_number, T_orbit)
from .hyperbolicity import (apriori_scan, eigensplit, expansion_report, jet_T, jet_T_power,
                            orbit_splitting)
from .horseshoe import (SymbolWindow, attractor_point, find_periodic_point, random_window,
                        trace_stable_curve, trace_unstable_curve, transversality_angle)
from .smooth import (GeneralBreakMap, convergence_report, fit_model, general_renormalize,
                     make_conjugated_map, same_rho_contraction)

__version__ = "0.1.0"
