"""Stationary discs for almost complex structures near strongly pseudoconvex hypersurfaces.

Modules:

* ``algebra``: polynomial maps in ``(z, zbar)`` and polynomial discs in ``(zeta, zetabar)``;
* ``structures``: almost complex structures, graded hypersurfaces, Levi form,
  standard form and dilations;
* ``cotangent``: the canonical lift to the cotangent bundle and disc residuals;
* ``rhmodel``: the linear model problem, its explicit solutions and kernel;
* ``continuation``: homotopy continuation to the full structure;
* ``cli``: batch front end.
"""

from .algebra import DiscMap, PolyMap, cauchy_green
from .continuation import ContinuationProblem, continue_disc, verify_stationary
from .cotangent import LiftedDisc, LiftedStructure, lift_structure
from .rhmodel import BasePoint, BoundaryData, ModelProblem, explicit_disc, kernel_basis, solve_linearized
from .structures import (AcsModel, HypersurfaceModel, dilate, is_standard_form, levi_numeric,
                         normalize_to_standard_form, validate_acs)

__all__ = [
    "AcsModel", "BasePoint", "BoundaryData", "ContinuationProblem", "DiscMap", "HypersurfaceModel",
    "LiftedDisc", "LiftedStructure", "ModelProblem", "PolyMap", "cauchy_green", "continue_disc",
    "dilate", "explicit_disc", "is_standard_form", "kernel_basis", "levi_numeric", "lift_structure",
    "normalize_to_standard_form", "solve_linearized", "validate_acs", "verify_stationary",
]
