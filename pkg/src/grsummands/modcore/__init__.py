"""Modules for reductive groups as weight-graded generator matrices."""

from .gmod import FORMAT_VERSION, STRUCTURES, GMod, LevelSpec, gen_label, parse_label, prune, supports
from .build import (
    NotInvariantError,
    baby_verma,
    check_invariant,
    default_field,
    direct_sum,
    dual,
    frobenius_twist,
    homogeneous_basis,
    induced_module,
    meet,
    quotient_module,
    restrict_structure,
    simple_module,
    steinberg,
    sub_module,
    tau_twist,
    tensor,
    trivial_module,
    weyl_module,
)

__all__ = [
    "FORMAT_VERSION", "STRUCTURES", "supports", "induced_module", "meet", "GMod", "LevelSpec", "gen_label", "parse_label", "prune",
    "NotInvariantError", "baby_verma", "check_invariant", "default_field", "direct_sum",
    "dual", "frobenius_twist", "homogeneous_basis", "quotient_module", "restrict_structure",
    "simple_module", "steinberg", "sub_module", "tau_twist", "tensor", "trivial_module",
    "weyl_module",
]
