"""Algebraic K-groups of finite chain rings O_K/π^n via syntomic matrices."""

from .ktheory import (
    FiniteAbelianGroup,
    KGroupTable,
    assemble_integral,
    even_vanishing_bound,
    k1_units_check,
    k_p_parts,
    odd_order,
    quillen_k,
    ratio_check,
)
from .padic_linalg import AbelianPGroup, PadicMatrix, PrecisionError, smith_normal_form, total_complex_cohomology
from .prism_envelope import FieldSpec, InvalidFieldSpec
from .syntomic import syn_matrices, build_square, syntomic_cohomology

__all__ = [
    "AbelianPGroup",
    "FieldSpec",
    "FiniteAbelianGroup",
    "InvalidFieldSpec",
    "KGroupTable",
    "PadicMatrix",
    "PrecisionError",
    "assemble_integral",
    "build_square",
    "even_vanishing_bound",
    "k1_units_check",
    "k_p_parts",
    "odd_order",
    "quillen_k",
    "ratio_check",
    "smith_normal_form",
    "syn_matrices",
    "syntomic_cohomology",
    "total_complex_cohomology",
]
