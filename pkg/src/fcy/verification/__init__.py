"""Independent oracles and property checks."""
from .checks import (
    CheckReport,
    audit_amgm,
    audit_det_inequality,
    audit_identities,
    audit_oracle,
    check_amgm,
    check_dense_spectrum,
    check_det_inequality,
    check_kernel_range,
    check_linearization,
    check_max_principle,
    check_base_change_equivalence,
    check_uniqueness,
    complex_from_real_hessian,
    random_hermitian,
    shifted_data,
)
from .exterior import MultiIndexForm, wedge_oracle

__all__ = [
    "CheckReport",
    "MultiIndexForm",
    "audit_amgm",
    "audit_det_inequality",
    "audit_identities",
    "audit_oracle",
    "check_amgm",
    "check_dense_spectrum",
    "check_det_inequality",
    "check_kernel_range",
    "check_linearization",
    "check_max_principle",
    "check_base_change_equivalence",
    "check_uniqueness",
    "complex_from_real_hessian",
    "random_hermitian",
    "shifted_data",
    "wedge_oracle",
]
