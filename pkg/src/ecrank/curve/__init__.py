"""Elliptic curves over Q: models, local data, point counting, torsion."""

from .counting import ApRecord, ap_batch, ap_good_prime, ap_record
from .local import LocalData, ReductionType, conductor, local_data, minimal_model, reduction_type, tate
from .weierstrass import (
    ProjectivePoint,
    WeierstrassCurve,
    compute_invariants,
    from_c4c6,
    point_add,
    point_neg,
    point_on_curve,
    scalar_mul,
)
from .torsion import torsion_is_trivial
