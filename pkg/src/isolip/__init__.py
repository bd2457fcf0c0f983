"""Iso-Lipschitz order with additive error on finitely-supported measures."""

from .coupling import (
    PairSet,
    Plan,
    compose_subtransport,
    dev_succ,
    dis_delta_plan,
    dis_delta_set,
    hausdorff_l1,
    prohorov,
    quantile_coupling,
)
from .isoorder import (
    OrderCertificate,
    OrderDecision,
    check_iso_dominant,
    classic_iso_order,
    decide_iso_order,
    min_s_at_t,
)
from .measure import (
    AtomicMeasure,
    cdf_eval,
    convolve,
    generalized_inverse,
    partial_diameter,
    scale_shift,
    support_gaps,
)
from .mmspace import (
    FiniteMMSpace,
    closed_neighborhood,
    distance_pushforward,
    make_cube,
    make_product_graph,
    make_torus,
    validate_metric,
)

__version__ = "0.1.0"
