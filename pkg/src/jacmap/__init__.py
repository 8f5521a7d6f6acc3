"""Numerics for degree-0 sphere maps with prescribed area pullback.

The chart is the doubly-capped cylinder (r, theta) with r in [0, 2] and
theta in [0, 2pi); r = 1 is the equator, r = 0 and r = 2 the poles.
Everything is built on top of a uniform grid in that chart: area forms as
densities, self-maps with Jacobian access, quadrature functionals, a Moser
transport flow, and the deformation pipelines that move maps between the
constrained classes.
"""

from .sphere_geom import (
    Grid,
    AreaForm,
    FormFamilyParams,
    make_grid,
    sigma_standard,
    mu_family,
    integrate,
)
from .maps import (
    SphereMap,
    CollapseParams,
    pullback,
    identity_map,
    fold_map,
    vertical_compress,
    collapse_family,
    rotation,
    twist_loop,
    jet_vanishes,
    compose,
)
from .functionals import (
    ArcInterval,
    IntervalNet,
    OverlapReport,
    image_mask,
    overlap,
    missed_area,
    degree,
    net_intervals,
    immerses,
    transversely_immerses,
    overlap_report,
)
from .moser import (
    OneForm,
    DiffeoPath,
    solve_primitive,
    moser_flow,
    verify_transport,
)
from .deform import (
    ScalingField,
    BandEmbedding,
    scale_in_image,
    scale_off_image,
    retract_to_prescribed,
    band_push_overlap,
    alexander_contract,
)
from .homeo import (
    DiscHomeo,
    induced_matching,
    winding_number,
    fixes_interval,
)

__all__ = [
    "Grid", "AreaForm", "FormFamilyParams",
    "make_grid", "sigma_standard", "mu_family", "integrate",
    "SphereMap", "CollapseParams",
    "pullback", "identity_map", "fold_map", "vertical_compress",
    "collapse_family", "rotation", "twist_loop", "jet_vanishes", "compose",
    "ArcInterval", "IntervalNet", "OverlapReport",
    "image_mask", "overlap", "missed_area", "degree", "net_intervals",
    "immerses", "transversely_immerses", "overlap_report",
    "OneForm", "DiffeoPath", "solve_primitive", "moser_flow", "verify_transport",
    "ScalingField", "BandEmbedding",
    "scale_in_image", "scale_off_image", "retract_to_prescribed",
    "band_push_overlap", "alexander_contract",
    "DiscHomeo", "induced_matching", "winding_number", "fixes_interval",
]
