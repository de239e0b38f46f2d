"""Simulation and analysis of secure jamming schemes for the wiretapped
diamond-relay channel."""

from .channel import ChannelDraw, draw_state, mac_output
from .constellation import ConstellationSpec, min_distance_bruteforce, sample_symbol, scale_params
from .decode import decode_destination, decode_eaves_noise, effective_coeffs, nearest_point_decode
from .field import GeneratorMatrix, build_mds_generator, smallest_prime_geq, verify_mds
from .schemes import (
    Frame,
    PrecodingPlan,
    Scheme,
    SchemeConfig,
    build_plan,
    dof_formula,
    encode_frame,
    plan_sbcj,
    plan_sbcj_snc,
    plan_scoj,
    plan_scoj_snc,
)
from .secrecy import (
    cancellation_residuals,
    exact_mi_links,
    fano_leak_bound,
    recover_fictitious,
    snc_mask_bound,
)

__version__ = "0.1.0"
