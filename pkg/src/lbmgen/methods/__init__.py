"""Collision operators: method descriptions, rule assembly and adaptive rates."""

from .assemble import CollisionRule, assemble_collision_rule, cumulant_roundtrip_rule, hoist_rates
from .cumulants import (
    MissingMomentError, cumulants_to_raw_moments, raw_moments_to_cumulants,
)
from .entropic import (
    OMEGA_H, OMEGA_S, NewtonConvergenceError, NotLinearInRatesError, create_kbc,
    discrete_entropy, kbc_components, kbc_higher_rate, kbc_partition,
    newton_entropy_maximize,
)
from .spec import (
    InvalidRateError, MethodSpec, RelaxationInfo, Space, create_cumulant,
    create_mrt, create_srt, create_trt, is_conserved, maxwellian_cumulant,
    method_tableau, mrt_groups,
)
from .turbulence import (
    create_smagorinsky_srt, rate_from_viscosity, second_nonequilibrium_moments,
    smagorinsky_closed_form, smagorinsky_identity, smagorinsky_rate,
    viscosity_from_rate,
)
