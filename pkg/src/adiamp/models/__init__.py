from .twolevel import (
    U_SYMMETRIZE,
    TwoLevelClosedForms,
    petermann_two_level,
    pt_symmetric,
    two_level_Ag_along_delta,
    two_level_closed_forms,
    two_level_family,
    two_level_matrix,
)
from .metamaterial import (
    UNBOUNDED,
    MetamaterialConfig,
    MetamaterialMatrices,
    Unbounded,
    ZeroMode,
    K_inf_from_eps,
    coupling_matrices,
    instability_threshold,
    left_inverse,
    metamaterial_complex_a_family,
    metamaterial_matrices,
    metamaterial_ramp_family,
    metamaterial_zero_mode,
    momentum_from_positions,
    ramp_duration,
    reciprocal_gap,
    reciprocity_unitary,
    zero_mode_index,
    zero_mode_profiles,
)
