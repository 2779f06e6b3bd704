"""Channel leakage of Gaussian channels and optimal privacy masks for streaming data."""

from .allocation import (
    Allocation,
    obfuscating_allocation,
    reverse_water_filling,
    solve_water_level,
    water_filling,
)
from .leakage import (
    FadingModel,
    LeakageReport,
    capacity_colored,
    capacity_fading,
    capacity_white,
    compare_leakage_capacity,
    leakage_colored,
    leakage_fading,
    leakage_fading_output,
    leakage_output_constrained,
    leakage_parallel,
    leakage_white,
)
from .mask import (
    MaskDesign,
    conditional_entropy_rate_gain,
    design_fading,
    design_finite,
    design_stationary,
    design_stationary_output_power,
    dual_fading,
    dual_finite,
    dual_stationary_distortion,
    dual_stationary_power,
)
from .spectral import (
    ArmaModel,
    CovarianceMatrix,
    EigenSpectrum,
    FrequencyGrid,
    SpectralDensity,
    arma_spectrum,
    eig_sym,
    spectrum_to_autocov,
    toeplitz_from_autocov,
)

__version__ = "0.1.0"
