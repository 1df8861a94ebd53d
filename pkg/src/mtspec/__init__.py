"""Multi-taper spectral estimation for stationary Gaussian processes on lattice domains."""

__version__ = "0.1.0"

from .domain import (
    AcquisitionDomain,
    diameter,
    difference_set,
    digital_perimeter,
    make_disk,
    make_interval,
    make_rectangle,
    random_blob,
)
from .estimator import (
    FrequencyGrid,
    MtEstimate,
    ProcessSample,
    bias_bound,
    corollary_taper_count,
    expected_estimate,
    mse_bound,
    multitaper_estimate,
    quadratic_form_matrix,
    sup_norm_distance,
)
from .process import (
    ConstantDensity,
    CosineDensity,
    SpectralDensity,
    autocovariance,
    build_circulant_model,
    c2_norm,
    density_from_spec,
    partial_fourier_sum,
    sample_on_domain,
    sample_process,
)
from .slepian import TaperConfig, TaperSet, compute_tapers, concentration_matrix, default_taper_count
