"""Phase retrieval from one-bit coded diffraction patterns.

Recovers a complex signal from pairwise sign comparisons of masked power
spectra via a matrix-free spectral method, with optional alternating-
minimization refinement on raw intensities. Robust to rank-preserving
perturbations of the intensities and, under diffraction-limited acquisition,
agnostic to the point spread function.
"""

from .core import (
    RandomSource,
    dft,
    idft,
    unitary_fftn,
    unitary_ifftn,
    normalize,
    sample_bernoulli_mask,
    sample_complex_gaussian,
)
from .measurement import (
    ExpNoise,
    Identity,
    LowPass,
    MeasurementSet,
    PoissonNoise,
    TanhDistortion,
    apply_lowpass,
    build_measurement_set,
    cutoff_for_srf,
    forward_cdp,
    lowpass_band,
    quantize,
)
from .operators import (
    DenseOperator,
    OneBitOperator,
    SubExpOperator,
    dense_onebit,
    dense_subexp,
    empirical_risk,
    transform_matrix,
)
from .solvers import (
    AMConfig,
    DegenerateOperatorError,
    PowerConfig,
    RecoveryResult,
    SingularStepError,
    alt_min,
    alt_min_iterates,
    err,
    phase_of,
    power_method,
)
from .snr import SnrEstimate, snr_closed_form, snr_monte_carlo
from .bench import (
    ResultRow,
    ResultTable,
    TrialGrid,
    am_error_decay,
    phase_transition,
    read_csv,
    robustness_sweep,
    write_csv,
)
from .container import (
    FormatError,
    load_measurement_set,
    load_result,
    save_measurement_set,
    save_result,
)
from .imaging import (
    ImagePlane,
    dft2,
    idft2,
    load_image,
    psnr,
    recover_channel,
    recover_image,
    save_image,
)

__version__ = "0.1.0"
