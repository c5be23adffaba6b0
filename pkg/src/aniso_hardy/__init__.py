"""Anisotropic variable-exponent Hardy spaces: atoms, Luxemburg norms and Fourier-side bounds."""

__version__ = "0.1.0"

from .atoms import Atom, AtomReport, make_atom, minimal_s, odd_step_atom, validate_atom  # noqa: E402
from .dilation import (  # noqa: E402
    DilatedBall,
    Dilation,
    EllipsoidNorm,
    QuasiNormEvaluator,
    analyze_dilation,
    build_ellipsoid,
    comparison_constant,
    compute_sigma,
    step_quasinorm,
    verify_containments,
)
from .estimators import AnisotropicQuasiNorm, AtomicSpectrum  # noqa: E402
from .exceptions import *  # noqa: E402,F401,F403
from .fourier import (  # noqa: E402
    FrequencyShells,
    SpectrumSample,
    dilate,
    fourier_transform,
    lemma32_constant,
    lemma33_constant,
    verify_commutation,
)
from .grid import GriddedFunction  # noqa: E402
from .hardy import (  # noqa: E402
    Decomposition,
    MaximalConfig,
    decomposition_quantity,
    default_phi,
    l1_check,
    make_decomposition,
    maximal_phi,
    random_decomposition,
    synthesize_F,
    verify_thm31,
    verify_thm41,
    verify_thm42,
)
from .varexp import (  # noqa: E402
    ExponentFunction,
    check_log_holder,
    constant_exponent,
    log_smooth_exponent,
    luxemburg_norm,
    modular,
    parse_exponent,
    step_exponent,
)
