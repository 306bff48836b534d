"""Bell correlations for a local hidden-variable model in weakly curved spacetime."""

__version__ = "0.1.0"

from .bell import BellResult, CHSHSettings, bell_observable, chsh, scan_max
from .correlation import (
    AnalyzerSetting,
    CorrelationEstimate,
    CorrelationModel,
    correlation_analytic,
    correlation_mc,
    sign_outcome,
)
from .errors import BellSimError, ConfigError, DomainError, InputError, InvariantError
from .geometry import (
    FourVector,
    Metric,
    PhysicalConstants,
    SpacetimePoint,
    cos_angle,
    inner_product,
    minkowski_metric,
    perturbed_metric,
)
from .gw_background import (
    BackgroundConfig,
    GWBackground,
    GWMode,
    riemann_R1010,
    sample_background,
    strain_at,
    validate_mode,
)
from .oscillator import (
    IntegratorConfig,
    OscillatorState,
    Trajectory,
    angular_frequency,
    evolve_closed_form,
    integrate,
    integrate_in_background,
    phase_correlation,
)
