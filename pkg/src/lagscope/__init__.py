"""Bayesian lag estimation between time series and block-structure estimation.

The event-mode and Gaussian-mode lag posteriors both reduce to an exponential
of a scaled circular cross-correlation; see :mod:`lagscope.lag_tte` and
:mod:`lagscope.lag_gauss`. :mod:`lagscope.blocks` fits piecewise-constant
models to measurements that average the signal over a weight function.
"""

__version__ = "0.1.0"

from .blocks import (
    BlockModel,
    ChangepointSearch,
    DesignProducts,
    HeightFit,
    compare_n_blocks,
    design_products,
    fit_heights,
    predict,
    search_changepoints,
    select_n_blocks,
    weight_block_product,
)
from .errors import (
    LagscopeError,
    NumericalConsistencyError,
    ValidationError,
)
from .lag_gauss import (
    gauss_log_posterior_constant,
    gauss_log_posterior_general,
    gauss_posterior_surface,
)
from .lag_tte import (
    GCoefficients,
    TtePriorConfig,
    g_coefficients,
    log_posterior_coeffs,
    marginalize_background,
    phi,
    tte_posterior_surface,
)
from .posterior import LagEstimates, PosteriorSurface, lag_estimates
from .series import (
    EventSeries,
    IndicatorVector,
    SampledSeries,
    WeightedDatum,
    WeightFunction,
    load_events,
    load_sampled,
    load_weighted,
    to_indicator,
)
from .synth import GenConfig, SignalSpec, gen_blocks_data, gen_gauss, gen_tte, synth_from_spec
from .xcorr import CcfVector, CoincidenceCounts, ccf_direct, ccf_fft, coincidence_counts
