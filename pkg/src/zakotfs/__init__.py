"""Link-level simulator for MIMO Zak-OTFS with superimposed spread pilots."""

from .channel import ChannelRealization, VehAProfile, make_test_channel, sample_veh_a
from .dd import (AmbiguitySurface, DDTaps, PeriodicDDSignal, QuasiPeriodicSignal,
                 cross_ambiguity, devectorize, place_data_symbols,
                 twisted_conv_discrete, twisted_conv_periodic, vectorize)
from .detector import (BlockChannelMatrix, DetectionConfig, LASResult,
                       build_block_matrix, detect, las_search, mmse_equalize, quantize)
from .estimator import (EstimatorState, ReadoffRegion, TurboIterationMetrics,
                        TurboResult, cancel_data, cancel_pilot,
                        channel_support_bounds, estimate_readoff, nmse,
                        noise_floor_threshold, residual_threshold, turbo_loop)
from .filters import (GaussianSincFilter, QuadratureConvergenceError, QuadratureSpec,
                      effective_channel_taps, eval_rx_filter, eval_tx_filter)
from .grid import DDGrid
from .pilot import (LatticePoint, PilotSetReport, SpreadPilotConfig,
                    build_spread_pilot, chirp_filter, mod_inverse,
                    point_pilot_periodic, predict_cross_support,
                    predict_self_support, validate_pilot_set)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
