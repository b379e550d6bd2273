"""wakeform: OFDM-orthogonal on-off-keyed wake-up sequences.

Design low-leakage frequency-domain sequences whose inverse-DFT envelope
carries OOK inside an OFDM symbol, and simulate the resulting link.
"""

from .waveform import (
    ConfigurationError,
    InvalidSequenceError,
    OokSymbolPair,
    SequenceFormatError,
    Sequence,
    ShapeTemplate,
    UndersamplingError,
    WaveformConfig,
    derive_bit1,
    load_table1,
    make_shape,
    onoff_ratio_db,
    papr_db,
    prepend_cp,
    read_sequence,
    rmse_cost,
    synthesize,
    tone_power_profile,
    wifi_config,
    write_sequence,
)
from .scan import ScanParams, ScanTrace, scan_run
from .solver import SubproblemB, available_backends, default_backend, solve
from .channel import (
    ChannelParams,
    ChannelRealization,
    add_awgn,
    apply_channel,
    draw_channel,
)
from .receiver import (
    BiquadState,
    WurConfig,
    design_butterworth2,
    detect_bit,
    filter_samples,
)
from .ofdm import (
    MuxLayout,
    QamSymbolBlock,
    mask_based_ook,
    mux_transmit,
    ofdm_receive,
    qpsk_reference_ber,
    qpsk_theory_ber,
    single_tone_ook,
    tone_power_dbc,
)
from .harness import (
    ExperimentConfig,
    LinkReport,
    load_experiment_config,
    run_ber,
    run_metrics,
    run_optimize,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "InvalidSequenceError",
    "OokSymbolPair",
    "SequenceFormatError",
    "Sequence",
    "ShapeTemplate",
    "UndersamplingError",
    "WaveformConfig",
    "derive_bit1",
    "load_table1",
    "make_shape",
    "onoff_ratio_db",
    "papr_db",
    "prepend_cp",
    "read_sequence",
    "rmse_cost",
    "synthesize",
    "tone_power_profile",
    "wifi_config",
    "write_sequence",
    "ScanParams",
    "ScanTrace",
    "scan_run",
    "SubproblemB",
    "available_backends",
    "default_backend",
    "solve",
    "ChannelParams",
    "ChannelRealization",
    "add_awgn",
    "apply_channel",
    "draw_channel",
    "BiquadState",
    "WurConfig",
    "design_butterworth2",
    "detect_bit",
    "filter_samples",
    "MuxLayout",
    "QamSymbolBlock",
    "mask_based_ook",
    "mux_transmit",
    "ofdm_receive",
    "qpsk_reference_ber",
    "qpsk_theory_ber",
    "single_tone_ook",
    "tone_power_dbc",
    "ExperimentConfig",
    "LinkReport",
    "load_experiment_config",
    "run_ber",
    "run_metrics",
    "run_optimize",
    "__version__",
]
