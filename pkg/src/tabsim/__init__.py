"""Behavioral simulator and trainer for the Trainable Analogue Block (TAB)."""
from .device import (
    MismatchSpec,
    NeuronParams,
    OffsetScheme,
    PhysicalConstants,
    TuningCurve,
    diff_pair_currents,
    neuron_response,
    sample_population,
    tuning_curve,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    TaskSpec,
    bitdepth_sweep,
    heterogeneity_study,
    mismatch_mc,
    run_regression,
)
from .learning import condition_diagnostics, encoding_capacity, nrmse, pseudoinverse, train
from .network import Dataset, InputMap, TabNetwork, build_hidden_matrix, forward
from .splitter import (
    QuantizedWeight,
    QuantizedWeightVector,
    SplitterCode,
    dequantize,
    quantize,
    quantize_vector,
    route_current,
    splitter_fraction,
)

__version__ = "0.1.0"
