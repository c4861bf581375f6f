"""Sub-dimensional Mardia measures of skewness and kurtosis and the max tests built on them."""

__version__ = "0.1.0"

from .core import (
    DegenerateDataError,
    InsufficientSampleError,
    InvalidDimensionError,
    InvalidSubsetError,
    SubsetCatalog,
    enumerate_subsets,
    moments,
    subset_index,
    whiten,
)
from .families import (
    CompositeModel,
    ExponentialPower,
    Gaussian,
    ParameterError,
    SkewNormal,
    SkewT,
    StudentT,
    equicorrelation,
)
from .maxtests import (
    DetectionReport,
    TestReport,
    detect_subdimension,
    mardia_kurtosis_test,
    mardia_skewness_test,
    max_k_q_test,
    max_k_test,
    max_s_q_test,
    max_s_test,
    max_sk_q_test,
    max_sk_test,
    run_panel,
)
from .measures import MeasureReport, b1_sample, b2_sample, max_statistics, measure_report
from .simlab import ExperimentConfig, ExperimentResult, detection_study, estimate_power, estimate_size, sample
from .theory import TheoreticalMeasures, subdimensional_theory
