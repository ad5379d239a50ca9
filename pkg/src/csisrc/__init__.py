"""Complex-valued sparse representation classification for device-free
activity recognition from WiFi channel state information."""

__version__ = "0.1.0"

from .model import (ActivityClass, BandDescriptor, CLASS_ORDER,
                    CoefficientVector, CsiError, CsiVector, DatasetFormat,
                    Dictionary, LabeledSample, Sample, build_dictionary,
                    load_dataset, save_dataset)
from .preprocess import (BandSelection, SmoothingConfig, amplitude,
                         sanitise, sanitised_phase, slice_band, smooth)
from .solver import (BACKEND as SOLVER_BACKEND, SolveResult, SolverConfig,
                     class_residuals, solve_bpdn)
from .classify import (FusionMethod, FusionWeights, InputMode, WindowConfig,
                       build_mode_dictionary, compute_weights, fuse_classify,
                       knn_classify, mode_vector, src_classify)
from .walking import (LogisticModel, WalkingFeatures, extract_features,
                      predict, train)
from .evaluate import (BinaryMetrics, ConfusionMatrix, SweepSpec,
                       aggregate_class_distance, band_sweep, class_distance,
                       evaluate, kfold_split, make_windows)
from .simulate import (RfiConfig, ScenarioConfig, default_rfi_selection,
                       default_taps, generate)
