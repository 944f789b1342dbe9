"""Nonlinear time-series toolkit: attractor reconstruction, invariant
estimation, reduced-model identification, neighborhood forecasting and
contour symmetry analysis."""

from .contours import (ContourDescriptors, SymmetryReport, closeness, descriptors,
                       dft, idft, load_contour, load_spectrum, normalize,
                       plane_rotation, save_contour, save_spectrum, smooth,
                       symmetry_between)
from .dimensions import (CorrelationCurve, DimensionEstimate, correlation_dimension,
                         correlation_integral, data_diameter, default_epsilons,
                         generalized_curve, generalized_dimension, kaplan_yorke)
from .embedding import (DelayEmbedding, MIProfile, NeighborIndex, default_bins,
                        embed, embedding_to_series, knn_query,
                        mutual_information_profile, select_delay)
from .errors import (ColdStartWarning, ConfigError, DegenerateDataError,
                     DivergenceError, FormatError, InsufficientDataError,
                     NoInteriorMinimumWarning, NoStableRegionWarning,
                     PhasekitError, ScalingRegionError)
from .fitting import SlopeFit, fit_scaling_region, fit_slope, scaling_window
from .identify import (BasisTerm, ProjectionRecord, ReducedModel, TimeBasis,
                       build_state_sequence, estimate_x0, fit_model, fit_percent,
                       moving_average, parse_basis, parse_term, simulate)
from .lyapunov import (DivergenceCurve, LyapunovSpectrum, RateEstimate,
                       SpectrumReport, WolfResult, benettin_data, benettin_exact,
                       divergence_rate, kantz_curve, rosenstein_curve,
                       spectrum_checks, wolf_lambda1)
from .predict import (ErrorHistory, FeatureTransform, LocalStability,
                      NeighborhoodTableau, PredictorModel, SelectionResult,
                      StepwiseReport, build_tableau, composite_J,
                      confidence_value, e_psi, fit_predictor, layout_mask,
                      local_predict, local_stability, preprocess_features,
                      select_prediction, step_sign_feature, stepwise_reconstruct,
                      successor_index, value_feature)
from .regressors import (LinearRegressor, MeanRegressor, SigmoidNetRegressor,
                         TrainConfig, train_regressor)
from .series import (StandardizeRecord, TimeSeries, detrend, load_csv,
                     read_numeric_table, save_csv, standardize)
from .systems import (ReferenceSystem, catalog, check_jacobian, integrate,
                      iterate, rk4_step, sample)

__version__ = "0.1.0"

__all__ = [
    "BasisTerm", "ColdStartWarning", "ConfigError", "ContourDescriptors",
    "CorrelationCurve", "DegenerateDataError", "DelayEmbedding",
    "DimensionEstimate", "DivergenceCurve", "DivergenceError", "ErrorHistory",
    "FeatureTransform", "FormatError", "InsufficientDataError",
    "LinearRegressor", "LocalStability", "LyapunovSpectrum", "MIProfile",
    "MeanRegressor", "NeighborIndex", "NeighborhoodTableau",
    "NoInteriorMinimumWarning", "NoStableRegionWarning", "PhasekitError",
    "PredictorModel", "ProjectionRecord", "RateEstimate", "ReducedModel",
    "ReferenceSystem", "ScalingRegionError", "SelectionResult",
    "SigmoidNetRegressor", "SlopeFit", "SpectrumReport", "StandardizeRecord",
    "StepwiseReport", "SymmetryReport", "TimeBasis", "TimeSeries",
    "TrainConfig", "WolfResult", "benettin_data", "benettin_exact",
    "build_state_sequence", "build_tableau", "catalog", "check_jacobian",
    "closeness", "composite_J", "confidence_value", "correlation_dimension",
    "correlation_integral", "data_diameter", "default_bins",
    "default_epsilons", "descriptors", "detrend", "dft", "divergence_rate",
    "e_psi", "embed", "embedding_to_series", "estimate_x0", "fit_model",
    "fit_percent",
    "fit_predictor", "fit_scaling_region", "fit_slope", "generalized_curve",
    "generalized_dimension", "idft", "integrate", "iterate", "kantz_curve",
    "kaplan_yorke", "knn_query", "layout_mask", "load_contour", "load_csv",
    "load_spectrum", "local_predict", "local_stability", "moving_average",
    "mutual_information_profile", "normalize", "parse_basis", "parse_term",
    "plane_rotation", "preprocess_features", "read_numeric_table",
    "rk4_step", "rosenstein_curve", "sample", "save_contour", "save_csv",
    "save_spectrum", "scaling_window", "select_delay", "select_prediction",
    "simulate", "smooth", "spectrum_checks", "standardize",
    "step_sign_feature", "stepwise_reconstruct", "successor_index",
    "symmetry_between", "train_regressor", "value_feature", "wolf_lambda1",
]
