"""Disentangled attribution curves for tree ensembles."""

from .baselines import conditional_expectation_curve, curve_mse, pdp_curve
from .dac import (
    DacCurve,
    DacParams,
    FeatureSet,
    Grid,
    LeafSummary,
    default_grid,
    ensemble_dac_curve,
    evaluate_curve,
    leaf_summary,
    tree_dac_curve,
)
from .featlab import (
    FeParams,
    FeResult,
    LogisticModel,
    augment_with_dac,
    fit_logistic,
    logistic_proba,
    run_fe_experiment,
    train_test_split,
)
from .sim import (
    ModelKind,
    Regime,
    SimConfig,
    SimResult,
    covariance_matrix,
    run_sim_experiment,
    sample_truncated_gaussian,
    sim_function,
)
from .trees import (
    BoostingError,
    DataError,
    Dataset,
    DecisionTree,
    Ensemble,
    MaxFeatures,
    ModelFormatError,
    Task,
    TrainParams,
    fit_adaboost_r2,
    fit_random_forest,
    fit_tree,
    gini_importance,
    load_model,
    model_from_json,
    model_to_json,
    predict,
    predict_batch,
    save_model,
)

__version__ = "0.1.0"
