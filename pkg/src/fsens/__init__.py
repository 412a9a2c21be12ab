"""Partial identification and Wald inference for treatment effects when
unmeasured confounding is bounded on average by an f-divergence budget."""

__version__ = "0.1.0"

from .divergence import DivergenceSpec, ValidationReport, gamma_to_rho, make_spec, validate_spec
from .dual import (
    DiscreteInstance,
    DualPoint,
    NumericalDivergenceError,
    OptimizerConfig,
    dual_loss,
    dual_loss_gradient,
    primal_oracle_discrete,
    solve_pointwise_dual,
)
from .effects import ConfidenceInterval, EffectBound, atc_bounds, att_ate_bounds, confidence_interval, normal_quantile
from .estimator import (
    BoundEstimate,
    Dataset,
    EstimatorConfig,
    FoldPlan,
    estimate_bound,
    oracle_influence,
    split_folds,
    variance_estimate,
)
from .nuisance import NuisanceFit, RegressorSpec, fit_h, fit_propensity, fit_regressor, shift_ratio
from .sensitivity import InversionResult, SensitivityCurve, compute_curve, invert, monotonize
from .sieve import SieveBasis, SieveConfig, SieveFunctionPair, build_basis, fit_erm, select_Jn
from .simulation import (
    DgpConfig,
    GroundTruth,
    TruthKL,
    coverage_experiment,
    generate,
    generate_full,
    ground_truth_bounds,
    kl_truth,
    logistic_confounding_budget,
    true_odds_ratio,
)
