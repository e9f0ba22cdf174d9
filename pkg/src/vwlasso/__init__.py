"""Volatility-weighted Lasso forecasting toolkit."""

__version__ = "0.1.0"

from .core import Dataset, FitResult, Standardization, TimeIndex, destandardize_fit, predict, standardize
from .garch import (GarchFit, GarchOptions, GarchParams, PenaltyWeights, garch_fit, garch_loglik,
                    simulate_garch, volatility_weights)
from .penalized import (LambdaPath, SolverConfig, fit_adaptive_lasso, fit_lasso, fit_model, fit_ols,
                        fit_ridge, fit_vw_lasso, fit_weighted_lasso, select_lambda, soft_threshold)
from .simulate import SimConfig, run_monte_carlo, run_table1, simulate_dgp
from .evaluate import SplitSpec, chronological_split, mae, rmse, run_backtest
from .explain import ShapMatrix, importance_ranking, linear_shap
from .io import IngestSpec, load_csv
