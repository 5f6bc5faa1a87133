from .forest import FeatureImportance, ForestModel, rf_fit, rf_importance
from .gini import GiniResult, gini_by_rank
from .ols import DesignMatrix, RegressionFit, minmax_normalize, ols_fit, with_fixed_effects

__all__ = ["DesignMatrix", "FeatureImportance", "ForestModel", "GiniResult", "RegressionFit", "gini_by_rank",
           "minmax_normalize", "ols_fit", "rf_fit", "rf_importance", "with_fixed_effects"]
