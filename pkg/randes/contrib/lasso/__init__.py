from .lasso import (
    AdaptiveLassoFitter,
    LassoConfig,
    LassoFitter,
    adaptive_lasso,
    adaptive_lasso_cv,
    default_lambda_grid,
    lasso,
    lasso_cv,
    loo_cv,
)

__all__ = (
    "AdaptiveLassoFitter",
    "LassoConfig",
    "LassoFitter",
    "adaptive_lasso",
    "adaptive_lasso_cv",
    "default_lambda_grid",
    "lasso",
    "lasso_cv",
    "loo_cv",
)
