from .design import (
    CovarianceBuilder,
    SeedSpec,
    build_circulant,
    build_sigma2,
    exp_circulant,
    poly_circulant,
    sample_dataset,
    sample_design,
)
from .experiment import ExperimentConfig, ExperimentReport, power_and_fdr, run_experiment
from .verify import (
    VerificationReport,
    verify_circulant_psd,
    verify_concentration,
    verify_fpe_trend,
    verify_minimal_penalty,
    verify_risk_identities,
)

__all__ = (
    "CovarianceBuilder",
    "ExperimentConfig",
    "ExperimentReport",
    "SeedSpec",
    "VerificationReport",
    "build_circulant",
    "build_sigma2",
    "exp_circulant",
    "poly_circulant",
    "power_and_fdr",
    "run_experiment",
    "sample_dataset",
    "sample_design",
    "verify_circulant_psd",
    "verify_concentration",
    "verify_fpe_trend",
    "verify_minimal_penalty",
    "verify_risk_identities",
)
