"""Detection and quantification of pathological regularization regimes.

A regularization value c is *pathological* for a dataset and model when the
model's trend indicator at c has the opposite sign to its no-regularization
limit.  This package provides the exact algebraic criterion for two-feature
ridge regression, numeric scanners for ridge with more features and for
penalized logistic regression, samplers for Monte-Carlo studies, and a CLI.
"""

from ._version import __version__
from .experiments import (
    DEFAULT_SEED,
    CvDemoReport,
    ExperimentSpec,
    GammaRow,
    LogisticRatioRow,
    RatioEstimate,
    RidgeRatioRow,
    run_avg_gamma_experiment,
    run_cv_demo,
    run_experiment,
    run_logistic_ratio_experiment,
    run_ridge_ratio_experiment,
    wilson_interval,
    write_experiment_outputs,
)
from .errors import (
    DegenerateDataset,
    DegenerateDesign,
    EmptyTable,
    FoldDegenerate,
    GridTooCoarse,
    IndexOutOfRange,
    InsufficientPathologicalDraws,
    NegativeCount,
    ParseError,
    PathregError,
    RejectionBudgetExceeded,
    WrongShape,
)
from .fixtures import fixture_path, load_fixture
from .logistic import (
    CvResult,
    LogisticModel,
    RegGrid,
    SampleWeights,
    ScanResult,
    fit_logistic,
    fit_logistic_cv,
    scan_pathological_logistic,
    trend_indicator_logistic,
)
from .ridge import (
    Interval,
    Regime,
    RidgeEstimate,
    RidgeSummary,
    TrendCurve,
    fit,
    mls_beta,
    pathological_regime_exact,
    pathological_regime_numeric,
    trend_curve,
    trend_indicator,
    true_trend,
)
from .sampling import (
    PRNG_VERSION,
    SamplerConfig,
    sample_bernoulli_dataset,
    sample_dirichlet_table,
    sample_simpson_datasets,
    sample_uniform_table,
)
from .tables import (
    ContingencyTable222,
    Dataset,
    ProbabilityTable,
    SimpsonVerdict,
    decode,
    encode,
    is_simpson,
    read_table_csv,
    write_table_csv,
)


__all__ = [
    "ContingencyTable222",
    "CvDemoReport",
    "CvResult",
    "DEFAULT_SEED",
    "Dataset",
    "ExperimentSpec",
    "GammaRow",
    "LogisticRatioRow",
    "RatioEstimate",
    "RidgeRatioRow",
    "run_avg_gamma_experiment",
    "run_cv_demo",
    "run_experiment",
    "run_logistic_ratio_experiment",
    "run_ridge_ratio_experiment",
    "wilson_interval",
    "write_experiment_outputs",
    "DegenerateDataset",
    "DegenerateDesign",
    "EmptyTable",
    "FoldDegenerate",
    "GridTooCoarse",
    "IndexOutOfRange",
    "InsufficientPathologicalDraws",
    "Interval",
    "LogisticModel",
    "NegativeCount",
    "PRNG_VERSION",
    "ParseError",
    "PathregError",
    "ProbabilityTable",
    "RegGrid",
    "Regime",
    "RejectionBudgetExceeded",
    "RidgeEstimate",
    "RidgeSummary",
    "SampleWeights",
    "SamplerConfig",
    "ScanResult",
    "SimpsonVerdict",
    "TrendCurve",
    "WrongShape",
    "decode",
    "encode",
    "fit",
    "fit_logistic",
    "fit_logistic_cv",
    "fixture_path",
    "is_simpson",
    "load_fixture",
    "mls_beta",
    "pathological_regime_exact",
    "pathological_regime_numeric",
    "read_table_csv",
    "sample_bernoulli_dataset",
    "sample_dirichlet_table",
    "sample_simpson_datasets",
    "sample_uniform_table",
    "scan_pathological_logistic",
    "trend_curve",
    "trend_indicator",
    "trend_indicator_logistic",
    "true_trend",
    "write_table_csv",
]
