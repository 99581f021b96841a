"""Linear regression for histogram-valued data under the l2 Wasserstein metric."""
from .errors import (
    AllResamplesFailed,
    DegenerateDispersion,
    DimensionMismatch,
    DomainError,
    EmptyColumn,
    HistRegError,
    InvalidHistogram,
    KindMismatch,
    MaxIterations,
    ParseError,
    SingularDesign,
    ValidationError,
)
from .histcore import Bin, Histogram, PiecewiseLinear, QuantileFunction, build_quantile_function, qf_center, qf_eval, qf_moments, qf_symmetric
from .wmetric import barycenter, correlation, inner_product, rho, variable_summary, wasserstein, wasserstein2, wasserstein_decompose
from .solver import gram, nnls, ols
from .models import (
    ModelFit,
    ModelKind,
    SymbolicTable,
    fit_billard_diday,
    fit_dias_brito,
    fit_irpino_verde,
    fit_model,
    monte_carlo_distribution,
    predict,
)
from .gof import GofReport, goodness, ssy_decompose
from .resample import BootstrapSummary, bootstrap
from .tableio import FitDocument, export_curves, load_blood, parse_table, serialize_table

__version__ = "0.1.0"

__all__ = [
    "AllResamplesFailed",
    "DegenerateDispersion",
    "DimensionMismatch",
    "DomainError",
    "EmptyColumn",
    "HistRegError",
    "InvalidHistogram",
    "KindMismatch",
    "MaxIterations",
    "ParseError",
    "SingularDesign",
    "ValidationError",
    "Bin",
    "Histogram",
    "PiecewiseLinear",
    "QuantileFunction",
    "build_quantile_function",
    "qf_center",
    "qf_eval",
    "qf_moments",
    "qf_symmetric",
    "barycenter",
    "correlation",
    "inner_product",
    "rho",
    "variable_summary",
    "wasserstein",
    "wasserstein2",
    "wasserstein_decompose",
    "gram",
    "nnls",
    "ols",
    "ModelFit",
    "ModelKind",
    "SymbolicTable",
    "fit_billard_diday",
    "fit_dias_brito",
    "fit_irpino_verde",
    "fit_model",
    "monte_carlo_distribution",
    "predict",
    "GofReport",
    "goodness",
    "ssy_decompose",
    "BootstrapSummary",
    "bootstrap",
    "FitDocument",
    "export_curves",
    "load_blood",
    "parse_table",
    "serialize_table",
    "__version__",
]
