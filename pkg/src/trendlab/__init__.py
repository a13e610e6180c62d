"""trendlab: simulate diffusive trends, trade them, and check the closed forms."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    FitError,
    MatrixError,
    NumericalError,
    ParameterError,
    SpectrumError,
    TrendLabError,
    TruncationError,
)
from .panel import ReturnsPanel, ingest_csv, panel_from_returns
from .process import ProcessParams, SimulatedPath, simulate, uniform_correlation
from .signals import EmaState, IndicatorSpec
from .portfolio import PortfolioConfig, PortfolioSeries, run_backtest
from .theory import TheoryParams

__all__ = [
    "DataError",
    "EmaState",
    "FitError",
    "IndicatorSpec",
    "MatrixError",
    "NumericalError",
    "ParameterError",
    "PortfolioConfig",
    "PortfolioSeries",
    "ProcessParams",
    "ReturnsPanel",
    "SimulatedPath",
    "SpectrumError",
    "TheoryParams",
    "TrendLabError",
    "TruncationError",
    "ingest_csv",
    "panel_from_returns",
    "run_backtest",
    "simulate",
    "uniform_correlation",
]
