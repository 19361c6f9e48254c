"""Scale-free tests for exponentiality based on X0 + med(X1,X2,X3) =d max(X1,X2,X3)."""

from expotest.vstat import (
    SortedSample,
    StatisticPair,
    statistic_i,
    statistic_k,
    statistics,
)

__version__ = "0.1.0"

__all__ = ["SortedSample", "StatisticPair", "statistic_i", "statistic_k", "statistics"]
