"""Leading-order tail and density asymptotics for Gaussian and polar chaos."""

__version__ = "0.1.0"

from .function import HomogeneousFn, NotC2Error  # noqa: E402
from .maximize import MaximizerSet, NoPositiveMaximumError, find_maximizers  # noqa: E402
from .asymptotics import (  # noqa: E402
    AsymptoticResult,
    ChartRequiredError,
    DegenerateHessianError,
    analyze,
    density_leading,
    tail_leading,
)

__all__ = [
    "__version__",
    "HomogeneousFn",
    "NotC2Error",
    "MaximizerSet",
    "NoPositiveMaximumError",
    "find_maximizers",
    "AsymptoticResult",
    "ChartRequiredError",
    "DegenerateHessianError",
    "analyze",
    "tail_leading",
    "density_leading",
]
