from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .jet import DomainError, DualTower
from .parser import (
    Abs, Add, Const, Div, Expr, ExprError, ExprSyntaxError, Func, Mul, Neg, Pow, Sub,
    UnknownIdentifierError, Var, VariableIndexError, eval_jet, parse, parse_chart_component,
    to_source,
)


@dataclass(frozen=True)
class HomogeneityReport:
    passed: bool
    alpha: float
    trials: int
    max_violation: float
    worst_point: tuple = field(default=())

    def __bool__(self):
        return self.passed


def check_homogeneity(e, alpha: float, trials: int = 100, seed: int = 0) -> HomogeneityReport:
    """Check ``g(x t) == x**alpha g(t)`` on random pairs ``x in (0.1, 10)``, ``|t| = 1``.

    ``e`` may be an :class:`Expr` or anything with a ``batch`` method.  The
    violation reported is normalised by ``1 + |x**alpha g(t)|``.
    """
    if alpha <= 0 or trials < 1:
        raise ValueError("need alpha > 0 and trials >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    t = rng.standard_normal((trials, e.dim))
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    x = rng.uniform(0.1, 10.0, trials)
    with np.errstate(all="ignore"):
        lhs = e.batch(x[:, None] * t)
        rhs = x**alpha * e.batch(t)
        viol = np.abs(lhs - rhs) / (1.0 + np.abs(rhs))
    viol = np.where(np.isfinite(viol), viol, np.inf)
    worst = int(np.argmax(viol))
    return HomogeneityReport(
        passed=bool(np.all(viol <= 1e-9)),
        alpha=float(alpha),
        trials=trials,
        max_violation=float(viol[worst]),
        worst_point=tuple(float(c) for c in x[worst] * t[worst]),
    )


__all__ = [
    "Abs", "Add", "Const", "Div", "DomainError", "DualTower", "Expr", "ExprError",
    "ExprSyntaxError", "Func", "HomogeneityReport", "Mul", "Neg", "Pow", "Sub",
    "UnknownIdentifierError", "Var", "VariableIndexError", "check_homogeneity", "eval_jet",
    "parse", "parse_chart_component", "to_source",
]
