"""Variable-order fractional calculus of variations."""

from ._core import (
    DomainError,
    Error,
    FractionalFn,
    FuncApprox,
    InvalidArgument,
    NonConvergence,
    NonFiniteValue,
    NumericalError,
    OperatorValue,
    OverflowError,
    PiecewiseApprox,
    QuadratureBudgetExceeded,
    VarOrder,
    beta,
    check_problem,
    combined_caputo,
    combined_rl,
    dual_operator,
    exact_caputo_power,
    gamma,
    ibp_check,
    left_caputo,
    left_rl_derivative,
    left_rl_integral,
    log_gamma,
    rgamma,
    right_caputo,
    right_rl_derivative,
    right_rl_integral,
    run_cli,
    table1_rows,
)

__all__ = [name for name in dir() if not name.startswith("_")]
