from .compile import UnassignedSymbolError, compile_exprs, evaluate, evaluate_array, evaluate_many
from .nodes import (
    FUNCTIONS,
    ONE,
    ZERO,
    Expr,
    Func,
    Num,
    Pow,
    Sym,
    add,
    as_expr,
    call,
    count_nodes,
    cos,
    div,
    exp,
    ln,
    mul,
    neg,
    num,
    power,
    sin,
    sqrt,
    sub,
    sum_exprs,
    sym,
    to_string,
)
from .parser import ExprError, ExprSyntaxError, UndeclaredSymbolError, parse, parse_free
from .symbols import TIME, SymbolTable, copy_name, split_copy
from .zerotest import DEFAULT_BOX, ZeroTestConfig, ZeroVerdict, is_zero_probabilistic


def differentiate(e: Expr, var: str) -> Expr:
    return e.diff(var)


__all__ = [name for name in dir() if not name.startswith("_")]
