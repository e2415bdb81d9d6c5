"""AST node definitions for the accelerator-kernel dialect.

All nodes compare structurally (dataclass equality); source positions are
carried for diagnostics but excluded from comparison so that
parse(print(ast)) == ast holds for canonically printed programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field


def _pos():
    return field(default=0, compare=False, repr=False)


# --------------------------------------------------------------------------


@dataclass
class Node:
    pass


@dataclass
class Expr(Node):
    pass


@dataclass
class IntLit(Expr):
    value: int
    hex: bool = False
    line: int = _pos()
    col: int = _pos()


@dataclass
class FloatLit(Expr):
    """Floating literal; appears in the corpus only as a scale argument."""

    value: float
    line: int = _pos()
    col: int = _pos()


@dataclass
class Ident(Expr):
    name: str
    line: int = _pos()
    col: int = _pos()


@dataclass
class Index(Expr):
    """base[index]; nests left for multi-dimensional access."""

    base: Expr
    index: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class AddrOf(Expr):
    """&arr[i]...[j] — address of an array element."""

    target: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class Unary(Expr):
    op: str  # - ~ ! +
    operand: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class Ternary(Expr):
    cond: Expr
    then: Expr
    other: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class Cast(Expr):
    type: str
    operand: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class SizeOf(Expr):
    type: str
    line: int = _pos()
    col: int = _pos()


# --------------------------------------------------------------------------


@dataclass
class Stmt(Node):
    pass


@dataclass
class Decl(Stmt):
    """Local declaration: scalar or fixed-shape array.

    `attrs` carries accepted-and-ignored alignment attributes such as
    row_align_acc(1).  `init` is an Expr for scalars, a list of Expr for
    brace initializers, or None.
    """

    type: str
    name: str
    shape: tuple[int, ...] | None = None
    init: Expr | list[Expr] | None = None
    static: bool = False
    const: bool = False
    attrs: tuple[str, ...] = ()
    line: int = _pos()
    col: int = _pos()


@dataclass
class LValue(Node):
    name: str
    indices: list[Expr] = field(default_factory=list)
    line: int = _pos()
    col: int = _pos()


@dataclass
class Assign(Stmt):
    target: LValue
    op: str  # '=' or '+='
    value: Expr
    line: int = _pos()
    col: int = _pos()


@dataclass
class Call(Stmt):
    name: str
    args: list[Expr] = field(default_factory=list)
    line: int = _pos()
    col: int = _pos()


@dataclass
class For(Stmt):
    """Single-induction-variable counted loop.

    init is either a Decl (``for (int i = 0; ...)``) or an Assign;
    step is an Assign normalized from ++/--/+=/-= forms with
    step_syntax remembering the surface form for printing.
    """

    init: Decl | Assign
    cond: Expr
    step: Assign
    step_syntax: str = "+="  # '++', '--', '+=', '-='
    body: list[Stmt] = field(default_factory=list)
    line: int = _pos()
    col: int = _pos()


@dataclass
class If(Stmt):
    cond: Expr
    then: list[Stmt] = field(default_factory=list)
    other: list[Stmt] | None = None
    line: int = _pos()
    col: int = _pos()


@dataclass
class Block(Stmt):
    body: list[Stmt] = field(default_factory=list)
    line: int = _pos()
    col: int = _pos()


# --------------------------------------------------------------------------


@dataclass
class ArrayParam(Node):
    name: str
    element_type: str  # declared type name, e.g. int8_t / float / elem_t
    shape: tuple[int, ...] = ()
    line: int = _pos()
    col: int = _pos()


@dataclass
class KernelProgram(Node):
    name: str
    params: list[ArrayParam] = field(default_factory=list)
    body: list[Stmt] = field(default_factory=list)


@dataclass
class Diagnostic:
    """A parse/validation finding with a stable code and source span."""

    severity: str  # 'error' | 'warning'
    line: int
    col: int
    message: str
    code: str

    def __str__(self) -> str:
        return f"{self.severity}:{self.line}:{self.col}: {self.message} [{self.code}]"


class KernelSyntaxError(Exception):
    """Raised internally by the parser; converted to Diagnostics at the API."""

    def __init__(self, message: str, line: int, col: int, code: str = "syntax"):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col
        self.code = code


# Types that may appear in declarations, parameters, casts and sizeof.
SCALAR_TYPES = frozenset(
    {
        "int8_t",
        "int32_t",
        "float",
        "elem_t",
        "acc_t",
        "int",
        "int_fast32_t",
        "uint32_t",
    }
)

# Builtin value names usable in expressions.
BUILTIN_CONSTANTS = {
    "WEIGHT_STATIONARY": 1,
    "OUTPUT_STATIONARY": 2,
    "NO_ACTIVATION": 0,
    "RELU": 1,
    "LAYERNORM": 2,
    "IGELU": 3,
    "SOFTMAX": 4,
    "true": 1,
    "false": 0,
    "NULL": 0,
}
