"""Canonical pretty-printer for kernel ASTs.

The output is deterministic: two ASTs that compare equal print identically,
which makes the printed text usable as a dedup key.  Parentheses are emitted
only where precedence requires them, hex literals stay hex, and comments are
gone (the parser never keeps them).
"""

from __future__ import annotations

from .nodes import (
    AddrOf,
    Assign,
    Binary,
    Block,
    Call,
    Cast,
    Decl,
    Expr,
    FloatLit,
    For,
    Ident,
    If,
    Index,
    IntLit,
    KernelProgram,
    LValue,
    SizeOf,
    Stmt,
    Ternary,
    Unary,
)

_BIN_LEVEL = {
    "||": 2, "&&": 3, "|": 4, "^": 5, "&": 6,
    "==": 7, "!=": 7,
    "<": 8, "<=": 8, ">": 8, ">=": 8,
    "<<": 9, ">>": 9,
    "+": 10, "-": 10,
    "*": 11, "/": 11, "%": 11,
}

_INDENT = "  "


def _level(e: Expr) -> int:
    if isinstance(e, Ternary):
        return 1
    if isinstance(e, Binary):
        return _BIN_LEVEL[e.op]
    if isinstance(e, (Unary, Cast, AddrOf)):
        return 12
    if isinstance(e, Index):
        return 13
    return 14


def _expr(e: Expr, min_level: int = 0) -> str:
    if isinstance(e, IntLit):
        s = hex(e.value) if e.hex else str(e.value)
    elif isinstance(e, FloatLit):
        s = repr(e.value)
    elif isinstance(e, Ident):
        s = e.name
    elif isinstance(e, SizeOf):
        s = f"sizeof({e.type})"
    elif isinstance(e, Index):
        s = f"{_expr(e.base, 13)}[{_expr(e.index)}]"
    elif isinstance(e, AddrOf):
        s = f"&{_expr(e.target, 13)}"
    elif isinstance(e, Unary):
        inner = _expr(e.operand, 12)
        if e.op == "-" and inner.startswith("-"):
            inner = f"({inner})"
        s = f"{e.op}{inner}"
    elif isinstance(e, Cast):
        s = f"({e.type}){_expr(e.operand, 12)}"
    elif isinstance(e, Binary):
        lvl = _BIN_LEVEL[e.op]
        s = f"{_expr(e.left, lvl)} {e.op} {_expr(e.right, lvl + 1)}"
    elif isinstance(e, Ternary):
        s = f"{_expr(e.cond, 2)} ? {_expr(e.then)} : {_expr(e.other, 1)}"
    else:  # pragma: no cover - exhaustive over node types
        raise TypeError(f"unprintable expression node {type(e).__name__}")
    if _level(e) < min_level:
        return f"({s})"
    return s


def _lvalue(lv: LValue) -> str:
    return lv.name + "".join(f"[{_expr(i)}]" for i in lv.indices)


def _decl(d: Decl) -> str:
    parts = []
    if d.static:
        parts.append("static")
    if d.const:
        parts.append("const")
    parts.append(d.type)
    name = d.name + "".join(f"[{n}]" for n in d.shape or ())
    parts.append(name)
    head = " ".join(parts)
    for attr in d.attrs:
        head += f" {attr}"
    if d.init is None:
        return f"{head};"
    if isinstance(d.init, list):
        inner = ", ".join(_expr(v) for v in d.init)
        return f"{head} = {{ {inner} }};"
    return f"{head} = {_expr(d.init)};"


def _assign(a: Assign) -> str:
    return f"{_lvalue(a.target)} {a.op} {_expr(a.value)};"


def _for_step(f: For) -> str:
    var = f.step.target.name
    if f.step_syntax == "++":
        return f"{var}++"
    if f.step_syntax == "--":
        return f"{var}--"
    value = f.step.value
    if f.step_syntax == "-=":
        assert isinstance(value, Unary) and value.op == "-"
        return f"{var} -= {_expr(value.operand)}"
    return f"{var} += {_expr(value)}"


def _for_init(f: For) -> str:
    init = f.init
    if isinstance(init, Decl):
        return f"{init.type} {init.name} = {_expr(init.init)}"
    return f"{_lvalue(init.target)} = {_expr(init.value)}"


def _stmts(body: list[Stmt], out: list[str], depth: int) -> None:
    pad = _INDENT * depth
    for s in body:
        if isinstance(s, Decl):
            out.append(pad + _decl(s))
        elif isinstance(s, Assign):
            out.append(pad + _assign(s))
        elif isinstance(s, Call):
            args = ", ".join(_expr(a) for a in s.args)
            out.append(f"{pad}{s.name}({args});")
        elif isinstance(s, For):
            out.append(f"{pad}for ({_for_init(s)}; {_expr(s.cond)}; {_for_step(s)}) {{")
            _stmts(s.body, out, depth + 1)
            out.append(pad + "}")
        elif isinstance(s, If):
            _if_chain(s, out, depth)
        elif isinstance(s, Block):
            out.append(pad + "{")
            _stmts(s.body, out, depth + 1)
            out.append(pad + "}")
        else:  # pragma: no cover - exhaustive over node types
            raise TypeError(f"unprintable statement node {type(s).__name__}")


def _if_chain(s: If, out: list[str], depth: int) -> None:
    pad = _INDENT * depth
    out.append(f"{pad}if ({_expr(s.cond)}) {{")
    _stmts(s.then, out, depth + 1)
    node = s
    while node.other is not None:
        if len(node.other) == 1 and isinstance(node.other[0], If):
            node = node.other[0]
            out.append(f"{pad}}} else if ({_expr(node.cond)}) {{")
            _stmts(node.then, out, depth + 1)
        else:
            out.append(pad + "} else {")
            _stmts(node.other, out, depth + 1)
            break
    out.append(pad + "}")


def print_kernel(prog: KernelProgram) -> str:
    """Render the AST back to canonical source text (trailing newline)."""
    params = ", ".join(
        p.element_type + " " + p.name + "".join(f"[{n}]" for n in p.shape)
        for p in prog.params
    )
    out = [f"void {prog.name}({params}) {{"]
    _stmts(prog.body, out, 1)
    out.append("}")
    return "\n".join(out) + "\n"
