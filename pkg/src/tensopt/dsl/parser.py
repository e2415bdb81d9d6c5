"""Recursive-descent parser for the accelerator-kernel dialect.

The accepted language is deliberately closed: a single ``void test(...)``
function containing counted for-loops, if/else, scalar and fixed-shape array
locals, assignments, intrinsic calls, and C-precedence integer expressions.
There are no pointers-as-values, no user functions, no while-loops and no
preprocessor.
"""

from __future__ import annotations

from .intrinsics import INTRINSICS
from .nodes import (
    AddrOf,
    ArrayParam,
    Assign,
    Binary,
    Block,
    Call,
    Cast,
    Decl,
    Diagnostic,
    Expr,
    FloatLit,
    For,
    Ident,
    If,
    Index,
    IntLit,
    KernelProgram,
    KernelSyntaxError,
    LValue,
    SizeOf,
    Stmt,
    Ternary,
    Unary,
    SCALAR_TYPES,
)

# ---------------------------------------------------------------------------
# Lexer

_PUNCT2 = ("<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "++", "--", "+=", "-=")
_PUNCT1 = "+-*/%<>=!~&|^?:,;()[]{}"


class _Tok:
    __slots__ = ("kind", "text", "value", "line", "col", "hex")

    def __init__(self, kind, text, value, line, col):
        self.kind = kind  # 'ident' | 'int' | 'float' | 'punct' | 'eof'
        self.text = text
        self.value = value
        self.line = line
        self.col = col
        self.hex = False

    def __repr__(self):
        return f"_Tok({self.kind},{self.text!r})"


def tokenize(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def err(msg, code="syntax"):
        raise KernelSyntaxError(msg, line, col, code)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            j = text.find("\n", i)
            i = n if j < 0 else j
            continue
        if text.startswith("/*", i):
            j = text.find("*/", i + 2)
            if j < 0:
                err("unterminated block comment")
            skipped = text[i : j + 2]
            line += skipped.count("\n")
            col = (j + 2 - skipped.rfind("\n") - i) if "\n" in skipped else col + len(skipped)
            i = j + 2
            continue
        if c == "#":
            err("preprocessor directive is not allowed", code="preprocessor")
        start_line, start_col = line, col
        if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            is_float = False
            if text.startswith(("0x", "0X"), i):
                j = i + 2
                while j < n and text[j] in "0123456789abcdefABCDEF":
                    j += 1
                value = int(text[i:j], 16)
                tok = _Tok("int", text[i:j], value, start_line, start_col)
                tok.hex = True  # type: ignore[attr-defined]
            else:
                while j < n and text[j].isdigit():
                    j += 1
                if j < n and text[j] == ".":
                    is_float = True
                    j += 1
                    while j < n and text[j].isdigit():
                        j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        is_float = True
                        while k < n and text[k].isdigit():
                            k += 1
                        j = k
                if is_float:
                    value = float(text[i:j])
                    tok = _Tok("float", text[i:j], value, start_line, start_col)
                else:
                    value = int(text[i:j])
                    tok = _Tok("int", text[i:j], value, start_line, start_col)
                    tok.hex = False  # type: ignore[attr-defined]
            # integer/float suffixes: accepted and dropped
            while j < n and text[j] in "uUlLfF":
                j += 1
            col += j - i
            i = j
            toks.append(tok)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(_Tok("ident", text[i:j], None, start_line, start_col))
            col += j - i
            i = j
            continue
        two = text[i : i + 2]
        if two in _PUNCT2:
            toks.append(_Tok("punct", two, None, start_line, start_col))
            i += 2
            col += 2
            continue
        if c in _PUNCT1:
            toks.append(_Tok("punct", c, None, start_line, start_col))
            i += 1
            col += 1
            continue
        err(f"unexpected character {c!r}")
    toks.append(_Tok("eof", "", None, line, col))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.pos = 0
        self.diags: list[Diagnostic] = []

    # -- token helpers ------------------------------------------------------

    def peek(self, off=0) -> _Tok:
        return self.toks[min(self.pos + off, len(self.toks) - 1)]

    def next(self) -> _Tok:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, text: str) -> bool:
        t = self.peek()
        return t.kind in ("punct", "ident") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> _Tok:
        t = self.peek()
        if not self.at(text):
            raise KernelSyntaxError(
                f"expected {text!r}, found {t.text!r}", t.line, t.col
            )
        return self.next()

    def err(self, msg, tok=None, code="syntax"):
        t = tok or self.peek()
        raise KernelSyntaxError(msg, t.line, t.col, code)

    # -- program ------------------------------------------------------------

    def program(self) -> KernelProgram:
        self.expect("void")
        name_tok = self.peek()
        if name_tok.kind != "ident":
            self.err("expected function name")
        name = self.next().text
        self.expect("(")
        params: list[ArrayParam] = []
        if not self.at(")"):
            params.append(self.param())
            while self.accept(","):
                params.append(self.param())
        self.expect(")")
        body = self.block_body()
        t = self.peek()
        if t.kind != "eof":
            self.err("only one top-level function is allowed", tok=t)
        return KernelProgram(name=name, params=params, body=body)

    def param(self) -> ArrayParam:
        tok = self.peek()
        ty = self.type_name()
        name_tok = self.peek()
        if name_tok.kind != "ident":
            self.err("expected parameter name")
        name = self.next().text
        shape = []
        while self.accept("["):
            shape.append(self.const_dim())
            self.expect("]")
        if not shape:
            self.err("parameters must be arrays with constant dimensions", tok=name_tok)
        if len(shape) > 3:
            self.err("parameters support at most 3 dimensions", tok=name_tok)
        return ArrayParam(name=name, element_type=ty, shape=tuple(shape),
                          line=tok.line, col=tok.col)

    def const_dim(self) -> int:
        t = self.peek()
        if t.kind != "int":
            self.err("array dimension must be an integer literal", tok=t,
                     code="variable-length-array")
        self.next()
        if t.value < 1:
            self.err("array dimension must be >= 1", tok=t)
        return t.value

    def type_name(self) -> str:
        t = self.peek()
        if t.kind == "ident" and t.text in SCALAR_TYPES:
            return self.next().text
        self.err(f"expected a type name, found {t.text!r}")

    def looks_like_type(self, off=0) -> bool:
        t = self.peek(off)
        return t.kind == "ident" and t.text in SCALAR_TYPES

    # -- statements ---------------------------------------------------------

    def block_body(self) -> list[Stmt]:
        self.expect("{")
        stmts: list[Stmt] = []
        while not self.at("}"):
            if self.peek().kind == "eof":
                self.err("unexpected end of input inside block")
            s = self.statement()
            if s is not None:
                stmts.append(s)
        self.expect("}")
        return stmts

    def statement(self) -> Stmt | None:
        t = self.peek()
        if self.accept(";"):
            return None
        if self.at("{"):
            body = self.block_body()
            return Block(body=body, line=t.line, col=t.col)
        if self.at("for"):
            return self.for_stmt()
        if self.at("if"):
            return self.if_stmt()
        if self.at("static") or self.at("const") or self.looks_like_type():
            return self.decl_stmt()
        if t.kind == "ident":
            return self.assign_or_call()
        self.err(f"expected a statement, found {t.text!r}")

    def decl_stmt(self) -> Decl:
        t = self.peek()
        static = self.accept("static")
        const = self.accept("const")
        if not static:
            static = self.accept("static")  # 'const static' ordering
        ty = self.type_name()
        name_tok = self.peek()
        if name_tok.kind != "ident":
            self.err("expected a declared name")
        name = self.next().text
        shape = []
        while self.accept("["):
            shape.append(self.const_dim())
            self.expect("]")
        attrs = []
        # accepted-and-ignored alignment attribute: ident(int,...)
        while self.peek().kind == "ident" and self.peek(1).text == "(":
            attr_name = self.next().text
            self.expect("(")
            parts = []
            while not self.at(")"):
                parts.append(self.next().text)
            self.expect(")")
            attrs.append(f"{attr_name}({','.join(parts)})")
        init = None
        if self.accept("="):
            if self.at("{"):
                self.expect("{")
                init = [self.expr()]
                while self.accept(","):
                    if self.at("}"):
                        break
                    init.append(self.expr())
                self.expect("}")
            else:
                init = self.expr()
        self.expect(";")
        return Decl(
            type=ty,
            name=name,
            shape=tuple(shape) if shape else None,
            init=init,
            static=static,
            const=const,
            attrs=tuple(attrs),
            line=t.line,
            col=t.col,
        )

    def assign_or_call(self) -> Stmt:
        t = self.peek()
        if self.peek(1).text == "(" and self.peek(1).kind == "punct":
            name = self.next().text
            if name not in INTRINSICS:
                self.err(f"unknown intrinsic {name!r}", tok=t, code="unknown-intrinsic")
            args = self.call_args()
            self.expect(";")
            return Call(name=name, args=args, line=t.line, col=t.col)
        lv = self.lvalue()
        op_tok = self.peek()
        if self.accept("++"):
            self.expect(";")
            return Assign(lv, "+=", IntLit(1), line=t.line, col=t.col)
        if self.accept("--"):
            self.expect(";")
            return Assign(lv, "+=", Unary("-", IntLit(1)), line=t.line, col=t.col)
        if op_tok.text not in ("=", "+=", "-="):
            self.err("expected '=', '+=', '-=' or a call", tok=op_tok)
        self.next()
        value = self.expr()
        self.expect(";")
        if op_tok.text == "-=":
            return Assign(lv, "+=", Unary("-", value), line=t.line, col=t.col)
        return Assign(lv, op_tok.text, value, line=t.line, col=t.col)

    def lvalue(self) -> LValue:
        t = self.peek()
        if t.kind != "ident":
            self.err("expected an assignable name")
        name = self.next().text
        indices = []
        while self.accept("["):
            indices.append(self.expr())
            self.expect("]")
        return LValue(name=name, indices=indices, line=t.line, col=t.col)

    def call_args(self) -> list[Expr]:
        self.expect("(")
        args: list[Expr] = []
        if not self.at(")"):
            args.append(self.expr())
            while self.accept(","):
                args.append(self.expr())
        self.expect(")")
        return args

    def for_stmt(self) -> For:
        t = self.expect("for")
        self.expect("(")
        if self.looks_like_type():
            ty = self.type_name()
            name = self.next().text
            self.expect("=")
            init: Decl | Assign = Decl(type=ty, name=name, init=self.expr(),
                                       line=t.line, col=t.col)
            var = name
        else:
            lv = self.lvalue()
            if lv.indices:
                self.err("loop induction variable must be a scalar")
            self.expect("=")
            init = Assign(lv, "=", self.expr(), line=t.line, col=t.col)
            var = lv.name
        self.expect(";")
        cond = self.expr()
        self.expect(";")
        step, syntax = self.for_step(var)
        self.expect(")")
        body = self.stmt_as_body()
        return For(init=init, cond=cond, step=step, step_syntax=syntax, body=body,
                   line=t.line, col=t.col)

    def for_step(self, var: str) -> tuple[Assign, str]:
        t = self.peek()
        if self.accept("++") or self.accept("--"):
            pre = t.text
            name_tok = self.peek()
            if name_tok.kind != "ident" or name_tok.text != var:
                self.err(f"loop step must update {var!r}", tok=name_tok)
            self.next()
            delta: Expr = IntLit(1) if pre == "++" else Unary("-", IntLit(1))
            return Assign(LValue(var), "+=", delta), pre
        name_tok = self.peek()
        if name_tok.kind != "ident" or name_tok.text != var:
            self.err(f"loop step must update the induction variable {var!r}",
                     tok=name_tok)
        self.next()
        if self.accept("++"):
            return Assign(LValue(var), "+=", IntLit(1)), "++"
        if self.accept("--"):
            return Assign(LValue(var), "+=", Unary("-", IntLit(1))), "--"
        if self.accept("+="):
            return Assign(LValue(var), "+=", self.expr()), "+="
        if self.accept("-="):
            return Assign(LValue(var), "+=", Unary("-", self.expr())), "-="
        self.err("loop step must be ++, --, += or -=")

    def stmt_as_body(self) -> list[Stmt]:
        if self.at("{"):
            return self.block_body()
        s = self.statement()
        return [] if s is None else [s]

    def if_stmt(self) -> If:
        t = self.expect("if")
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.stmt_as_body()
        other = None
        if self.accept("else"):
            if self.at("if"):
                other = [self.if_stmt()]
            else:
                other = self.stmt_as_body()
        return If(cond=cond, then=then, other=other, line=t.line, col=t.col)

    # -- expressions (C precedence) ------------------------------------------

    def expr(self) -> Expr:
        return self.ternary()

    def ternary(self) -> Expr:
        c = self.logical_or()
        if self.accept("?"):
            t = self.expr()
            self.expect(":")
            f = self.ternary()
            return Ternary(c, t, f, line=getattr(c, "line", 0), col=getattr(c, "col", 0))
        return c

    def _binop_level(self, sub, ops):
        e = sub()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ops:
                self.next()
                e = Binary(t.text, e, sub(), line=t.line, col=t.col)
            else:
                return e

    def logical_or(self):
        return self._binop_level(self.logical_and, ("||",))

    def logical_and(self):
        return self._binop_level(self.bit_or, ("&&",))

    def bit_or(self):
        return self._binop_level(self.bit_xor, ("|",))

    def bit_xor(self):
        return self._binop_level(self.bit_and, ("^",))

    def bit_and(self):
        return self._binop_level(self.equality, ("&",))

    def equality(self):
        return self._binop_level(self.relational, ("==", "!="))

    def relational(self):
        return self._binop_level(self.shift, ("<", "<=", ">", ">="))

    def shift(self):
        return self._binop_level(self.additive, ("<<", ">>"))

    def additive(self):
        return self._binop_level(self.multiplicative, ("+", "-"))

    def multiplicative(self):
        return self._binop_level(self.unary, ("*", "/", "%"))

    def unary(self) -> Expr:
        t = self.peek()
        if t.kind == "punct" and t.text in ("-", "~", "!", "+"):
            self.next()
            operand = self.unary()
            if t.text == "+":
                return operand
            return Unary(t.text, operand, line=t.line, col=t.col)
        if t.text == "&":
            self.next()
            target = self.postfix()
            if not isinstance(target, Index):
                self.err("'&' must take the address of an array element", tok=t)
            return AddrOf(target, line=t.line, col=t.col)
        # cast: '(' type ')' unary
        if t.text == "(" and self.looks_like_type(1) and self.peek(2).text == ")":
            self.next()
            ty = self.type_name()
            self.expect(")")
            return Cast(ty, self.unary(), line=t.line, col=t.col)
        return self.postfix()

    def postfix(self) -> Expr:
        e = self.primary()
        while self.at("["):
            t = self.next()
            idx = self.expr()
            self.expect("]")
            e = Index(e, idx, line=t.line, col=t.col)
        return e

    def primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return IntLit(t.value, hex=getattr(t, "hex", False), line=t.line, col=t.col)
        if t.kind == "float":
            self.next()
            return FloatLit(t.value, line=t.line, col=t.col)
        if t.text == "(":
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if t.text == "sizeof":
            self.next()
            self.expect("(")
            ty = self.type_name()
            self.expect(")")
            return SizeOf(ty, line=t.line, col=t.col)
        if t.kind == "ident":
            self.next()
            return Ident(t.text, line=t.line, col=t.col)
        self.err(f"expected an expression, found {t.text!r}")


# ---------------------------------------------------------------------------


def parse_kernel(text: str) -> tuple[KernelProgram | None, list[Diagnostic]]:
    """Parse kernel source into an AST.

    Returns (program, diagnostics); on failure the program is None and the
    diagnostics list is non-empty.
    """
    try:
        toks = tokenize(text)
        parser = _Parser(toks)
        prog = parser.program()
        return prog, parser.diags
    except KernelSyntaxError as exc:
        return None, [
            Diagnostic(
                severity="error",
                line=exc.line,
                col=exc.col,
                message=exc.message,
                code=exc.code,
            )
        ]
