"""Static checks for parsed kernels.

``validate_kernel`` walks the AST and collects diagnostics without raising:
name resolution with block scoping, intrinsic arity, memory-reference shape
rules, assignment rules, and (when an accelerator config is supplied)
best-effort row-range lints for statically constant local addresses.  The
simulator re-checks all bounds at execution time; the validator exists to
reject obviously broken kernels before any simulation is attempted.
"""

from __future__ import annotations

from .intrinsics import INTRINSICS
from .nodes import (
    AddrOf,
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
    SizeOf,
    Ternary,
    Unary,
    BUILTIN_CONSTANTS,
)

_FIXED_SIZEOF = {
    "int8_t": 1,
    "elem_t": None,  # depends on the accelerator instance
    "acc_t": None,
    "int32_t": 4,
    "int": 4,
    "uint32_t": 4,
    "float": 4,
    "int_fast32_t": 8,
}

_ACC_BIT = 1 << 31
_ROW_MASK = 0x1FFFFFFF
_SKIP_ADDR = 0xFFFFFFFF  # "reuse previous / no bias" sentinel

# (call name, arg index) pairs whose value is a local scratchpad/accumulator
# address, and the companion (cols_idx, rows_idx) when the footprint is
# statically checkable.
_LOCAL_ADDR_ARGS = {
    "mvin": (1, 2, 3),
    "mvin2": (1, 2, 3),
    "mvin3": (1, 2, 3),
    "mvout": (1, 2, 3),
}


class _Scope:
    def __init__(self, parent=None):
        self.parent = parent
        self.names: dict[str, dict] = {}

    def declare(self, name: str, info: dict) -> bool:
        if name in self.names:
            return False
        self.names[name] = info
        return True

    def lookup(self, name: str):
        s = self
        while s is not None:
            if name in s.names:
                return s.names[name]
            s = s.parent
        return None


class _Validator:
    def __init__(self, prog: KernelProgram, cfg=None):
        self.prog = prog
        self.cfg = cfg
        self.diags: list[Diagnostic] = []

    def error(self, node, message, code="validate"):
        self.diags.append(
            Diagnostic(
                severity="error",
                line=getattr(node, "line", 0),
                col=getattr(node, "col", 0),
                message=message,
                code=code,
            )
        )

    # -- constant folding (for lint-grade bounds checks) ---------------------

    def fold(self, e: Expr, scope: _Scope):
        """Best-effort integer fold; returns None when not statically known."""
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, FloatLit):
            return None
        if isinstance(e, Ident):
            if e.name in BUILTIN_CONSTANTS:
                return BUILTIN_CONSTANTS[e.name]
            info = scope.lookup(e.name)
            if info and info.get("const_value") is not None:
                return info["const_value"]
            return None
        if isinstance(e, Unary):
            v = self.fold(e.operand, scope)
            if v is None:
                return None
            if e.op == "-":
                return -v
            if e.op == "~":
                return ~v
            if e.op == "!":
                return int(v == 0)
            return None
        if isinstance(e, Cast):
            v = self.fold(e.operand, scope)
            if v is None:
                return None
            if e.type == "uint32_t":
                return v & 0xFFFFFFFF
            return v
        if isinstance(e, SizeOf):
            size = _FIXED_SIZEOF.get(e.type)
            if size is not None:
                return size
            if self.cfg is not None:
                if e.type == "elem_t":
                    return self.cfg.elem_bytes
                if e.type == "acc_t":
                    return self.cfg.acc_bytes
            return None
        if isinstance(e, Binary):
            a = self.fold(e.left, scope)
            b = self.fold(e.right, scope)
            if a is None or b is None:
                return None
            op = e.op
            try:
                if op == "+":
                    return a + b
                if op == "-":
                    return a - b
                if op == "*":
                    return a * b
                if op == "/":
                    if b == 0:
                        return None
                    q = abs(a) // abs(b)
                    return q if (a >= 0) == (b >= 0) else -q
                if op == "%":
                    if b == 0:
                        return None
                    r = abs(a) % abs(b)
                    return r if a >= 0 else -r
                if op == "<<":
                    return a << b
                if op == ">>":
                    return a >> b
                if op == "&":
                    return a & b
                if op == "|":
                    return a | b
                if op == "^":
                    return a ^ b
                if op == "==":
                    return int(a == b)
                if op == "!=":
                    return int(a != b)
                if op == "<":
                    return int(a < b)
                if op == "<=":
                    return int(a <= b)
                if op == ">":
                    return int(a > b)
                if op == ">=":
                    return int(a >= b)
                if op == "&&":
                    return int(bool(a) and bool(b))
                if op == "||":
                    return int(bool(a) or bool(b))
            except (ValueError, OverflowError):
                return None
            return None
        if isinstance(e, Ternary):
            c = self.fold(e.cond, scope)
            if c is None:
                return None
            return self.fold(e.then if c else e.other, scope)
        return None

    # -- expression checking --------------------------------------------------

    def check_value_expr(self, e: Expr, scope: _Scope):
        if isinstance(e, (IntLit, FloatLit, SizeOf)):
            return
        if isinstance(e, Ident):
            if e.name in BUILTIN_CONSTANTS:
                return
            info = scope.lookup(e.name)
            if info is None:
                self.error(e, f"undeclared identifier {e.name!r}", "undeclared")
            elif info["rank"] > 0:
                self.error(e, f"array {e.name!r} used as a scalar value")
            return
        if isinstance(e, Index):
            base, depth = e, 0
            while isinstance(base, Index):
                self.check_value_expr(base.index, scope)
                base = base.base
                depth += 1
            if not isinstance(base, Ident):
                self.error(e, "only named arrays can be indexed")
                return
            info = scope.lookup(base.name)
            if info is None:
                self.error(base, f"undeclared identifier {base.name!r}", "undeclared")
                return
            if info["rank"] == 0:
                self.error(base, f"{base.name!r} is scalar and cannot be indexed")
            elif depth != info["rank"]:
                self.error(
                    e,
                    f"{base.name!r} has {info['rank']} dimension(s); "
                    f"{depth} index(es) given",
                )
            return
        if isinstance(e, AddrOf):
            self.error(e, "'&' is only valid in a memory-reference argument")
            return
        if isinstance(e, Unary):
            self.check_value_expr(e.operand, scope)
            return
        if isinstance(e, Cast):
            self.check_value_expr(e.operand, scope)
            return
        if isinstance(e, Binary):
            self.check_value_expr(e.left, scope)
            self.check_value_expr(e.right, scope)
            return
        if isinstance(e, Ternary):
            self.check_value_expr(e.cond, scope)
            self.check_value_expr(e.then, scope)
            self.check_value_expr(e.other, scope)
            return

    def check_dram_expr(self, e: Expr, scope: _Scope):
        """A memory-reference argument: array name, (partial) element
        reference, &array[...]..., or the literal 0 / NULL."""
        if isinstance(e, IntLit):
            if e.value != 0:
                self.error(e, "memory-reference argument must be an array or 0")
            return
        if isinstance(e, Ident):
            if e.name == "NULL":
                return
            info = scope.lookup(e.name)
            if info is None:
                self.error(e, f"undeclared identifier {e.name!r}", "undeclared")
            elif info["rank"] == 0:
                self.error(e, f"{e.name!r} is scalar; expected an array reference")
            return
        target = e.target if isinstance(e, AddrOf) else e
        if isinstance(target, Index):
            base, depth = target, 0
            while isinstance(base, Index):
                self.check_value_expr(base.index, scope)
                base = base.base
                depth += 1
            if not isinstance(base, Ident):
                self.error(e, "only named arrays can be referenced")
                return
            info = scope.lookup(base.name)
            if info is None:
                self.error(base, f"undeclared identifier {base.name!r}", "undeclared")
                return
            if info["rank"] == 0:
                self.error(base, f"{base.name!r} is scalar; expected an array reference")
            elif depth > info["rank"]:
                self.error(e, f"{base.name!r} indexed deeper than its {info['rank']} dimension(s)")
            return
        self.error(e, "invalid memory-reference argument")

    # -- intrinsic call checking ----------------------------------------------

    def check_call(self, call: Call, scope: _Scope):
        sig = INTRINSICS.get(call.name)
        if sig is None:
            self.error(call, f"unknown intrinsic {call.name!r}", "unknown-intrinsic")
            for a in call.args:
                self.check_value_expr(a, scope)
            return
        if not (sig.min_args <= len(call.args) <= len(sig.args)):
            want = (
                str(len(sig.args))
                if sig.min_args == len(sig.args)
                else f"{sig.min_args}..{len(sig.args)}"
            )
            self.error(
                call,
                f"{call.name} expects {want} argument(s), got {len(call.args)}",
                "arity",
            )
        for kind, arg in zip(sig.args, call.args):
            if kind == "dram":
                self.check_dram_expr(arg, scope)
            else:
                self.check_value_expr(arg, scope)
        if self.cfg is not None and sig.executable:
            self.lint_local_ranges(call, scope)

    def lint_local_ranges(self, call: Call, scope: _Scope):
        cfg = self.cfg
        spec = _LOCAL_ADDR_ARGS.get(call.name)
        if spec is not None and len(call.args) >= 4:
            addr_i, cols_i, rows_i = spec
            addr = self.fold(call.args[addr_i], scope)
            rows = self.fold(call.args[rows_i], scope)
            cols = self.fold(call.args[cols_i], scope)
            self._lint_addr(call, addr, rows, cols)
        elif call.name == "preload" and len(call.args) >= 6:
            self._lint_addr(call, self.fold(call.args[0], scope),
                            self.fold(call.args[3], scope), None)
            self._lint_addr(call, self.fold(call.args[1], scope),
                            self.fold(call.args[5], scope), None)
        elif call.name in ("compute_preloaded", "compute_accumulated") and len(call.args) >= 6:
            self._lint_addr(call, self.fold(call.args[0], scope),
                            self.fold(call.args[3], scope), None)
            self._lint_addr(call, self.fold(call.args[1], scope), None, None)

    def _lint_addr(self, call, addr, rows, cols):
        if addr is None:
            return
        addr &= 0xFFFFFFFF
        if addr == _SKIP_ADDR:
            return
        cap = self.cfg.acc_rows if addr & _ACC_BIT else self.cfg.spad_rows
        space = "accumulator" if addr & _ACC_BIT else "scratchpad"
        row = addr & _ROW_MASK
        if row >= cap:
            self.error(
                call,
                f"{call.name}: {space} row {row} is outside capacity {cap}",
                "row-range",
            )
            return
        if rows is not None and rows > 0 and row + rows > cap:
            self.error(
                call,
                f"{call.name}: rows {row}..{row + rows - 1} exceed "
                f"{space} capacity {cap}",
                "row-range",
            )

    # -- statements -----------------------------------------------------------

    def check_decl(self, d: Decl, scope: _Scope):
        rank = len(d.shape) if d.shape else 0
        if d.init is not None:
            if isinstance(d.init, list):
                if rank == 0:
                    self.error(d, f"{d.name!r} is scalar; brace initializer needs an array")
                else:
                    flat = 1
                    for n in d.shape:
                        flat *= n
                    if len(d.init) > flat:
                        self.error(
                            d,
                            f"{d.name!r} initializer has {len(d.init)} values "
                            f"for {flat} element(s)",
                        )
                    for v in d.init:
                        self.check_value_expr(v, scope)
            else:
                if rank > 0:
                    self.error(d, f"array {d.name!r} needs a brace initializer")
                self.check_value_expr(d.init, scope)
        info = {"rank": rank, "const": d.const, "type": d.type, "const_value": None}
        if d.const and rank == 0 and d.init is not None and not isinstance(d.init, list):
            info["const_value"] = self.fold(d.init, scope)
        if not scope.declare(d.name, info):
            self.error(d, f"duplicate declaration of {d.name!r}", "duplicate")

    def check_assign(self, a: Assign, scope: _Scope):
        info = scope.lookup(a.target.name)
        if info is None:
            self.error(a, f"assignment to undeclared name {a.target.name!r}", "undeclared")
        else:
            if info.get("const"):
                self.error(a, f"assignment to const {a.target.name!r}")
            depth = len(a.target.indices)
            if depth == 0 and info["rank"] > 0:
                self.error(a, f"cannot assign whole array {a.target.name!r}")
            elif depth > 0 and depth != info["rank"]:
                self.error(
                    a,
                    f"{a.target.name!r} has {info['rank']} dimension(s); "
                    f"{depth} index(es) given",
                )
        for idx in a.target.indices:
            self.check_value_expr(idx, scope)
        self.check_value_expr(a.value, scope)

    def check_body(self, body, scope: _Scope):
        for s in body:
            if isinstance(s, Decl):
                self.check_decl(s, scope)
            elif isinstance(s, Assign):
                self.check_assign(s, scope)
            elif isinstance(s, Call):
                self.check_call(s, scope)
            elif isinstance(s, For):
                inner = _Scope(scope)
                if isinstance(s.init, Decl):
                    self.check_value_expr(s.init.init, scope)
                    inner.declare(s.init.name, {"rank": 0, "const": False,
                                                "type": s.init.type,
                                                "const_value": None})
                else:
                    self.check_assign(s.init, scope)
                self.check_value_expr(s.cond, inner)
                self.check_value_expr(s.step.value, inner)
                self.check_body(s.body, _Scope(inner))
            elif isinstance(s, If):
                self.check_value_expr(s.cond, scope)
                self.check_body(s.then, _Scope(scope))
                if s.other is not None:
                    self.check_body(s.other, _Scope(scope))
            elif isinstance(s, Block):
                self.check_body(s.body, _Scope(scope))

    def run(self) -> list[Diagnostic]:
        if self.prog.name != "test":
            self.error(self.prog, f"kernel function must be named 'test', got {self.prog.name!r}")
        top = _Scope()
        for p in self.prog.params:
            if not top.declare(p.name, {"rank": len(p.shape), "const": False,
                                        "type": p.element_type, "const_value": None}):
                self.error(p, f"duplicate parameter {p.name!r}", "duplicate")
        self.check_body(self.prog.body, _Scope(top))
        return self.diags


def validate_kernel(prog: KernelProgram, cfg=None) -> list[Diagnostic]:
    """Validate a parsed kernel; an empty result means it passed.

    ``cfg`` (optional) enables capacity lints; it only needs ``dim``,
    ``spad_rows``, ``acc_rows``, ``elem_bytes`` and ``acc_bytes`` attributes.
    """
    return _Validator(prog, cfg).run()
