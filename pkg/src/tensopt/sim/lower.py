"""Translate kernel ASTs into a flat register-machine program.

Both execution lanes (pure Python and the compiled extension) interpret the
same lowered form, so functional behavior and cycle accounting cannot drift
between them.  Scalars live in 64-bit signed registers; arrays — parameters
and locals alike — live in byte buffers addressed by element index, because
DMA instructions and the CPU matrix helpers may target any of them.

Each op carries a `cost` equal to the number of AST nodes it retires, so the
interpreter's running cost total equals the number of nodes evaluated.
Short-circuit operators and the ternary are evaluated eagerly (both sides),
which keeps per-op costs static; the DSL has no side effects inside
expressions, so eager evaluation is observationally equivalent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dsl.intrinsics import INTRINSICS
from ..dsl.nodes import (
    AddrOf,
    Assign,
    Binary,
    Block,
    BUILTIN_CONSTANTS,
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
    Ternary,
    Unary,
)
from .config import AcceleratorConfig
from .errors import LoweringError

# --- opcodes ---------------------------------------------------------------

HALT = 0
CONST = 1
MOV = 2
ADD = 3
SUB = 4
MUL = 5
DIV = 6     # C truncating division
MOD = 7     # C remainder
SHL = 8
SHR = 9
BAND = 10
BOR = 11
BXOR = 12
EQ = 13
NE = 14
LT = 15
LE = 16
GT = 17
GE = 18
LAND = 19
LOR = 20
NEG = 21
BNOT = 22
LNOT = 23
SELECT = 24      # reg[a] = reg[b] ? reg[c] : reg[d]
LOAD_ARR = 25    # reg[a] = arrays[b][reg[c]]
STORE_ARR = 26   # arrays[b][reg[c]] = reg[d]
JMP = 27         # pc = a
JZ = 28          # if reg[a] == 0: pc = b
JNZ = 29         # if reg[a] != 0: pc = b
CALL = 30        # intrinsic a, argv offset b, argc c
CAST_U32 = 31    # dst = a & 0xffffffff
CAST_I32 = 32    # dst = wrap to signed 32-bit
CAST_I8 = 33     # dst = wrap to signed 8-bit
ARR_ZERO = 34    # zero-fill arrays[a]

_BINOPS = {
    "+": ADD, "-": SUB, "*": MUL, "/": DIV, "%": MOD,
    "<<": SHL, ">>": SHR, "&": BAND, "|": BOR, "^": BXOR,
    "==": EQ, "!=": NE, "<": LT, "<=": LE, ">": GT, ">=": GE,
    "&&": LAND, "||": LOR,
}

_CAST_OPS = {"uint32_t": CAST_U32, "int": CAST_I32, "int32_t": CAST_I32,
             "int8_t": CAST_I8}

# --- argv entry kinds --------------------------------------------------------

ARG_REG = 0     # a = register holding an integer value
ARG_FCONST = 1  # a = index into fconsts
ARG_DRAM = 2    # a = array id (-1 = null), b = register holding element offset

# --- array element types ------------------------------------------------------

DT_INT8 = 0
DT_INT32 = 1
DT_UINT32 = 2
DT_FLOAT32 = 3
DT_INT64 = 4

DTYPE_NUMPY = {
    DT_INT8: np.int8,
    DT_INT32: np.int32,
    DT_UINT32: np.uint32,
    DT_FLOAT32: np.float32,
    DT_INT64: np.int64,
}

_SIZEOF = {"int8_t": 1, "int32_t": 4, "int": 4, "uint32_t": 4,
           "float": 4, "int_fast32_t": 8}

# Intrinsic ids, shared with the engines.
INTRINSIC_IDS = {name: i for i, name in enumerate(INTRINSICS)}
INTRINSIC_NAMES = list(INTRINSICS)


def _dtype_code(type_name: str, cfg: AcceleratorConfig) -> int:
    if type_name == "elem_t":
        return DT_FLOAT32 if cfg.elem_type == "float32" else DT_INT8
    if type_name == "acc_t":
        return DT_FLOAT32 if cfg.acc_type == "float32" else DT_INT32
    return {
        "int8_t": DT_INT8,
        "int32_t": DT_INT32,
        "int": DT_INT32,
        "int_fast32_t": DT_INT64,
        "uint32_t": DT_UINT32,
        "float": DT_FLOAT32,
    }[type_name]


@dataclass
class ArrayInfo:
    name: str
    dtype_code: int
    shape: tuple[int, ...]
    is_param: bool
    param_pos: int = -1

    @property
    def size_elems(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n

    @property
    def elem_size(self) -> int:
        return int(np.dtype(DTYPE_NUMPY[self.dtype_code]).itemsize)

    @property
    def size_bytes(self) -> int:
        return self.size_elems * self.elem_size


@dataclass
class LoweredProgram:
    ops: np.ndarray        # (n, 6) int64: op, a, b, c, d, cost
    argv: np.ndarray       # (m, 3) int64: kind, a, b
    fconsts: np.ndarray    # float64
    arrays: list[ArrayInfo]
    n_regs: int
    cfg: AcceleratorConfig

    @property
    def params(self) -> list[ArrayInfo]:
        return [a for a in self.arrays if a.is_param]


class _Lowerer:
    def __init__(self, prog: KernelProgram, cfg: AcceleratorConfig):
        self.prog = prog
        self.cfg = cfg
        self.ops: list[list[int]] = []
        self.argv: list[tuple[int, int, int]] = []
        self.fconsts: list[float] = []
        self.arrays: list[ArrayInfo] = []
        self.scopes: list[dict[str, tuple]] = [{}]
        self.n_regs = 0
        self.static_done: dict[int, int] = {}  # id(Decl) -> guard register

    # -- plumbing -------------------------------------------------------------

    def fail(self, node, msg: str):
        line = getattr(node, "line", 0)
        raise LoweringError(f"line {line}: {msg}" if line else msg)

    def reg(self) -> int:
        r = self.n_regs
        self.n_regs += 1
        return r

    def emit(self, op, a=0, b=0, c=0, d=0, cost=0) -> int:
        self.ops.append([op, a, b, c, d, cost])
        return len(self.ops) - 1

    def lookup(self, name: str):
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None

    def declare_array(self, name, dtype_code, shape, is_param, param_pos=-1) -> int:
        arr_id = len(self.arrays)
        self.arrays.append(ArrayInfo(name, dtype_code, tuple(shape), is_param, param_pos))
        self.scopes[-1][name] = ("array", arr_id)
        return arr_id

    def fconst(self, value: float) -> int:
        self.fconsts.append(float(value))
        return len(self.fconsts) - 1

    # -- expressions ------------------------------------------------------------

    def expr(self, e: Expr) -> tuple[int, int]:
        """Lower e; returns (register, pending_node_count).

        pending nodes are AST nodes whose cost has not yet been attached to
        an emitted op; the consumer folds them into its own op's cost.
        """
        if isinstance(e, IntLit):
            dst = self.reg()
            value = e.value & 0xFFFFFFFFFFFFFFFF
            if value >= 1 << 63:
                value -= 1 << 64
            self.emit(CONST, dst, value, cost=1)
            return dst, 0
        if isinstance(e, FloatLit):
            self.fail(e, "float literal outside a scale argument")
        if isinstance(e, Ident):
            if e.name in BUILTIN_CONSTANTS:
                dst = self.reg()
                self.emit(CONST, dst, BUILTIN_CONSTANTS[e.name], cost=1)
                return dst, 0
            info = self.lookup(e.name)
            if info is None:
                self.fail(e, f"undeclared identifier {e.name!r}")
            if info[0] != "reg":
                self.fail(e, f"array {e.name!r} used as a scalar")
            return info[1], 1
        if isinstance(e, Unary):
            src, pending = self.expr(e.operand)
            dst = self.reg()
            op = {"-": NEG, "~": BNOT, "!": LNOT}[e.op]
            self.emit(op, dst, src, cost=pending + 1)
            return dst, 0
        if isinstance(e, Binary):
            ra, ca = self.expr(e.left)
            rb, cb = self.expr(e.right)
            dst = self.reg()
            self.emit(_BINOPS[e.op], dst, ra, rb, cost=ca + cb + 1)
            return dst, 0
        if isinstance(e, Ternary):
            rc, cc = self.expr(e.cond)
            rt, ct = self.expr(e.then)
            rf, cf = self.expr(e.other)
            dst = self.reg()
            self.emit(SELECT, dst, rc, rt, rf, cost=cc + ct + cf + 1)
            return dst, 0
        if isinstance(e, Cast):
            src, pending = self.expr(e.operand)
            op = _CAST_OPS.get(e.type)
            dst = self.reg()
            if op is None:
                self.emit(MOV, dst, src, cost=pending + 1)
            else:
                self.emit(op, dst, src, cost=pending + 1)
            return dst, 0
        if isinstance(e, SizeOf):
            size = _SIZEOF.get(e.type)
            if size is None:
                size = self.cfg.elem_bytes if e.type == "elem_t" else self.cfg.acc_bytes
            dst = self.reg()
            self.emit(CONST, dst, size, cost=1)
            return dst, 0
        if isinstance(e, Index):
            arr_id, idx_reg, pending, depth = self.index_chain(e)
            info = self.arrays[arr_id]
            if depth != len(info.shape):
                self.fail(e, f"{info.name!r} needs {len(info.shape)} indices in a value context")
            if info.dtype_code == DT_FLOAT32:
                self.fail(e, "floating-point elements can only be moved by transfers, "
                             "not read into expressions")
            dst = self.reg()
            self.emit(LOAD_ARR, dst, arr_id, idx_reg, cost=pending + 1)
            return dst, 0
        if isinstance(e, AddrOf):
            self.fail(e, "'&' reference outside a memory argument")
        self.fail(e, f"unsupported expression {type(e).__name__}")

    def index_chain(self, e: Index) -> tuple[int, int, int, int]:
        """Lower an index chain to (array_id, flat_index_reg, pending, depth).

        The flat index is in elements; partial chains use the full strides of
        the trailing dimensions.
        """
        indices: list[Expr] = []
        base = e
        while isinstance(base, Index):
            indices.append(base.index)
            base = base.base
        indices.reverse()
        if not isinstance(base, Ident):
            self.fail(e, "only named arrays can be indexed")
        info = self.lookup(base.name)
        if info is None or info[0] != "array":
            self.fail(e, f"{base.name!r} is not an array")
        arr_id = info[1]
        shape = self.arrays[arr_id].shape
        if len(indices) > len(shape):
            self.fail(e, f"too many indices for {base.name!r}")
        pending = 1 + len(indices)  # base ident + one node per Index link
        strides = []
        s = 1
        for d in reversed(shape):
            strides.append(s)
            s *= d
        strides.reverse()
        flat_reg = -1
        for idx_expr, stride in zip(indices, strides):
            r, p = self.expr(idx_expr)
            pending += p
            if stride != 1:
                sreg = self.reg()
                self.emit(CONST, sreg, stride)
                term = self.reg()
                self.emit(MUL, term, r, sreg)
            else:
                term = r
            if flat_reg < 0:
                flat_reg = term
            else:
                acc = self.reg()
                self.emit(ADD, acc, flat_reg, term)
                flat_reg = acc
        if flat_reg < 0:
            flat_reg = self.reg()
            self.emit(CONST, flat_reg, 0)
        return arr_id, flat_reg, pending, len(indices)

    def dram_arg(self, e: Expr) -> tuple[int, int, int]:
        """Lower a memory-reference argument to (array_id, offset_reg, pending).

        array_id -1 encodes the null/zero source.
        """
        if isinstance(e, IntLit):
            if e.value != 0:
                self.fail(e, "memory argument must be an array reference or 0")
            r = self.reg()
            self.emit(CONST, r, 0)
            return -1, r, 1
        if isinstance(e, Ident):
            if e.name == "NULL":
                r = self.reg()
                self.emit(CONST, r, 0)
                return -1, r, 1
            info = self.lookup(e.name)
            if info is None:
                self.fail(e, f"undeclared identifier {e.name!r}")
            if info[0] != "array":
                self.fail(e, f"{e.name!r} is not an array")
            r = self.reg()
            self.emit(CONST, r, 0)
            return info[1], r, 1
        target = e.target if isinstance(e, AddrOf) else e
        extra = 1 if isinstance(e, AddrOf) else 0
        if isinstance(target, Index):
            arr_id, idx_reg, pending, _depth = self.index_chain(target)
            return arr_id, idx_reg, pending + extra
        self.fail(e, "invalid memory-reference argument")

    # -- statements ---------------------------------------------------------------

    def stmt(self, s) -> None:
        if isinstance(s, Decl):
            self.decl(s)
        elif isinstance(s, Assign):
            self.assign(s)
        elif isinstance(s, Call):
            self.call(s)
        elif isinstance(s, For):
            self.for_stmt(s)
        elif isinstance(s, If):
            self.if_stmt(s)
        elif isinstance(s, Block):
            self.scopes.append({})
            for inner in s.body:
                self.stmt(inner)
            self.scopes.pop()
        else:
            self.fail(s, f"unsupported statement {type(s).__name__}")

    def decl(self, d: Decl) -> None:
        if d.shape:
            dtype = _dtype_code(d.type, self.cfg)
            arr_id = self.declare_array(d.name, dtype, d.shape, is_param=False)
            if d.init is None:
                return
            if not isinstance(d.init, list):
                self.fail(d, f"array {d.name!r} needs a brace initializer")
            skip_jump = None
            if d.static:
                guard = self.reg()
                self.static_done[id(d)] = guard
                skip_jump = self.emit(JNZ, guard, 0)
            flat = self.arrays[arr_id].size_elems
            if len(d.init) < flat:
                self.emit(ARR_ZERO, arr_id)
            for i, value in enumerate(d.init):
                vr, pending = self.expr(value)
                ir = self.reg()
                self.emit(CONST, ir, i)
                self.emit(STORE_ARR, 0, arr_id, ir, vr, cost=pending + (1 if i == 0 else 0))
            if skip_jump is not None:
                one = self.reg()
                self.emit(CONST, one, 1)
                self.emit(MOV, self.static_done[id(d)], one)
                self.ops[skip_jump][2] = len(self.ops)
            return
        # scalar
        if _dtype_code(d.type, self.cfg) == DT_FLOAT32:
            self.fail(d, "floating-point scalar locals are not supported; floats flow "
                         "through transfers and scale factors only")
        var = self.reg()
        self.scopes[-1][d.name] = ("reg", var)
        if isinstance(d.init, list):
            self.fail(d, f"scalar {d.name!r} cannot take a brace initializer")
        if d.init is None:
            return
        skip_jump = None
        if d.static:
            guard = self.reg()
            self.static_done[id(d)] = guard
            skip_jump = self.emit(JNZ, guard, 0)
        vr, pending = self.expr(d.init)
        self.emit(MOV, var, vr, cost=pending + 1)
        if skip_jump is not None:
            one = self.reg()
            self.emit(CONST, one, 1)
            self.emit(MOV, self.static_done[id(d)], one)
            self.ops[skip_jump][2] = len(self.ops)

    def assign(self, a: Assign) -> None:
        info = self.lookup(a.target.name)
        if info is None:
            self.fail(a, f"assignment to undeclared name {a.target.name!r}")
        if not a.target.indices:
            if info[0] != "reg":
                self.fail(a, f"cannot assign whole array {a.target.name!r}")
            var = info[1]
            vr, pending = self.expr(a.value)
            if a.op == "=":
                self.emit(MOV, var, vr, cost=pending + 1)
            else:
                self.emit(ADD, var, var, vr, cost=pending + 1)
            return
        if info[0] != "array":
            self.fail(a, f"{a.target.name!r} is scalar and cannot be indexed")
        chain: Expr = Ident(a.target.name, line=a.line, col=a.col)
        for idx in a.target.indices:
            chain = Index(chain, idx, line=a.line, col=a.col)
        arr_id, idx_reg, pending, depth = self.index_chain(chain)
        if depth != len(self.arrays[arr_id].shape):
            self.fail(a, f"{a.target.name!r} needs full indexing for assignment")
        vr, vp = self.expr(a.value)
        if a.op == "+=":
            if self.arrays[arr_id].dtype_code == DT_FLOAT32:
                self.fail(a, "floating-point elements can only be moved by transfers, "
                             "not read into expressions")
            cur = self.reg()
            self.emit(LOAD_ARR, cur, arr_id, idx_reg)
            summed = self.reg()
            self.emit(ADD, summed, cur, vr)
            vr = summed
        self.emit(STORE_ARR, 0, arr_id, idx_reg, vr, cost=pending + vp + 1)

    def call(self, c: Call) -> None:
        sig = INTRINSICS.get(c.name)
        if sig is None:
            self.fail(c, f"unknown intrinsic {c.name!r}")
        if not (sig.min_args <= len(c.args) <= len(sig.args)):
            self.fail(c, f"{c.name} called with {len(c.args)} argument(s)")
        entries: list[tuple[int, int, int]] = []
        total_pending = 1
        for kind, arg in zip(sig.args, c.args):
            if kind == "dram":
                arr_id, off_reg, pending = self.dram_arg(arg)
                entries.append((ARG_DRAM, arr_id, off_reg))
                total_pending += pending
            elif kind == "scale":
                fv = self.fold_float(arg)
                if fv is not None:
                    entries.append((ARG_FCONST, self.fconst(fv[0]), 0))
                    total_pending += fv[1]
                else:
                    r, pending = self.expr(arg)
                    entries.append((ARG_REG, r, 0))
                    total_pending += pending
            else:
                r, pending = self.expr(arg)
                entries.append((ARG_REG, r, 0))
                total_pending += pending
        if c.name == "config_st" and len(entries) == 1:
            entries.append((ARG_FCONST, self.fconst(1.0), 0))
        argv_off = len(self.argv)
        self.argv.extend(entries)
        self.emit(CALL, INTRINSIC_IDS[c.name], argv_off, len(entries), cost=total_pending)

    def fold_float(self, e: Expr) -> tuple[float, int] | None:
        """Fold a scale argument to a literal float, returning (value, nodes)."""
        if isinstance(e, FloatLit):
            return float(e.value), 1
        if isinstance(e, IntLit):
            return float(e.value), 1
        if isinstance(e, Unary) and e.op == "-":
            inner = self.fold_float(e.operand)
            if inner is not None:
                return -inner[0], inner[1] + 1
        return None

    def for_stmt(self, f: For) -> None:
        self.scopes.append({})
        if isinstance(f.init, Decl):
            self.decl(f.init)
        else:
            self.assign(f.init)
        head = len(self.ops)
        cr, pending = self.expr(f.cond)
        jz = self.emit(JZ, cr, 0, cost=pending + 1)
        for s in f.body:
            self.stmt(s)
        self.assign(f.step)
        self.emit(JMP, head)
        self.ops[jz][2] = len(self.ops)
        self.scopes.pop()

    def if_stmt(self, s: If) -> None:
        cr, pending = self.expr(s.cond)
        jz = self.emit(JZ, cr, 0, cost=pending + 1)
        self.scopes.append({})
        for inner in s.then:
            self.stmt(inner)
        self.scopes.pop()
        if s.other is None:
            self.ops[jz][2] = len(self.ops)
            return
        jmp = self.emit(JMP, 0)
        self.ops[jz][2] = len(self.ops)
        self.scopes.append({})
        for inner in s.other:
            self.stmt(inner)
        self.scopes.pop()
        self.ops[jmp][1] = len(self.ops)

    # -- entry ------------------------------------------------------------------

    def run(self) -> LoweredProgram:
        for pos, p in enumerate(self.prog.params):
            dtype = _dtype_code(p.element_type, self.cfg)
            self.declare_array(p.name, dtype, p.shape, is_param=True, param_pos=pos)
        for s in self.prog.body:
            self.stmt(s)
        self.emit(HALT)
        ops = np.asarray(self.ops, dtype=np.int64).reshape(-1, 6)
        argv = (
            np.asarray(self.argv, dtype=np.int64).reshape(-1, 3)
            if self.argv
            else np.zeros((0, 3), dtype=np.int64)
        )
        fconsts = np.asarray(self.fconsts or [0.0], dtype=np.float64)
        return LoweredProgram(
            ops=ops,
            argv=argv,
            fconsts=fconsts,
            arrays=self.arrays,
            n_regs=max(self.n_regs, 1),
            cfg=self.cfg,
        )


def lower_kernel(prog: KernelProgram, cfg: AcceleratorConfig) -> LoweredProgram:
    """Lower a validated kernel AST for execution on the given instance."""
    return _Lowerer(prog, cfg).run()
