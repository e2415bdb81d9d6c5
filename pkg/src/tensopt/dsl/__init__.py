"""Kernel dialect front end: parse, print, validate, extract."""

from .extract import extract_code_block
from .intrinsics import ACCEL_INSTRUCTIONS, CPU_HELPERS, INTRINSICS
from .nodes import (
    AddrOf,
    ArrayParam,
    Assign,
    Binary,
    Block,
    BUILTIN_CONSTANTS,
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
    SCALAR_TYPES,
    SizeOf,
    Stmt,
    Ternary,
    Unary,
)
from .parser import parse_kernel, tokenize
from .printer import print_kernel
from .validate import validate_kernel

__all__ = [
    "ACCEL_INSTRUCTIONS",
    "AddrOf",
    "ArrayParam",
    "Assign",
    "BUILTIN_CONSTANTS",
    "Binary",
    "Block",
    "CPU_HELPERS",
    "Call",
    "Cast",
    "Decl",
    "Diagnostic",
    "Expr",
    "FloatLit",
    "For",
    "INTRINSICS",
    "Ident",
    "If",
    "Index",
    "IntLit",
    "KernelProgram",
    "KernelSyntaxError",
    "LValue",
    "SCALAR_TYPES",
    "SizeOf",
    "Stmt",
    "Ternary",
    "Unary",
    "extract_code_block",
    "parse_kernel",
    "print_kernel",
    "tokenize",
    "validate_kernel",
]
