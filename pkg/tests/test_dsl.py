import hypothesis.strategies as st
import pytest
from hypothesis import given, settings

import numpy as np

from conftest import ALL_ASSETS, asset_text, fixture_text
from tensopt.dsl import (
    ACCEL_INSTRUCTIONS,
    BUILTIN_CONSTANTS,
    CPU_HELPERS,
    INTRINSICS,
    extract_code_block,
    parse_kernel,
    print_kernel,
    validate_kernel,
)
from tensopt.sim import instance_a, run_functional

RICH_KERNEL = """
void test(int8_t out[2][4][4], int32_t scratch[4][4]) {
  static int32_t tmp[4][4];
  int_fast32_t total = 0;
  uint32_t mask = ~((uint32_t) 0);
  for (int i = 0; i < 4; i++) {
    int_fast32_t row = i * 4;
    if (i % 2 == 0 && i != 3) {
      total += row;
    } else {
      total -= 1;
    }
    for (int j = 0; j < 4; j++) {
      int_fast32_t v = (i << 2) | j;
      tmp[i][j] = (v > 7) ? v : (0 - v);
      scratch[i][j] = tmp[i][j] + (int) sizeof(int32_t);
      out[0][i][j] = (int8_t) (tmp[i][j] & 0xFF);
      out[1][i][j] = !v;
    }
  }
  for (int k = 0; k < 2; k++) {
    total++;
  }
  total--;
  out[0][0][0] = (int8_t) (total % 127);
  out[0][0][1] = (int8_t) ((mask & 0xF0) >> 4);
  out[0][0][2] = (true == false) ? 1 : 2;
  out[0][0][3] = (int8_t) (total >> 1);
}
"""


def roundtrip(src):
    prog, diags = parse_kernel(src)
    assert prog is not None, [str(d) for d in diags]
    assert not [d for d in diags if d.severity == "error"]
    first = print_kernel(prog)
    prog2, diags2 = parse_kernel(first)
    assert prog2 is not None, [str(d) for d in diags2]
    second = print_kernel(prog2)
    assert first == second
    return prog, first


@pytest.mark.parametrize("name", ALL_ASSETS)
def test_bundled_kernels_roundtrip(name):
    from tensopt.sim import instance_b
    prog, _ = roundtrip(asset_text(name))
    cfg = instance_a() if name.startswith("gemm") else instance_b()
    diags = validate_kernel(prog, cfg)
    assert not [d for d in diags if d.severity == "error"], \
        [str(d) for d in diags]


@pytest.mark.parametrize("step", range(10))
def test_gemm512_fixtures_roundtrip(step):
    prog, _ = roundtrip(fixture_text("gemm512", f"step{step}.gk"))
    diags = validate_kernel(prog, instance_a())
    assert not [d for d in diags if d.severity == "error"], \
        [str(d) for d in diags]


def test_rich_surface_roundtrip_and_run(cfg_a):
    prog, _ = roundtrip(RICH_KERNEL)
    assert not [d for d in validate_kernel(prog, cfg_a)
                if d.severity == "error"]
    out = np.zeros((2, 4, 4), np.int8)
    scratch = np.zeros((4, 4), np.int32)
    bufs, _ = run_functional(prog, cfg_a, {"out": out, "scratch": scratch})
    got = bufs["out"].reshape(2, 4, 4)
    assert got[0, 0, 1] == 15          # 0xFFFFFFFF >> 28
    assert got[0, 0, 2] == 2
    assert bufs["scratch"].reshape(4, 4)[3][3] == 19   # 15 + sizeof(int32_t)


def test_syntax_error_reports_position():
    prog, diags = parse_kernel("void test(int8_t a[1][1]) {\n  a[0][0] = ;\n}\n")
    assert prog is None
    err = next(d for d in diags if d.severity == "error")
    assert err.code == "syntax"
    assert err.line == 2
    assert err.col > 0
    assert str(err).startswith("error:2:")


def test_single_function_per_unit():
    # One function of any name is accepted (verification keys on the
    # parameter list, not the name); trailing junk after it is not.
    prog, diags = parse_kernel("void other(int8_t a[1][1]) { a[0][0] = 1; }")
    assert prog is not None and prog.name == "other"
    prog, diags = parse_kernel(
        "void test(int8_t a[1][1]) { a[0][0] = 1; }\n"
        "void again(int8_t a[1][1]) { a[0][0] = 2; }\n")
    assert prog is None
    assert any(d.severity == "error" for d in diags)


@pytest.mark.parametrize("src,code", [
    ("void test(int8_t a[1][1]) { a[0][0] = b; }", "undeclared"),
    ("void test(int8_t a[1][1]) { int x = 1; int x = 2; a[0][0] = x; }",
     "duplicate"),
    ("void test(int8_t a[1][1]) { frobnicate(a, 1); }", "unknown-intrinsic"),
])
def test_validator_diagnostic_codes(src, code, cfg_a):
    prog, diags = parse_kernel(src)
    if prog is not None:
        diags = diags + validate_kernel(prog, cfg_a)
    assert any(d.severity == "error" and d.code == code for d in diags), \
        [str(d) for d in diags]


def test_intrinsic_arity_checked(cfg_a):
    prog, diags = parse_kernel(
        "void test(int8_t a[4][4]) { mvin(a, 0, 4); }")
    if prog is not None:
        diags = diags + validate_kernel(prog, cfg_a)
    assert any(d.severity == "error" for d in diags)


def test_variable_length_array_rejected():
    prog, diags = parse_kernel(
        "void test(int n, int8_t a[n][4]) { a[0][0] = 1; }")
    assert any(d.severity == "error" for d in diags)


def test_intrinsic_tables_consistent():
    for name in ("mvin", "mvin2", "mvin3", "mvout", "preload",
                 "compute_preloaded", "compute_accumulated", "fence",
                 "config_ex", "config_ld", "config_st"):
        assert name in ACCEL_INSTRUCTIONS
        assert name in INTRINSICS
    assert "negate_matrix" in CPU_HELPERS
    assert "add_matrix" in CPU_HELPERS
    assert "WEIGHT_STATIONARY" in BUILTIN_CONSTANTS
    assert "NO_ACTIVATION" in BUILTIN_CONSTANTS


class TestExtractCodeBlock:
    def test_fenced_with_language(self):
        text = "Here you go:\n```c\nvoid test(int8_t a[1][1]) { a[0][0] = 1; }\n```\nDone."
        got = extract_code_block(text)
        assert got is not None
        assert "void test" in got
        assert "```" not in got

    def test_last_entry_block_wins(self):
        text = ("```\nvoid test(int8_t a[1][1]) { a[0][0] = 1; }\n```\n"
                "but actually:\n"
                "```\nvoid test(int8_t a[1][1]) { a[0][0] = 2; }\n```\n")
        got = extract_code_block(text)
        assert "= 2" in got

    def test_bare_definition_without_fence(self):
        text = ("The rewritten kernel:\n"
                "void test(int8_t a[1][1]) {\n  a[0][0] = 3;\n}\n"
                "That should be faster.")
        got = extract_code_block(text)
        assert got is not None
        assert got.strip().startswith("void test")
        assert got.rstrip().endswith("}")

    def test_nothing_to_extract(self):
        assert extract_code_block("I cannot help with that.") is None
        assert extract_code_block("") is None

    def test_fence_without_entry_ignored(self):
        text = ("```\nint helper() { return 1; }\n```\n"
                "void test(int8_t a[1][1]) { a[0][0] = 4; }\n")
        got = extract_code_block(text)
        assert got is not None and "helper" not in got


# -- property tests ----------------------------------------------------------

expr_node = st.recursive(
    st.integers(0, 1 << 16),
    lambda child: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "&", "|", "^"]),
                  child, child),
        st.tuples(st.just("<<"), child, st.integers(0, 8)),
        st.tuples(st.just("?:"), child, child, child),
    ),
    max_leaves=10,
)

_WRAP = 1 << 64


def _wrap64(x):
    return ((x + (1 << 63)) % _WRAP) - (1 << 63)


def render_expr(n):
    if isinstance(n, int):
        return str(n)
    op = n[0]
    if op == "?:":
        a, b, c = (render_expr(x) for x in n[1:])
        return f"((({a}) > ({b})) ? ({a}) : ({c}))"
    if op == "<<":
        return f"(({render_expr(n[1])}) << {n[2]})"
    return f"(({render_expr(n[1])}) {op} ({render_expr(n[2])}))"


def eval_expr(n):
    if isinstance(n, int):
        return n
    op = n[0]
    if op == "?:":
        a, b, c = (eval_expr(x) for x in n[1:])
        return a if a > b else c
    if op == "<<":
        return _wrap64(eval_expr(n[1]) << (n[2] & 63))
    a, b = eval_expr(n[1]), eval_expr(n[2])
    ops = {"+": a + b, "-": a - b, "*": a * b,
           "&": a & b, "|": a | b, "^": a ^ b}
    return _wrap64(ops[op])


@given(expr_node)
@settings(max_examples=80, deadline=None)
def test_expression_semantics_match_reference(node):
    """Interpreted integer arithmetic agrees with a direct evaluation of
    the same expression tree under 64-bit wraparound."""
    src = ("void test(int32_t out[1][1]) {\n"
           f"  int_fast32_t v = {render_expr(node)};\n"
           "  out[0][0] = v;\n"
           "}\n")
    prog, first = roundtrip(src)
    bufs, _ = run_functional(prog, instance_a(),
                             {"out": np.zeros((1, 1), np.int32)})
    expected = ((eval_expr(node) & 0xFFFFFFFF) ^ 0x80000000) - 0x80000000
    assert int(bufs["out"][0, 0]) == expected


@given(expr_node, st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_printer_fixed_point(node, rows, step):
    src = ("void test(int8_t out[8][8]) {\n"
           f"  for (int i = 0; i < {rows}; i += {step}) "
           "{\n"
           f"    out[i][0] = (int8_t) ({render_expr(node)});\n"
           "  }\n"
           "}\n")
    roundtrip(src)
