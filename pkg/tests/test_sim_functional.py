"""Functional-simulation semantics, plus pure-Python / compiled engine parity.

Every `run_both` test executes the same lowered kernel on both engines and
insists on bit-identical buffers, counters, and events before checking the
result itself — the two implementations serve as each other's oracle.
"""

import numpy as np
import pytest

from tensopt.dsl import parse_kernel
from tensopt.sim import (
    ACC_BIT,
    ACCUMULATE_BIT,
    FULL_WIDTH_BIT,
    GARBAGE_ADDR,
    ROW_MASK,
    available_backends,
    decode_local_address,
    encode_local_address,
    instance_a,
    instance_b,
    is_garbage,
    lower_kernel,
    make_buffers,
    run_functional,
)
from tensopt.sim import engine_py
from tensopt.sim.errors import SimulationError

_engine_cy = pytest.importorskip("tensopt.sim._engine_cy")

A = instance_a()
B = instance_b()


def run_both(src, cfg, inputs, expect_error=None):
    prog, diags = parse_kernel(src)
    assert prog is not None, [str(d) for d in diags]
    low = lower_kernel(prog, cfg)
    results = []
    for mod in (engine_py, _engine_cy):
        bufs = make_buffers(low, inputs)
        try:
            counters, events = mod.execute(low, bufs, timed=True,
                                           record_events=True)
            results.append((bufs, counters, events, None))
        except SimulationError as e:
            results.append((None, None, None, str(e)))
    (b1, c1, e1, err1), (b2, c2, e2, err2) = results
    assert err1 == err2, f"error mismatch: py={err1!r} compiled={err2!r}"
    if expect_error is not None:
        assert err1 is not None and expect_error in err1, \
            f"expected {expect_error!r}, got {err1!r}"
        return None
    assert err1 is None, err1
    for x, y in zip(b1, b2):
        assert np.array_equal(x.view(np.uint8).ravel(),
                              y.view(np.uint8).ravel())
    assert np.array_equal(c1, c2)
    assert e1 == e2
    return b1


def test_both_backends_available():
    names = available_backends()
    assert "python" in names
    assert "compiled" in names


class TestLocalAddresses:
    def test_bit_layout(self):
        assert ACC_BIT == 1 << 31
        assert ACCUMULATE_BIT == 1 << 30
        assert FULL_WIDTH_BIT == 1 << 29
        assert ROW_MASK == (1 << 29) - 1
        assert GARBAGE_ADDR == 0xFFFFFFFF

    def test_roundtrip(self):
        raw = encode_local_address(row=37, acc=True, accumulate=True)
        dec = decode_local_address(raw)
        assert (dec.row, dec.acc, dec.accumulate) == (37, True, True)
        assert not dec.full_width

    def test_spad_row_passthrough(self):
        dec = decode_local_address(1234)
        assert dec.row == 1234
        assert not dec.acc and not dec.accumulate

    def test_garbage(self):
        assert is_garbage(GARBAGE_ADDR)
        assert not is_garbage(ACC_BIT | 5)


class TestMakeBuffers:
    def setup_method(self):
        src = "void test(int8_t a[4][4], int8_t b[4][4]) { b[0][0] = a[0][0]; }"
        prog, _ = parse_kernel(src)
        self.low = lower_kernel(prog, A)

    def test_unknown_input(self):
        with pytest.raises(ValueError, match="unknown input"):
            make_buffers(self.low, {"a": np.zeros((4, 4), np.int8),
                                    "b": np.zeros((4, 4), np.int8),
                                    "c": np.zeros((4, 4), np.int8)})

    def test_missing_input(self):
        with pytest.raises(ValueError, match="missing input"):
            make_buffers(self.low, {"a": np.zeros((4, 4), np.int8)})

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            make_buffers(self.low, {"a": np.zeros((4, 5), np.int8),
                                    "b": np.zeros((4, 4), np.int8)})

    def test_dtype_mismatch(self):
        with pytest.raises(ValueError, match="dtype"):
            make_buffers(self.low, {"a": np.zeros((4, 4), np.int32),
                                    "b": np.zeros((4, 4), np.int8)})

    def test_caller_arrays_not_mutated(self):
        a = np.arange(16, dtype=np.int8).reshape(4, 4)
        bufs = make_buffers(self.low, {"a": a, "b": np.zeros((4, 4), np.int8)})
        bufs[0][:] = 99
        assert a[0, 0] == 0


# -- scalar/CPU semantics, identical across engines --------------------------

def test_integer_edge_semantics():
    """64-bit wraparound, masked shifts, trunc-toward-zero division."""
    src = """
void test(int8_t out[32][1]) {
  int_fast32_t big = 1;
  for (int i = 0; i < 63; i++) { big = big * 2; }
  int_fast32_t q = big / (0 - 1);
  int_fast32_t m = big % (0 - 1);
  int_fast32_t s1 = 1 << 65;
  int_fast32_t s2 = (0 - 8) >> 1;
  int_fast32_t s3 = big >> 63;
  uint32_t u = 4294967295;
  int c1 = u;
  int8_t c2 = 255;
  int_fast32_t dv = (0 - 7) / 2;
  int_fast32_t md = (0 - 7) % 2;
  out[0][0] = q != big;
  out[1][0] = m;
  out[2][0] = s1;
  out[3][0] = s2;
  out[4][0] = s3;
  out[5][0] = c1;
  out[6][0] = c2;
  out[7][0] = dv;
  out[8][0] = md;
  out[9][0] = (3 > 2) ? 7 : 9;
  out[10][0] = !5;
  out[11][0] = ~0;
  out[12][0] = (1 && 0) | (1 || 0);
}
"""
    b = run_both(src, A, {"out": np.zeros((32, 1), np.int8)})
    got = b[0].reshape(32)[:13].tolist()
    assert got == [0, 0, 2, -4, -1, -1, -1, -3, -1, 7, 0, -1, 1]


def test_division_by_zero_trapped():
    run_both("""
void test(int8_t out[1][1]) {
  int_fast32_t z = 0;
  out[0][0] = 5 / z;
}
""", A, {"out": np.zeros((1, 1), np.int8)}, expect_error="division by zero")


def test_dram_read_out_of_bounds():
    run_both("""
void test(int8_t A[4][4], int8_t out[4][4]) {
  config_ld(4, 1.0f, 0, 0);
  mvin(&A[2][0], 0, 4, 4);
}
""", A, {"A": np.zeros((4, 4), np.int8), "out": np.zeros((4, 4), np.int8)},
        expect_error="DRAM read out of bounds on 'A'")


def test_runaway_loop_guard(monkeypatch):
    monkeypatch.setattr(engine_py, "NODE_LIMIT", 50_000)
    src = """
void test(int8_t out[1][1]) {
  int_fast32_t acc = 0;
  for (int i = 0; i < 100000000; i++) {
    acc += i;
  }
  out[0][0] = acc;
}
"""
    prog, _ = parse_kernel(src)
    with pytest.raises(SimulationError, match="work limit"):
        run_functional(prog, A, {"out": np.zeros((1, 1), np.int8)},
                       backend="py")


# -- data movement ------------------------------------------------------------

def test_accumulator_mvin_accumulate_and_mvout_scaling():
    src = """
void test(int32_t bias[4][16], int32_t full[4][16], int8_t narrow[4][16]) {
  config_ex(WEIGHT_STATIONARY, NO_ACTIVATION, 1, false, false);
  config_ld(64, 1.0f, 0, 0);
  uint32_t acc0 = 1 << 31;
  uint32_t accum = acc0 | (1 << 30);
  mvin(bias, acc0, 16, 4);
  mvin(bias, accum, 16, 4);
  config_st(64);
  uint32_t fw = acc0 | (1 << 29);
  mvout(full, fw, 16, 4);
  config_st(16, 0.25f);
  mvout(narrow, acc0, 16, 4);
}
"""
    rng = np.random.default_rng(0)
    bias = rng.integers(-600, 600, size=(4, 16)).astype(np.int32)
    b = run_both(src, A, {"bias": bias,
                          "full": np.zeros((4, 16), np.int32),
                          "narrow": np.zeros((4, 16), np.int8)})
    assert np.array_equal(b[1].reshape(4, 16), 2 * bias)
    expect = np.clip(np.rint(2 * bias * 0.25), -128, 127).astype(np.int8)
    assert np.array_equal(b[2].reshape(4, 16), expect)


def test_zero_fill_mvin():
    src = """
void test(int32_t out[4][16]) {
  config_ld(64, 1.0f, 0, 0);
  uint32_t acc0 = 1 << 31;
  mvin(out, acc0, 16, 4);
  mvin(0, acc0, 16, 4);
  config_st(64);
  uint32_t fw = acc0 | (1 << 29);
  mvout(out, fw, 16, 4);
}
"""
    start = np.full((4, 16), 7, np.int32)
    b = run_both(src, A, {"out": start})
    assert np.array_equal(b[0].reshape(4, 16), np.zeros((4, 16), np.int32))


def test_wide_mvin_uses_block_layout():
    """A 64-column load lands as four DIM-wide blocks, block_stride rows
    apart in the scratchpad."""
    src = """
void test(int8_t A[16][64], int8_t out[64][16]) {
  config_ld(64, 1.0f, 8, 1);
  mvin2(A, 0, 64, 16);
  config_st(16);
  mvout(&out[0][0], 0, 16, 16);
  mvout(&out[16][0], 8, 16, 16);
  mvout(&out[32][0], 16, 16, 16);
  mvout(&out[48][0], 24, 16, 16);
}
"""
    rng = np.random.default_rng(3)
    a = rng.integers(-128, 128, size=(16, 64), dtype=np.int8)
    b = run_both(src, A, {"A": a, "out": np.zeros((64, 16), np.int8)})
    got = b[1].reshape(64, 16)
    for blk in range(4):
        assert np.array_equal(got[16 * blk:16 * blk + 16],
                              a[:, 16 * blk:16 * blk + 16])


def test_mvin_row_limit_enforced():
    run_both("""
void test(int8_t A[32][16]) {
  config_ld(16, 1.0f, 0, 0);
  mvin(A, 0, 16, 17);
}
""", A, {"A": np.zeros((32, 16), np.int8)}, expect_error="rows")


def test_acc_mvin_width_limit():
    run_both("""
void test(int32_t A[16][32]) {
  config_ld(128, 1.0f, 0, 0);
  uint32_t acc0 = 1 << 31;
  mvin(A, acc0, 32, 4);
}
""", A, {"A": np.zeros((16, 32), np.int32)}, expect_error="col")


# -- the systolic array -------------------------------------------------------

def gemm_tile_source(accumulate_second=False):
    op = "compute_accumulated" if accumulate_second else "compute_preloaded"
    return """
void test(int8_t A[16][16], int8_t W[16][16], int8_t out[16][16]) {
  config_ex(WEIGHT_STATIONARY, NO_ACTIVATION, 1, false, false);
  config_ld(16, 1.0f, 0, 0);
  config_st(16);
  uint32_t acc0 = 1 << 31;
  uint32_t garb = ~((uint32_t) 0);
  mvin(A, 0, 16, 16);
  mvin(W, 16, 16, 16);
  mvin(0, acc0, 16, 16);
  preload(16, acc0 | (1 << 30), 16, 16, 16, 16);
  %s(0, garb, 16, 16, 16, 16);
  fence();
  mvout(out, acc0, 16, 16);
}
""" % op


def test_single_tile_matmul_matches_numpy():
    rng = np.random.default_rng(11)
    a = rng.integers(-128, 128, size=(16, 16), dtype=np.int8)
    w = rng.integers(-128, 128, size=(16, 16), dtype=np.int8)
    b = run_both(gemm_tile_source(), A,
                 {"A": a, "W": w, "out": np.zeros((16, 16), np.int8)})
    acc = a.astype(np.int32) @ w.astype(np.int32)
    expect = np.clip(np.rint(acc), -128, 127).astype(np.int8)
    assert np.array_equal(b[2].reshape(16, 16), expect)


def test_compute_accumulated_reuses_loaded_weights():
    """compute_accumulated after a preload keeps the same weights, so two
    back-to-back computes double the product."""
    src = """
void test(int8_t A[16][16], int8_t W[16][16], int32_t out[16][16]) {
  config_ex(WEIGHT_STATIONARY, NO_ACTIVATION, 1, false, false);
  config_ld(16, 1.0f, 0, 0);
  config_ld(64, 1.0f, 0, 1);
  config_st(64);
  uint32_t acc0 = 1 << 31;
  uint32_t garb = ~((uint32_t) 0);
  mvin(A, 0, 16, 16);
  mvin(W, 16, 16, 16);
  mvin(0, acc0, 16, 16);
  preload(16, acc0 | (1 << 30), 16, 16, 16, 16);
  compute_preloaded(0, garb, 16, 16, 16, 16);
  compute_accumulated(0, garb, 16, 16, 16, 16);
  fence();
  uint32_t fw = acc0 | (1 << 29);
  mvout(out, fw, 16, 16);
}
"""
    rng = np.random.default_rng(12)
    a = rng.integers(-8, 8, size=(16, 16), dtype=np.int8)
    w = rng.integers(-8, 8, size=(16, 16), dtype=np.int8)
    b = run_both(src, A, {"A": a, "W": w,
                          "out": np.zeros((16, 16), np.int32)})
    expect = 2 * (a.astype(np.int32) @ w.astype(np.int32))
    assert np.array_equal(b[2].reshape(16, 16), expect)


def test_a_stride_skips_rows():
    src = """
void test(float A[8][4], float B[4][4], float C[8][4]) {
  config_ex(WEIGHT_STATIONARY, NO_ACTIVATION, 2, false, false);
  config_ld(16, 1.0f, 0, 0);
  config_st(16);
  mvin(A, 0, 4, 4);
  mvin(&A[4][0], 4, 4, 4);
  mvin(B, 16, 4, 4);
  mvin(0, 32, 4, 4);
  uint32_t acc0 = 1 << 31;
  preload(16, acc0, 4, 4, 4, 4);
  compute_preloaded(0, 32, 4, 4, 4, 4);
  fence();
  mvout(C, acc0, 4, 4);
}
"""
    rng = np.random.default_rng(4)
    af = rng.uniform(-1, 1, size=(8, 4)).astype(np.float32)
    bf = rng.uniform(-1, 1, size=(4, 4)).astype(np.float32)
    b = run_both(src, B, {"A": af, "B": bf,
                          "C": np.zeros((8, 4), np.float32)})
    expect = np.zeros((4, 4), np.float32)
    for k in range(4):
        expect += np.outer(af[::2][:, k], bf[k])
    assert np.array_equal(b[2].reshape(8, 4)[:4], expect)


def test_preload_requires_accumulator_destination():
    run_both("""
void test(int8_t a[1][1]) {
  uint32_t g = 0xFFFFFFFF;
  preload(0, g, 4, 4, 4, 4);
}
""", A, {"a": np.zeros((1, 1), np.int8)},
        expect_error="preload requires an accumulator destination")


def test_compute_before_preload_is_an_error():
    run_both("""
void test(int8_t a[1][1]) {
  compute_preloaded(0, 0, 4, 4, 4, 4);
}
""", A, {"a": np.zeros((1, 1), np.int8)},
        expect_error="compute issued before any preload")


# -- CPU helpers --------------------------------------------------------------

def test_negate_and_add_matrix_int():
    src = """
void test(int8_t a[4][4], int32_t b[4][4], int32_t c[4][4]) {
  static int32_t tmp[4][4];
  negate_matrix(a, tmp, 4, 4);
  add_matrix(tmp, b, c, 4, 4);
}
"""
    rng = np.random.default_rng(5)
    a = rng.integers(-128, 128, size=(4, 4), dtype=np.int8)
    bm = rng.integers(-2**31, 2**31 - 1, size=(4, 4), dtype=np.int32)
    b = run_both(src, A, {"a": a, "b": bm, "c": np.zeros((4, 4), np.int32)})
    expect = (-a.astype(np.int64) + bm.astype(np.int64)).astype(np.int32)
    assert np.array_equal(b[2].reshape(4, 4), expect)


def test_negate_matrix_float_to_int_truncates():
    src = """
void test(float a[2][2], int32_t c[2][2]) {
  static int32_t t[2][2];
  negate_matrix(a, t, 2, 2);
  add_matrix(t, t, c, 2, 2);
}
"""
    af = np.array([[1.7, -2.3], [0.5, -0.5]], np.float32)
    b = run_both(src, B, {"a": af, "c": np.zeros((2, 2), np.int32)})
    t = np.trunc(-af.astype(np.float64)).astype(np.int64).astype(np.int32)
    expect = (t.astype(np.int64) + t.astype(np.int64)).astype(np.int32)
    assert np.array_equal(b[1].reshape(2, 2), expect)


def test_functional_trace_counts():
    prog, _ = parse_kernel(gemm_tile_source())
    rng = np.random.default_rng(6)
    outputs, trace = run_functional(prog, A, {
        "A": rng.integers(-4, 4, size=(16, 16), dtype=np.int8),
        "W": rng.integers(-4, 4, size=(16, 16), dtype=np.int8),
        "out": np.zeros((16, 16), np.int8)})
    assert trace.instr_counts["mvin"] == 3
    assert trace.instr_counts["preload"] == 1
    assert trace.instr_counts["mvout"] == 1
    assert trace.macs == 16 * 16 * 16
    assert trace.dram_bytes_in == 2 * 16 * 16   # the zero-fill reads nothing
    assert trace.dram_bytes_out == 16 * 16
