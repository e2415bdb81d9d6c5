"""Pure-Python execution engine for lowered kernels.

Interprets the flat op stream produced by ``lower_kernel`` and models the
accelerator's local memories, systolic array, and three-controller timing
pipeline. The compiled engine (``_engine_cy``) implements the same contract;
the two must agree bit-for-bit on buffers, counters, and events.

Semantics notes that both engines share:

* Scalar expressions evaluate in 64-bit signed integers with wrap-around;
  division and modulo truncate toward zero as in C.
* int8 accelerators accumulate exactly in int32 with modular wrap-around;
  accumulator-to-element conversion rounds half-to-even and saturates.
* float32 accelerators accumulate in float32 with the reduction dimension
  innermost, so results are reproducible across engines.
* Timing uses one in-order reservation queue of bounded depth feeding three
  controllers (load / execute / store); instructions start once their
  controller is free and all row-level hazards on the scratchpad and
  accumulator have drained. DRAM-side dependences are not tracked: execution
  is sequential and functionally exact, so this only makes overlapping
  timings slightly optimistic for DRAM round-trips.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from . import counters as ct
from .addresses import (
    ACC_BIT,
    ACCUMULATE_BIT,
    FULL_WIDTH_BIT,
    GARBAGE_ADDR,
    ROW_MASK,
)
from .errors import SimulationError
from .lower import (
    ADD,
    ARG_FCONST,
    ARG_REG,
    ARR_ZERO,
    BAND,
    BNOT,
    BOR,
    BXOR,
    CALL,
    CAST_I8,
    CAST_I32,
    CAST_U32,
    CONST,
    DIV,
    EQ,
    GE,
    GT,
    HALT,
    INTRINSIC_IDS,
    INTRINSIC_NAMES,
    JMP,
    JNZ,
    JZ,
    LAND,
    LE,
    LNOT,
    LOAD_ARR,
    LOR,
    LT,
    LoweredProgram,
    MOD,
    MOV,
    MUL,
    NE,
    NEG,
    SELECT,
    SHL,
    SHR,
    STORE_ARR,
    SUB,
)

NODE_LIMIT = 1_000_000_000

_M64 = (1 << 64) - 1
_H64 = 1 << 63
_P64 = 1 << 64
_M32 = 0xFFFFFFFF

CTRL_LOAD = 0
CTRL_EX = 1
CTRL_STORE = 2
CTRL_NAMES = ("load", "ex", "store")

_ID_CONFIG_EX = INTRINSIC_IDS["config_ex"]
_ID_CONFIG_LD = INTRINSIC_IDS["config_ld"]
_ID_CONFIG_ST = INTRINSIC_IDS["config_st"]
_ID_MVIN = INTRINSIC_IDS["mvin"]
_ID_MVIN2 = INTRINSIC_IDS["mvin2"]
_ID_MVIN3 = INTRINSIC_IDS["mvin3"]
_ID_MVOUT = INTRINSIC_IDS["mvout"]
_ID_PRELOAD = INTRINSIC_IDS["preload"]
_ID_COMPUTE_PRE = INTRINSIC_IDS["compute_preloaded"]
_ID_COMPUTE_ACC = INTRINSIC_IDS["compute_accumulated"]
_ID_FENCE = INTRINSIC_IDS["fence"]
_ID_NEGATE = INTRINSIC_IDS["negate_matrix"]
_ID_ADD_MAT = INTRINSIC_IDS["add_matrix"]
_EXECUTABLE_IDS = frozenset({
    _ID_CONFIG_EX, _ID_CONFIG_LD, _ID_CONFIG_ST, _ID_MVIN, _ID_MVIN2,
    _ID_MVIN3, _ID_MVOUT, _ID_PRELOAD, _ID_COMPUTE_PRE, _ID_COMPUTE_ACC,
    _ID_FENCE, _ID_NEGATE, _ID_ADD_MAT,
})


def _op_tuples(low: LoweredProgram) -> list[tuple[int, ...]]:
    cached = getattr(low, "_py_ops", None)
    if cached is None:
        cached = [tuple(int(v) for v in row) for row in low.ops]
        low._py_ops = cached
    return cached


def _argv_tuples(low: LoweredProgram) -> list[tuple[int, int, int]]:
    cached = getattr(low, "_py_argv", None)
    if cached is None:
        cached = [tuple(int(v) for v in row) for row in low.argv]
        low._py_argv = cached
    return cached


class _Machine:
    def __init__(self, low: LoweredProgram, arrays: list[np.ndarray],
                 timed: bool, record_events: bool):
        cfg = low.cfg
        tp = cfg.timing
        self.low = low
        self.cfg = cfg
        self.arrays = arrays
        self.byte_views = [a.view(np.uint8) for a in arrays]
        self.arr_sizes = [int(a.size) for a in arrays]
        self.store_codes = [info.dtype_code for info in low.arrays]

        self.dim = cfg.dim
        self.is_float = cfg.is_float
        self.elem_bytes = cfg.elem_bytes
        self.acc_bytes = cfg.acc_bytes
        self.n_spad_rows = cfg.spad_rows
        self.n_acc_rows = cfg.acc_rows
        self.spad = np.zeros((cfg.spad_rows, cfg.dim), dtype=cfg.elem_dtype)
        self.acc = np.zeros((cfg.acc_rows, cfg.dim), dtype=cfg.acc_dtype)
        lane = np.float32 if self.is_float else np.int64
        self.array_b = np.zeros((cfg.dim, cfg.dim), dtype=lane)
        self.lane_dtype = lane

        # mutable controller configuration; defaults before any config call
        self.ld = [[0, 1.0, 0], [0, 1.0, 0], [0, 1.0, 0]]  # stride, scale, block rows
        self.st = [0, 1.0]
        self.a_stride = 1
        self.descriptor = None  # (acc row, accumulate flag, C cols, C rows)

        self.timed = timed
        self.record_events = record_events
        self.cpu_node_cost = tp.cpu_node_cost
        self.issue_cost = tp.issue_cost
        self.config_cost = tp.config_cost
        self.dma_startup = tp.dma_startup
        self.bus = tp.bus_bytes_per_cycle
        self.fill = cfg.compute_fill
        self.queue_depth = tp.queue_depth
        self.fence_drain = tp.fence_drain_overhead

        self.cpu_t = 0
        self.nodes = 0
        self.n_instr = 0
        self.dma_in = 0
        self.dma_out = 0
        self.macs = 0
        self.kind_counts = [0] * ct.N_KINDS
        self.spad_written = np.zeros(cfg.spad_rows, dtype=bool)
        self.acc_written = np.zeros(cfg.acc_rows, dtype=bool)
        self.events: list[tuple] = []
        if timed:
            self.queue: deque[int] = deque()
            self.ctrl_end = [0, 0, 0]
            self.busy = [0, 0, 0]
            self.stall = [0, 0, 0]
            self.rd_spad = np.zeros(cfg.spad_rows, dtype=np.int64)
            self.wr_spad = np.zeros(cfg.spad_rows, dtype=np.int64)
            self.rd_acc = np.zeros(cfg.acc_rows, dtype=np.int64)
            self.wr_acc = np.zeros(cfg.acc_rows, dtype=np.int64)

    # -- timing -----------------------------------------------------------------

    def issue(self, ctrl: int, service: int, reads, writes, name: str) -> None:
        """Issue one accelerator instruction through the queue and controller.

        reads / writes are lists of (space, lo, hi) row ranges, space 0 being
        the scratchpad and 1 the accumulator.
        """
        self.n_instr += 1
        if not self.timed:
            return
        t = self.cpu_t + self.issue_cost
        q = self.queue
        while q and q[0] <= t:
            q.popleft()
        while len(q) >= self.queue_depth:
            head = q.popleft()
            if head > t:
                t = head
        self.cpu_t = t
        dispatch = t
        start = dispatch
        ce = self.ctrl_end[ctrl]
        if ce > start:
            start = ce
        for space, lo, hi in reads:
            if hi <= lo:
                continue
            wr = self.wr_spad if space == 0 else self.wr_acc
            m = int(wr[lo:hi].max())
            if m > start:
                start = m
        for space, lo, hi in writes:
            if hi <= lo:
                continue
            wr = self.wr_spad if space == 0 else self.wr_acc
            rd = self.rd_spad if space == 0 else self.rd_acc
            m = int(wr[lo:hi].max())
            if m > start:
                start = m
            m = int(rd[lo:hi].max())
            if m > start:
                start = m
        end = start + service
        self.stall[ctrl] += start - dispatch
        self.busy[ctrl] += service
        self.ctrl_end[ctrl] = end
        for space, lo, hi in reads:
            if hi <= lo:
                continue
            rd = self.rd_spad if space == 0 else self.rd_acc
            np.maximum(rd[lo:hi], end, out=rd[lo:hi])
        for space, lo, hi in writes:
            if hi <= lo:
                continue
            wr = self.wr_spad if space == 0 else self.wr_acc
            np.maximum(wr[lo:hi], end, out=wr[lo:hi])
        q.append(end)
        if self.record_events:
            rows = [("spad" if s == 0 else "acc", lo, hi, "r")
                    for s, lo, hi in reads if hi > lo]
            rows += [("spad" if s == 0 else "acc", lo, hi, "w")
                     for s, lo, hi in writes if hi > lo]
            self.events.append((self.n_instr - 1, name, CTRL_NAMES[ctrl],
                                dispatch, start, end, rows))

    def do_fence(self) -> None:
        self.n_instr += 1
        if not self.timed:
            return
        self.cpu_t += self.issue_cost
        dispatch = self.cpu_t
        drained = max(self.cpu_t, self.ctrl_end[0], self.ctrl_end[1],
                      self.ctrl_end[2])
        self.cpu_t = drained + self.fence_drain
        self.queue.clear()
        if self.record_events:
            self.events.append((self.n_instr - 1, "fence", "fence",
                                dispatch, dispatch, self.cpu_t, []))

    def _xfer_service(self, rows: int, cols: int, esize: int) -> int:
        per_row = (cols * esize + self.bus - 1) // self.bus
        if per_row < 1:
            per_row = 1
        return self.dma_startup + rows * per_row

    # -- DRAM access --------------------------------------------------------------

    def _dram_read(self, arr_id: int, off: int, rows: int, cols: int,
                   stride: int) -> np.ndarray:
        arr = self.arrays[arr_id]
        esize = arr.dtype.itemsize
        base = off * esize
        row_bytes = cols * esize
        if off < 0 or base + row_bytes > arr.nbytes or \
                base + (rows - 1) * stride + row_bytes > arr.nbytes:
            raise SimulationError(
                f"DRAM read out of bounds on {self.low.arrays[arr_id].name!r}")
        bv = self.byte_views[arr_id]
        if stride == row_bytes:
            return bv[base:base + rows * row_bytes].view(arr.dtype).reshape(rows, cols)
        out = np.empty((rows, cols), arr.dtype)
        for r in range(rows):
            s = base + r * stride
            out[r] = bv[s:s + row_bytes].view(arr.dtype)
        return out

    def _dram_write(self, arr_id: int, off: int, data: np.ndarray,
                    stride: int) -> None:
        arr = self.arrays[arr_id]
        rows, cols = data.shape
        w = data.dtype.itemsize
        row_bytes = cols * w
        base = off * arr.dtype.itemsize
        if off < 0 or base + row_bytes > arr.nbytes or \
                base + (rows - 1) * stride + row_bytes > arr.nbytes:
            raise SimulationError(
                f"DRAM write out of bounds on {self.low.arrays[arr_id].name!r}")
        src = np.ascontiguousarray(data).view(np.uint8).reshape(rows, row_bytes)
        bv = self.byte_views[arr_id]
        for r in range(rows):
            s = base + r * stride
            bv[s:s + row_bytes] = src[r]

    # -- value conversion -----------------------------------------------------------

    def _to_elem(self, src: np.ndarray, scale: float) -> np.ndarray:
        if self.is_float:
            return src.astype(np.float32) * np.float32(scale)
        v = np.rint(src.astype(np.float64) * float(scale))
        np.clip(v, -128, 127, out=v)
        return v.astype(np.int8)

    def _to_acc(self, src: np.ndarray, scale: float) -> np.ndarray:
        if self.is_float:
            return src.astype(np.float32) * np.float32(scale)
        v = np.rint(src.astype(np.float64) * float(scale))
        np.clip(v, -(1 << 31), (1 << 31) - 1, out=v)
        return v.astype(np.int32)

    # -- instructions -----------------------------------------------------------------

    def do_config_ex(self, dataflow: int, act: int, a_stride: int,
                     a_transpose: int, b_transpose: int) -> None:
        if dataflow != 1:
            raise SimulationError("only the weight-stationary dataflow is supported")
        if act != 0:
            raise SimulationError("activation functions are not supported")
        if a_transpose or b_transpose:
            raise SimulationError("transposed operands are not supported")
        if a_stride < 1:
            raise SimulationError("A row stride must be at least 1")
        self.a_stride = a_stride
        self.issue(CTRL_EX, self.config_cost, [], [], "config_ex")

    def do_config_ld(self, stride: int, scale: float, block_stride: int,
                     ld_id: int) -> None:
        if ld_id not in (0, 1, 2):
            raise SimulationError("mvin stream id must be 0, 1, or 2")
        if stride < 0:
            raise SimulationError("negative DRAM stride")
        if block_stride < 0:
            raise SimulationError("negative scratchpad block stride")
        self.ld[ld_id] = [stride, float(scale), block_stride]
        self.issue(CTRL_LOAD, self.config_cost, [], [], "config_ld")

    def do_config_st(self, stride: int, scale: float) -> None:
        if stride < 0:
            raise SimulationError("negative DRAM stride")
        self.st = [stride, float(scale)]
        self.issue(CTRL_STORE, self.config_cost, [], [], "config_st")

    def do_mvin(self, ld_id: int, dram, local: int, cols: int, rows: int,
                name: str) -> None:
        stride, scale, block_stride = self.ld[ld_id]
        if rows < 0 or cols < 0:
            raise SimulationError("negative transfer size")
        dim = self.dim
        if rows > dim:
            raise SimulationError(f"{name} moves more than {dim} rows")
        raw = local & _M32
        is_acc = bool(raw & ACC_BIT)
        accumulate = bool(raw & ACCUMULATE_BIT)
        row0 = raw & ROW_MASK
        arr_id, off = dram
        zero_fill = arr_id < 0
        if zero_fill and cols > dim:
            raise SimulationError(f"zero-fill {name} wider than {dim} columns")

        if is_acc:
            if cols > dim:
                raise SimulationError(
                    f"{name} into the accumulator wider than {dim} columns")
            if row0 + rows > self.n_acc_rows:
                raise SimulationError(f"{name} beyond the end of the accumulator")
            if zero_fill:
                if rows and cols and not accumulate:
                    self.acc[row0:row0 + rows, :cols] = 0
                service = self.dma_startup + rows
            else:
                src = self._dram_read(arr_id, off, rows, cols, stride)
                conv = self._to_acc(src, scale)
                region = self.acc[row0:row0 + rows, :cols]
                if accumulate:
                    region += conv
                else:
                    region[:] = conv
                self.dma_in += rows * cols * self.acc_bytes
                service = self._xfer_service(rows, cols, self.acc_bytes)
            writes = []
            if rows and cols:
                self.acc_written[row0:row0 + rows] = True
                writes = [(1, row0, row0 + rows)]
            self.issue(CTRL_LOAD, service, [], writes, name)
            return

        if cols > 4 * dim:
            raise SimulationError(f"{name} wider than {4 * dim} columns")
        n_blocks = (cols + dim - 1) // dim
        writes = []
        for blk in range(n_blocks):
            b0 = row0 + blk * block_stride
            if b0 < 0 or b0 + rows > self.n_spad_rows:
                raise SimulationError(f"{name} beyond the end of the scratchpad")
            writes.append((0, b0, b0 + rows))
        if row0 + rows > self.n_spad_rows:
            raise SimulationError(f"{name} beyond the end of the scratchpad")
        if zero_fill:
            if rows and cols:
                self.spad[row0:row0 + rows, :cols] = 0
                self.spad_written[row0:row0 + rows] = True
            service = self.dma_startup + rows
        else:
            src = self._dram_read(arr_id, off, rows, cols, stride)
            conv = self._to_elem(src, scale)
            for blk in range(n_blocks):
                c0 = blk * dim
                bw = min(dim, cols - c0)
                b0 = row0 + blk * block_stride
                self.spad[b0:b0 + rows, :bw] = conv[:, c0:c0 + bw]
                self.spad_written[b0:b0 + rows] = True
            self.dma_in += rows * cols * self.elem_bytes
            service = self._xfer_service(rows, cols, self.elem_bytes)
        self.issue(CTRL_LOAD, service, [], writes, name)

    def do_mvout(self, dram, local: int, cols: int, rows: int) -> None:
        stride, scale = self.st
        arr_id, off = dram
        if arr_id < 0:
            raise SimulationError("mvout requires a DRAM destination")
        if rows < 0 or cols < 0:
            raise SimulationError("negative transfer size")
        dim = self.dim
        if rows > dim or cols > dim:
            raise SimulationError(f"mvout tile exceeds {dim}x{dim}")
        raw = local & _M32
        row0 = raw & ROW_MASK
        if raw & ACC_BIT:
            if row0 + rows > self.n_acc_rows:
                raise SimulationError("mvout beyond the end of the accumulator")
            vals = self.acc[row0:row0 + rows, :cols]
            if raw & FULL_WIDTH_BIT:
                out = vals.copy()
            elif self.is_float:
                out = vals * np.float32(scale)
            else:
                v = np.rint(vals.astype(np.float64) * float(scale))
                np.clip(v, -128, 127, out=v)
                out = v.astype(np.int8)
            reads = [(1, row0, row0 + rows)]
        else:
            if row0 + rows > self.n_spad_rows:
                raise SimulationError("mvout beyond the end of the scratchpad")
            out = self.spad[row0:row0 + rows, :cols].copy()
            reads = [(0, row0, row0 + rows)]
        self._dram_write(arr_id, off, out, stride)
        w = out.dtype.itemsize
        self.dma_out += rows * cols * w
        self.issue(CTRL_STORE, self._xfer_service(rows, cols, w), reads, [],
                   "mvout")

    def do_preload(self, bsp: int, cacc: int, b_cols: int, b_rows: int,
                   c_cols: int, c_rows: int) -> None:
        bsp &= _M32
        cacc &= _M32
        dim = self.dim
        if cacc == GARBAGE_ADDR:
            raise SimulationError("preload requires an accumulator destination")
        if not cacc & ACC_BIT:
            raise SimulationError("preload destination must be an accumulator address")
        if not (0 <= c_cols <= dim and 0 <= c_rows <= dim):
            raise SimulationError(f"preload C tile exceeds {dim}x{dim}")
        crow = cacc & ROW_MASK
        if crow + c_rows > self.n_acc_rows:
            raise SimulationError("preload C beyond the end of the accumulator")
        reads = []
        if bsp != GARBAGE_ADDR:
            if bsp & ACC_BIT:
                raise SimulationError("preload B must come from the scratchpad")
            if not (0 <= b_cols <= dim and 0 <= b_rows <= dim):
                raise SimulationError(f"preload B tile exceeds {dim}x{dim}")
            brow = bsp & ROW_MASK
            if brow + b_rows > self.n_spad_rows:
                raise SimulationError("preload B beyond the end of the scratchpad")
            self.array_b[:] = 0
            if b_rows and b_cols:
                self.array_b[:b_rows, :b_cols] = self.spad[brow:brow + b_rows, :b_cols]
            if b_rows:
                reads = [(0, brow, brow + b_rows)]
        self.descriptor = (crow, bool(cacc & ACCUMULATE_BIT), c_cols, c_rows)
        self.issue(CTRL_EX, self.fill, reads, [], "preload")

    def do_compute(self, name: str, asp: int, dsp: int, a_cols: int,
                   a_rows: int, d_cols: int, d_rows: int) -> None:
        if self.descriptor is None:
            raise SimulationError("compute issued before any preload")
        asp &= _M32
        dsp &= _M32
        dim = self.dim
        if asp == GARBAGE_ADDR:
            raise SimulationError("compute requires a scratchpad A address")
        if asp & ACC_BIT:
            raise SimulationError("compute A must come from the scratchpad")
        if not (0 <= a_cols <= dim and 0 <= a_rows <= dim):
            raise SimulationError(f"compute A tile exceeds {dim}x{dim}")
        arow = asp & ROW_MASK
        s = self.a_stride
        reads = []
        if a_rows:
            last = arow + (a_rows - 1) * s
            if last >= self.n_spad_rows:
                raise SimulationError("compute A beyond the end of the scratchpad")
            if s == 1:
                reads.append((0, arow, arow + a_rows))
            else:
                reads.extend((0, arow + r * s, arow + r * s + 1)
                             for r in range(a_rows))

        if self.is_float:
            p = np.zeros((dim, dim), dtype=np.float32)
        else:
            a_pad = np.zeros((dim, dim), dtype=np.int64)

        if dsp != GARBAGE_ADDR:
            if dsp & ACC_BIT:
                raise SimulationError("compute bias must come from the scratchpad")
            if not (0 <= d_cols <= dim and 0 <= d_rows <= dim):
                raise SimulationError(f"compute bias tile exceeds {dim}x{dim}")
            drow = dsp & ROW_MASK
            if drow + d_rows > self.n_spad_rows:
                raise SimulationError("compute bias beyond the end of the scratchpad")
            if d_rows and d_cols:
                block = self.spad[drow:drow + d_rows, :d_cols]
                if self.is_float:
                    p[:d_rows, :d_cols] = block
                else:
                    bias64 = block.astype(np.int64)
            if d_rows:
                reads.append((0, drow, drow + d_rows))

        crow, accumulate, cc, cr = self.descriptor
        if self.is_float:
            a_pad_f = np.zeros((dim, dim), dtype=np.float32)
            if a_rows and a_cols:
                idx = arow + np.arange(a_rows) * s
                a_pad_f[:a_rows, :a_cols] = self.spad[idx, :a_cols]
            b = self.array_b
            for k in range(dim):
                p += np.outer(a_pad_f[:, k], b[k])
            tile = p[:cr, :cc]
        else:
            if a_rows and a_cols:
                idx = arow + np.arange(a_rows) * s
                a_pad[:a_rows, :a_cols] = self.spad[idx, :a_cols]
            p64 = a_pad @ self.array_b
            if dsp != GARBAGE_ADDR and d_rows and d_cols:
                p64[:d_rows, :d_cols] += bias64
            tile = p64[:cr, :cc].astype(np.int32)

        if cr and cc:
            region = self.acc[crow:crow + cr, :cc]
            if accumulate:
                region += tile
            else:
                region[:] = tile
            self.acc_written[crow:crow + cr] = True
        self.macs += a_rows * cc * a_cols
        writes = [(1, crow, crow + cr)]
        self.issue(CTRL_EX, max(a_rows, 1), reads, writes, name)

    def _helper_block(self, dram, n: int, what: str):
        arr_id, off = dram
        if arr_id < 0:
            raise SimulationError(f"{what} requires array operands")
        if off < 0 or off + n > self.arr_sizes[arr_id]:
            raise SimulationError(f"{what} operand out of bounds on "
                                  f"{self.low.arrays[arr_id].name!r}")
        return self.arrays[arr_id][off:off + n]

    @staticmethod
    def _helper_store(dst: np.ndarray, vals: np.ndarray) -> None:
        if dst.dtype.kind == "f":
            dst[:] = vals.astype(np.float32)
        elif vals.dtype.kind == "f":
            # C float-to-int conversion: truncate toward zero, then wrap
            dst[:] = np.trunc(vals).astype(np.int64).astype(dst.dtype)
        else:
            dst[:] = vals.astype(dst.dtype)

    def do_negate_matrix(self, src, dst, rows: int, cols: int) -> None:
        if rows < 0 or cols < 0:
            raise SimulationError("negative matrix shape")
        n = rows * cols
        s = self._helper_block(src, n, "negate_matrix")
        d = self._helper_block(dst, n, "negate_matrix")
        if s.dtype.kind == "f" and d.dtype.kind == "f":
            vals = -s
        elif s.dtype.kind != "f" and d.dtype.kind != "f":
            vals = -s.astype(np.int64)
        else:
            vals = -s.astype(np.float64)
        self._helper_store(d, vals)
        if self.timed:
            self.cpu_t += n * self.cpu_node_cost

    def do_add_matrix(self, a, b, dst, rows: int, cols: int) -> None:
        if rows < 0 or cols < 0:
            raise SimulationError("negative matrix shape")
        n = rows * cols
        va = self._helper_block(a, n, "add_matrix")
        vb = self._helper_block(b, n, "add_matrix")
        d = self._helper_block(dst, n, "add_matrix")
        kinds = {va.dtype.kind, vb.dtype.kind, d.dtype.kind}
        if kinds == {"f"}:
            vals = va + vb
        elif "f" not in kinds:
            vals = va.astype(np.int64) + vb.astype(np.int64)
        else:
            vals = va.astype(np.float64) + vb.astype(np.float64)
        self._helper_store(d, vals)
        if self.timed:
            self.cpu_t += n * self.cpu_node_cost

    # -- dispatch ---------------------------------------------------------------------

    def call(self, iid: int, args: list) -> None:
        if iid < ct.N_KINDS:
            self.kind_counts[iid] += 1
        if iid == _ID_COMPUTE_PRE or iid == _ID_COMPUTE_ACC:
            name = "compute_preloaded" if iid == _ID_COMPUTE_PRE else "compute_accumulated"
            self.do_compute(name, *args)
        elif iid == _ID_PRELOAD:
            self.do_preload(*args)
        elif iid == _ID_MVIN:
            self.do_mvin(0, args[0], args[1], args[2], args[3], "mvin")
        elif iid == _ID_MVIN2:
            self.do_mvin(1, args[0], args[1], args[2], args[3], "mvin2")
        elif iid == _ID_MVIN3:
            self.do_mvin(2, args[0], args[1], args[2], args[3], "mvin3")
        elif iid == _ID_MVOUT:
            self.do_mvout(*args)
        elif iid == _ID_CONFIG_EX:
            self.do_config_ex(*args)
        elif iid == _ID_CONFIG_LD:
            stride, scale, block_stride, ld_id = args
            self.do_config_ld(stride, float(scale), block_stride, ld_id)
        elif iid == _ID_CONFIG_ST:
            stride, scale = args
            self.do_config_st(stride, float(scale))
        elif iid == _ID_FENCE:
            self.do_fence()
        elif iid == _ID_NEGATE:
            self.do_negate_matrix(*args)
        elif iid == _ID_ADD_MAT:
            self.do_add_matrix(*args)
        else:
            raise SimulationError(
                f"instruction {INTRINSIC_NAMES[iid]!r} cannot be executed by "
                f"this simulator")

    # -- interpreter ------------------------------------------------------------------

    def run(self) -> None:
        ops = _op_tuples(self.low)
        argv = _argv_tuples(self.low)
        fconsts = [float(v) for v in self.low.fconsts]
        regs = [0] * max(self.low.n_regs, 1)
        arrays = self.arrays
        sizes = self.arr_sizes
        codes = self.store_codes
        timed = self.timed
        node_cost = self.cpu_node_cost
        cpu_t = 0
        nodes = 0
        pc = 0
        while True:
            row = ops[pc]
            op = row[0]
            cost = row[5]
            if cost:
                nodes += cost
                if timed:
                    cpu_t += cost * node_cost
            pc += 1
            if op == CONST:
                regs[row[1]] = row[2]
            elif op == MOV:
                regs[row[1]] = regs[row[2]]
            elif op == ADD:
                v = (regs[row[2]] + regs[row[3]]) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == MUL:
                v = (regs[row[2]] * regs[row[3]]) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == LOAD_ARR:
                idx = regs[row[3]]
                if idx < 0 or idx >= sizes[row[2]]:
                    raise SimulationError(
                        f"index {idx} out of bounds on "
                        f"{self.low.arrays[row[2]].name!r}")
                regs[row[1]] = int(arrays[row[2]][idx])
            elif op == STORE_ARR:
                idx = regs[row[3]]
                arr_id = row[2]
                if idx < 0 or idx >= sizes[arr_id]:
                    raise SimulationError(
                        f"index {idx} out of bounds on "
                        f"{self.low.arrays[arr_id].name!r}")
                v = regs[row[4]]
                code = codes[arr_id]
                if code == 0:
                    arrays[arr_id][idx] = ((v & 0xFF) ^ 0x80) - 0x80
                elif code == 1:
                    arrays[arr_id][idx] = ((v & _M32) ^ 0x80000000) - 0x80000000
                elif code == 2:
                    arrays[arr_id][idx] = v & _M32
                elif code == 3:
                    # single int64->float32 rounding, as the compiled engine does
                    arrays[arr_id][idx] = np.int64(v)
                else:
                    arrays[arr_id][idx] = v
            elif op == JMP:
                t = row[1]
                if t < pc and nodes > NODE_LIMIT:
                    raise SimulationError(
                        "kernel exceeded the interpreter's work limit")
                pc = t
            elif op == JZ:
                if regs[row[1]] == 0:
                    t = row[2]
                    if t < pc and nodes > NODE_LIMIT:
                        raise SimulationError(
                            "kernel exceeded the interpreter's work limit")
                    pc = t
            elif op == JNZ:
                if regs[row[1]] != 0:
                    t = row[2]
                    if t < pc and nodes > NODE_LIMIT:
                        raise SimulationError(
                            "kernel exceeded the interpreter's work limit")
                    pc = t
            elif op == LT:
                regs[row[1]] = 1 if regs[row[2]] < regs[row[3]] else 0
            elif op == LE:
                regs[row[1]] = 1 if regs[row[2]] <= regs[row[3]] else 0
            elif op == GT:
                regs[row[1]] = 1 if regs[row[2]] > regs[row[3]] else 0
            elif op == GE:
                regs[row[1]] = 1 if regs[row[2]] >= regs[row[3]] else 0
            elif op == EQ:
                regs[row[1]] = 1 if regs[row[2]] == regs[row[3]] else 0
            elif op == NE:
                regs[row[1]] = 1 if regs[row[2]] != regs[row[3]] else 0
            elif op == CALL:
                iid = row[1]
                args = []
                for k in range(row[3]):
                    kind, x, y = argv[row[2] + k]
                    if kind == ARG_REG:
                        args.append(regs[x])
                    elif kind == ARG_FCONST:
                        args.append(fconsts[x])
                    else:
                        args.append((x, regs[y]))
                self.cpu_t = cpu_t
                self.nodes = nodes
                self.call(iid, args)
                cpu_t = self.cpu_t
            elif op == SUB:
                v = (regs[row[2]] - regs[row[3]]) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == DIV:
                x = regs[row[2]]
                y = regs[row[3]]
                if y == 0:
                    raise SimulationError("division by zero")
                q = -(-x // y) if (x < 0) != (y < 0) else x // y
                q &= _M64
                regs[row[1]] = q - _P64 if q >= _H64 else q
            elif op == MOD:
                x = regs[row[2]]
                y = regs[row[3]]
                if y == 0:
                    raise SimulationError("modulo by zero")
                q = -(-x // y) if (x < 0) != (y < 0) else x // y
                v = (x - q * y) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == SHL:
                v = (regs[row[2]] << (regs[row[3]] & 63)) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == SHR:
                regs[row[1]] = regs[row[2]] >> (regs[row[3]] & 63)
            elif op == BAND:
                regs[row[1]] = regs[row[2]] & regs[row[3]]
            elif op == BOR:
                regs[row[1]] = regs[row[2]] | regs[row[3]]
            elif op == BXOR:
                regs[row[1]] = regs[row[2]] ^ regs[row[3]]
            elif op == LAND:
                regs[row[1]] = 1 if (regs[row[2]] != 0 and regs[row[3]] != 0) else 0
            elif op == LOR:
                regs[row[1]] = 1 if (regs[row[2]] != 0 or regs[row[3]] != 0) else 0
            elif op == NEG:
                v = (-regs[row[2]]) & _M64
                regs[row[1]] = v - _P64 if v >= _H64 else v
            elif op == BNOT:
                regs[row[1]] = ~regs[row[2]]
            elif op == LNOT:
                regs[row[1]] = 1 if regs[row[2]] == 0 else 0
            elif op == SELECT:
                regs[row[1]] = regs[row[3]] if regs[row[2]] != 0 else regs[row[4]]
            elif op == CAST_U32:
                regs[row[1]] = regs[row[2]] & _M32
            elif op == CAST_I32:
                v = regs[row[2]] & _M32
                regs[row[1]] = v - 0x100000000 if v >= 0x80000000 else v
            elif op == CAST_I8:
                v = regs[row[2]] & 0xFF
                regs[row[1]] = v - 0x100 if v >= 0x80 else v
            elif op == ARR_ZERO:
                arrays[row[1]][:] = 0
            elif op == HALT:
                break
            else:
                raise SimulationError(f"corrupt program: unknown op {op}")
        self.cpu_t = cpu_t
        self.nodes = nodes

    def finish(self) -> tuple[np.ndarray, list]:
        out = np.zeros(ct.N_COUNTERS, dtype=np.int64)
        if self.timed:
            total = max(self.cpu_t, self.ctrl_end[0], self.ctrl_end[1],
                        self.ctrl_end[2])
            out[ct.TOTAL_CYCLES] = total
            out[ct.CPU_CYCLES] = self.cpu_t
            out[ct.LOAD_BUSY] = self.busy[0]
            out[ct.EXEC_BUSY] = self.busy[1]
            out[ct.STORE_BUSY] = self.busy[2]
            out[ct.LOAD_STALL] = self.stall[0]
            out[ct.EXEC_STALL] = self.stall[1]
            out[ct.STORE_STALL] = self.stall[2]
        out[ct.N_INSTR] = self.n_instr
        out[ct.DMA_BYTES_IN] = self.dma_in
        out[ct.DMA_BYTES_OUT] = self.dma_out
        out[ct.MACS] = self.macs
        out[ct.SPAD_ROWS] = int(self.spad_written.sum())
        out[ct.ACC_ROWS] = int(self.acc_written.sum())
        out[ct.NODE_COUNT] = self.nodes
        for i, n in enumerate(self.kind_counts):
            out[ct.KIND_BASE + i] = n
        return out, self.events


def execute(low: LoweredProgram, arrays: list[np.ndarray], timed: bool = True,
            record_events: bool = False) -> tuple[np.ndarray, list]:
    """Run a lowered kernel against the given DRAM buffers.

    ``arrays`` is index-aligned with ``low.arrays`` and is mutated in place.
    Returns the performance-counter vector and the event list (empty unless
    ``record_events``).
    """
    m = _Machine(low, arrays, timed, record_events)
    m.run()
    return m.finish()
