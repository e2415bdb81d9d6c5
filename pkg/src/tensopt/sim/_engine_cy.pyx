# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled execution engine for lowered kernels.

C twin of ``engine_py``: same op stream, same machine model, same counters
and events, bit-for-bit.  The shared semantics (64-bit wrapping arithmetic,
C-style truncating division, exact int32 accumulation, k-innermost float32
accumulation, the three-controller timing pipeline, and the scratchpad/
accumulator-only hazard tracking) are documented in ``engine_py``; this
module only changes how fast they run.

Every constant that both engines rely on (opcodes, argv kinds, intrinsic
ids, counter indices) is read from the Python modules at import time, so
the two engines cannot drift apart silently.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport rint, trunc
from libc.stdint cimport (int8_t, int16_t, int32_t, int64_t, uint8_t,
                          uint32_t, uint64_t)
from libc.stdlib cimport calloc, free
from libc.string cimport memcpy, memset

from . import counters as _ct
from . import lower as _lw
from .errors import SimulationError

cnp.import_array()

# --- constants mirrored from the Python side at import time -------------------

cdef int64_t NODE_LIMIT = 1_000_000_000

cdef int OP_HALT = _lw.HALT
cdef int OP_CONST = _lw.CONST
cdef int OP_MOV = _lw.MOV
cdef int OP_ADD = _lw.ADD
cdef int OP_SUB = _lw.SUB
cdef int OP_MUL = _lw.MUL
cdef int OP_DIV = _lw.DIV
cdef int OP_MOD = _lw.MOD
cdef int OP_NEG = _lw.NEG
cdef int OP_SHL = _lw.SHL
cdef int OP_SHR = _lw.SHR
cdef int OP_BAND = _lw.BAND
cdef int OP_BOR = _lw.BOR
cdef int OP_BXOR = _lw.BXOR
cdef int OP_BNOT = _lw.BNOT
cdef int OP_LAND = _lw.LAND
cdef int OP_LOR = _lw.LOR
cdef int OP_LNOT = _lw.LNOT
cdef int OP_LT = _lw.LT
cdef int OP_LE = _lw.LE
cdef int OP_GT = _lw.GT
cdef int OP_GE = _lw.GE
cdef int OP_EQ = _lw.EQ
cdef int OP_NE = _lw.NE
cdef int OP_SELECT = _lw.SELECT
cdef int OP_JMP = _lw.JMP
cdef int OP_JZ = _lw.JZ
cdef int OP_JNZ = _lw.JNZ
cdef int OP_LOAD_ARR = _lw.LOAD_ARR
cdef int OP_STORE_ARR = _lw.STORE_ARR
cdef int OP_CALL = _lw.CALL
cdef int OP_CAST_U32 = _lw.CAST_U32
cdef int OP_CAST_I32 = _lw.CAST_I32
cdef int OP_CAST_I8 = _lw.CAST_I8
cdef int OP_ARR_ZERO = _lw.ARR_ZERO

cdef int ARG_REG = _lw.ARG_REG
cdef int ARG_FCONST = _lw.ARG_FCONST
cdef int ARG_DRAM = _lw.ARG_DRAM

cdef int ID_CONFIG_EX = _lw.INTRINSIC_IDS["config_ex"]
cdef int ID_CONFIG_LD = _lw.INTRINSIC_IDS["config_ld"]
cdef int ID_CONFIG_ST = _lw.INTRINSIC_IDS["config_st"]
cdef int ID_MVIN = _lw.INTRINSIC_IDS["mvin"]
cdef int ID_MVIN2 = _lw.INTRINSIC_IDS["mvin2"]
cdef int ID_MVIN3 = _lw.INTRINSIC_IDS["mvin3"]
cdef int ID_MVOUT = _lw.INTRINSIC_IDS["mvout"]
cdef int ID_PRELOAD = _lw.INTRINSIC_IDS["preload"]
cdef int ID_COMPUTE_PRE = _lw.INTRINSIC_IDS["compute_preloaded"]
cdef int ID_COMPUTE_ACC = _lw.INTRINSIC_IDS["compute_accumulated"]
cdef int ID_FENCE = _lw.INTRINSIC_IDS["fence"]
cdef int ID_NEGATE = _lw.INTRINSIC_IDS["negate_matrix"]
cdef int ID_ADD_MAT = _lw.INTRINSIC_IDS["add_matrix"]

cdef int N_KINDS = _ct.N_KINDS
cdef int N_COUNTERS = _ct.N_COUNTERS
cdef int C_TOTAL = _ct.TOTAL_CYCLES
cdef int C_CPU = _ct.CPU_CYCLES
cdef int C_NINSTR = _ct.N_INSTR
cdef int C_LBUSY = _ct.LOAD_BUSY
cdef int C_EBUSY = _ct.EXEC_BUSY
cdef int C_SBUSY = _ct.STORE_BUSY
cdef int C_LSTALL = _ct.LOAD_STALL
cdef int C_ESTALL = _ct.EXEC_STALL
cdef int C_SSTALL = _ct.STORE_STALL
cdef int C_DMA_IN = _ct.DMA_BYTES_IN
cdef int C_DMA_OUT = _ct.DMA_BYTES_OUT
cdef int C_MACS = _ct.MACS
cdef int C_SPAD_ROWS = _ct.SPAD_ROWS
cdef int C_ACC_ROWS = _ct.ACC_ROWS
cdef int C_NODES = _ct.NODE_COUNT
cdef int C_KIND_BASE = _ct.KIND_BASE

_INTRINSIC_NAMES = _lw.INTRINSIC_NAMES

cdef uint64_t GARBAGE = 0xFFFFFFFFUL
cdef uint64_t ACC_BIT = 0x80000000UL
cdef uint64_t ACCUM_BIT = 0x40000000UL
cdef uint64_t FULLW_BIT = 0x20000000UL
cdef uint64_t ROW_MASK = 0x1FFFFFFFUL

cdef enum:
    CTRL_LOAD = 0
    CTRL_EX = 1
    CTRL_STORE = 2

CTRL_NAMES = ("load", "ex", "store")

# dtype codes, from lower.py: 0=int8 1=int32 2=uint32 3=float32 4=int64
cdef int[5] _ESIZE
_ESIZE[0] = 1
_ESIZE[1] = 4
_ESIZE[2] = 4
_ESIZE[3] = 4
_ESIZE[4] = 8

cdef struct Range:
    int space      # 0 = scratchpad, 1 = accumulator
    int64_t lo
    int64_t hi


# --- element load/store helpers ------------------------------------------------
# memcpy into a local keeps unaligned access well-defined; gcc folds it to a
# single move.

cdef inline int64_t _load_i64(const char* p, int code) noexcept nogil:
    cdef int8_t v8
    cdef int32_t v32
    cdef uint32_t u32
    cdef float f32
    cdef int64_t v64
    if code == 0:
        memcpy(&v8, p, 1)
        return <int64_t>v8
    elif code == 1:
        memcpy(&v32, p, 4)
        return <int64_t>v32
    elif code == 2:
        memcpy(&u32, p, 4)
        return <int64_t>u32
    elif code == 3:
        memcpy(&f32, p, 4)
        return <int64_t>f32
    memcpy(&v64, p, 8)
    return v64


cdef inline double _load_f64(const char* p, int code) noexcept nogil:
    cdef int8_t v8
    cdef int32_t v32
    cdef uint32_t u32
    cdef float f32
    cdef int64_t v64
    if code == 0:
        memcpy(&v8, p, 1)
        return <double>v8
    elif code == 1:
        memcpy(&v32, p, 4)
        return <double>v32
    elif code == 2:
        memcpy(&u32, p, 4)
        return <double>u32
    elif code == 3:
        memcpy(&f32, p, 4)
        return <double>f32
    memcpy(&v64, p, 8)
    return <double>v64


cdef inline float _load_f32(const char* p, int code) noexcept nogil:
    cdef int8_t v8
    cdef int32_t v32
    cdef uint32_t u32
    cdef float f32
    cdef int64_t v64
    if code == 0:
        memcpy(&v8, p, 1)
        return <float>v8
    elif code == 1:
        memcpy(&v32, p, 4)
        return <float>v32
    elif code == 2:
        memcpy(&u32, p, 4)
        return <float>u32
    elif code == 3:
        memcpy(&f32, p, 4)
        return f32
    memcpy(&v64, p, 8)
    return <float>v64


cdef inline void _store_i64_wrapped(char* p, int code, int64_t v) noexcept nogil:
    """Store a 64-bit value into an element, wrapping like a C cast."""
    cdef int8_t v8
    cdef int32_t v32
    cdef uint32_t u32
    cdef float f32
    if code == 0:
        v8 = <int8_t><uint8_t>v
        memcpy(p, &v8, 1)
    elif code == 1:
        v32 = <int32_t><uint32_t>v
        memcpy(p, &v32, 4)
    elif code == 2:
        u32 = <uint32_t>v
        memcpy(p, &u32, 4)
    elif code == 3:
        f32 = <float>v
        memcpy(p, &f32, 4)
    else:
        memcpy(p, &v, 8)


cdef inline void _store_f64_cconv(char* p, int code, double v) noexcept nogil:
    """Store a double into an element with C conversion rules.

    Integer destinations truncate toward zero then wrap; float destinations
    round once to float32.
    """
    cdef float f32
    cdef int64_t v64
    if code == 3:
        f32 = <float>v
        memcpy(p, &f32, 4)
    else:
        v64 = <int64_t>trunc(v)
        _store_i64_wrapped(p, code, v64)


cdef inline int8_t _sat_i8(double v) noexcept nogil:
    if v <= -128.0:
        return -128
    if v >= 127.0:
        return 127
    return <int8_t>v


cdef inline int32_t _sat_i32(double v) noexcept nogil:
    if v <= -2147483648.0:
        return <int32_t>(-2147483647 - 1)
    if v >= 2147483647.0:
        return 2147483647
    return <int32_t>v


cdef class _Machine:
    cdef object low
    cdef list arrays            # DRAM buffers; python refs pin the memory
    cdef list byte_views        # uint8 views; also verify contiguity like engine_py
    cdef list events
    cdef object cfg

    cdef int n_arrays
    cdef char** arr_ptr
    cdef int* arr_code
    cdef int* arr_esize
    cdef int64_t* arr_size      # element counts
    cdef int64_t* arr_nbytes

    cdef int dim
    cdef bint is_float
    cdef int elem_bytes, acc_bytes
    cdef int64_t n_spad_rows, n_acc_rows
    cdef char* spad             # row-major (rows, dim) in the element type
    cdef char* acc              # row-major (rows, dim) in the accumulator type
    cdef int64_t* arrb_i64      # preloaded B in the lane's widened type
    cdef float* arrb_f32

    # controller configuration
    cdef int64_t ld_stride[3]
    cdef double ld_scale[3]
    cdef int64_t ld_block[3]
    cdef int64_t st_stride
    cdef double st_scale
    cdef int64_t a_stride
    cdef bint have_desc
    cdef int64_t desc_row
    cdef bint desc_acc
    cdef int64_t desc_cols, desc_rows

    # timing model
    cdef bint timed, record_events
    cdef int64_t cpu_node_cost, issue_cost, config_cost, dma_startup
    cdef int64_t bus, fill, fence_drain
    cdef int64_t queue_depth
    cdef int64_t cpu_t, nodes, n_instr, dma_in, dma_out, macs
    cdef int64_t* queue         # ring buffer of retirement times
    cdef int64_t q_cap, q_head, q_len
    cdef int64_t ctrl_end[3]
    cdef int64_t busy[3]
    cdef int64_t stall[3]
    cdef int64_t* rd_spad
    cdef int64_t* wr_spad
    cdef int64_t* rd_acc
    cdef int64_t* wr_acc
    cdef uint8_t* spad_written
    cdef uint8_t* acc_written
    cdef int64_t kind_counts[32]

    # scratch
    cdef Range* r_reads
    cdef Range* r_writes
    cdef int64_t* pad_i64
    cdef int64_t* p64
    cdef float* pad_f32
    cdef float* p_f32

    def __cinit__(self, low, list arrays, bint timed, bint record_events):
        cfg = low.cfg
        tp = cfg.timing
        self.low = low
        self.cfg = cfg
        self.arrays = arrays
        self.byte_views = [a.view(np.uint8) for a in arrays]
        self.events = []

        cdef Py_ssize_t i
        self.n_arrays = len(arrays)
        self.arr_ptr = <char**>calloc(max(self.n_arrays, 1), sizeof(char*))
        self.arr_code = <int*>calloc(max(self.n_arrays, 1), sizeof(int))
        self.arr_esize = <int*>calloc(max(self.n_arrays, 1), sizeof(int))
        self.arr_size = <int64_t*>calloc(max(self.n_arrays, 1), sizeof(int64_t))
        self.arr_nbytes = <int64_t*>calloc(max(self.n_arrays, 1), sizeof(int64_t))
        infos = low.arrays
        for i in range(self.n_arrays):
            a = arrays[i]
            self.arr_ptr[i] = <char*>cnp.PyArray_DATA(a)
            self.arr_code[i] = infos[i].dtype_code
            self.arr_esize[i] = _ESIZE[infos[i].dtype_code]
            self.arr_size[i] = a.size
            self.arr_nbytes[i] = a.nbytes

        self.dim = cfg.dim
        self.is_float = cfg.is_float
        self.elem_bytes = cfg.elem_bytes
        self.acc_bytes = cfg.acc_bytes
        self.n_spad_rows = cfg.spad_rows
        self.n_acc_rows = cfg.acc_rows
        self.spad = <char*>calloc(self.n_spad_rows * self.dim, self.elem_bytes)
        self.acc = <char*>calloc(self.n_acc_rows * self.dim, self.acc_bytes)
        if self.is_float:
            self.arrb_f32 = <float*>calloc(self.dim * self.dim, sizeof(float))
        else:
            self.arrb_i64 = <int64_t*>calloc(self.dim * self.dim, sizeof(int64_t))

        self.ld_stride[0] = self.ld_stride[1] = self.ld_stride[2] = 0
        self.ld_scale[0] = self.ld_scale[1] = self.ld_scale[2] = 1.0
        self.ld_block[0] = self.ld_block[1] = self.ld_block[2] = 0
        self.st_stride = 0
        self.st_scale = 1.0
        self.a_stride = 1
        self.have_desc = False

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
        memset(self.kind_counts, 0, sizeof(self.kind_counts))
        self.spad_written = <uint8_t*>calloc(self.n_spad_rows, 1)
        self.acc_written = <uint8_t*>calloc(self.n_acc_rows, 1)
        if timed:
            self.q_cap = self.queue_depth + 1
            self.queue = <int64_t*>calloc(self.q_cap, sizeof(int64_t))
            self.q_head = 0
            self.q_len = 0
            self.ctrl_end[0] = self.ctrl_end[1] = self.ctrl_end[2] = 0
            self.busy[0] = self.busy[1] = self.busy[2] = 0
            self.stall[0] = self.stall[1] = self.stall[2] = 0
            self.rd_spad = <int64_t*>calloc(self.n_spad_rows, sizeof(int64_t))
            self.wr_spad = <int64_t*>calloc(self.n_spad_rows, sizeof(int64_t))
            self.rd_acc = <int64_t*>calloc(self.n_acc_rows, sizeof(int64_t))
            self.wr_acc = <int64_t*>calloc(self.n_acc_rows, sizeof(int64_t))

        self.r_reads = <Range*>calloc(self.dim + 8, sizeof(Range))
        self.r_writes = <Range*>calloc(self.dim + 8, sizeof(Range))
        if self.is_float:
            self.pad_f32 = <float*>calloc(self.dim * self.dim, sizeof(float))
            self.p_f32 = <float*>calloc(self.dim * self.dim, sizeof(float))
        else:
            self.pad_i64 = <int64_t*>calloc(self.dim * self.dim, sizeof(int64_t))
            self.p64 = <int64_t*>calloc(self.dim * self.dim, sizeof(int64_t))

    def __dealloc__(self):
        free(self.arr_ptr)
        free(self.arr_code)
        free(self.arr_esize)
        free(self.arr_size)
        free(self.arr_nbytes)
        free(self.spad)
        free(self.acc)
        free(self.arrb_i64)
        free(self.arrb_f32)
        free(self.queue)
        free(self.rd_spad)
        free(self.wr_spad)
        free(self.rd_acc)
        free(self.wr_acc)
        free(self.spad_written)
        free(self.acc_written)
        free(self.r_reads)
        free(self.r_writes)
        free(self.pad_i64)
        free(self.p64)
        free(self.pad_f32)
        free(self.p_f32)

    # -- timing -----------------------------------------------------------------

    cdef int _issue(self, int ctrl, int64_t service, Range* reads, int n_reads,
                    Range* writes, int n_writes, object name) except -1:
        self.n_instr += 1
        if not self.timed:
            return 0
        cdef int64_t t = self.cpu_t + self.issue_cost
        cdef int64_t head
        while self.q_len and self.queue[self.q_head] <= t:
            self.q_head += 1
            if self.q_head == self.q_cap:
                self.q_head = 0
            self.q_len -= 1
        while self.q_len >= self.queue_depth:
            head = self.queue[self.q_head]
            self.q_head += 1
            if self.q_head == self.q_cap:
                self.q_head = 0
            self.q_len -= 1
            if head > t:
                t = head
        self.cpu_t = t
        cdef int64_t dispatch = t
        cdef int64_t start = t
        if self.ctrl_end[ctrl] > start:
            start = self.ctrl_end[ctrl]
        cdef int i
        cdef int64_t r
        cdef int64_t* wr
        cdef int64_t* rd
        for i in range(n_reads):
            if reads[i].hi <= reads[i].lo:
                continue
            wr = self.wr_spad if reads[i].space == 0 else self.wr_acc
            for r in range(reads[i].lo, reads[i].hi):
                if wr[r] > start:
                    start = wr[r]
        for i in range(n_writes):
            if writes[i].hi <= writes[i].lo:
                continue
            wr = self.wr_spad if writes[i].space == 0 else self.wr_acc
            rd = self.rd_spad if writes[i].space == 0 else self.rd_acc
            for r in range(writes[i].lo, writes[i].hi):
                if wr[r] > start:
                    start = wr[r]
                if rd[r] > start:
                    start = rd[r]
        cdef int64_t end = start + service
        self.stall[ctrl] += start - dispatch
        self.busy[ctrl] += service
        self.ctrl_end[ctrl] = end
        for i in range(n_reads):
            if reads[i].hi <= reads[i].lo:
                continue
            rd = self.rd_spad if reads[i].space == 0 else self.rd_acc
            for r in range(reads[i].lo, reads[i].hi):
                if rd[r] < end:
                    rd[r] = end
        for i in range(n_writes):
            if writes[i].hi <= writes[i].lo:
                continue
            wr = self.wr_spad if writes[i].space == 0 else self.wr_acc
            for r in range(writes[i].lo, writes[i].hi):
                if wr[r] < end:
                    wr[r] = end
        self.queue[(self.q_head + self.q_len) % self.q_cap] = end
        self.q_len += 1
        if self.record_events:
            rows = []
            for i in range(n_reads):
                if reads[i].hi > reads[i].lo:
                    rows.append(("spad" if reads[i].space == 0 else "acc",
                                 reads[i].lo, reads[i].hi, "r"))
            for i in range(n_writes):
                if writes[i].hi > writes[i].lo:
                    rows.append(("spad" if writes[i].space == 0 else "acc",
                                 writes[i].lo, writes[i].hi, "w"))
            self.events.append((self.n_instr - 1, name, CTRL_NAMES[ctrl],
                                dispatch, start, end, rows))
        return 0

    cdef int _fence(self) except -1:
        self.n_instr += 1
        if not self.timed:
            return 0
        self.cpu_t += self.issue_cost
        cdef int64_t dispatch = self.cpu_t
        cdef int64_t drained = self.cpu_t
        cdef int i
        for i in range(3):
            if self.ctrl_end[i] > drained:
                drained = self.ctrl_end[i]
        self.cpu_t = drained + self.fence_drain
        self.q_head = 0
        self.q_len = 0
        if self.record_events:
            self.events.append((self.n_instr - 1, "fence", "fence",
                                dispatch, dispatch, self.cpu_t, []))
        return 0

    cdef inline int64_t _xfer_service(self, int64_t rows, int64_t cols,
                                      int64_t esize) noexcept nogil:
        cdef int64_t per_row = (cols * esize + self.bus - 1) // self.bus
        if per_row < 1:
            per_row = 1
        return self.dma_startup + rows * per_row

    # -- DRAM bounds ------------------------------------------------------------

    cdef int _check_dram(self, int64_t arr_id, int64_t off, int64_t rows,
                         int64_t cols, int64_t stride, int64_t w,
                         bint is_write) except -1:
        """Bounds-check a strided DRAM access; w is the transfer element size.

        Offsets are in elements of the array's own type, as in engine_py.
        """
        cdef int64_t nbytes = self.arr_nbytes[arr_id]
        cdef int64_t esize = self.arr_esize[arr_id]
        cdef int64_t row_bytes = cols * w
        cdef bint bad = off < 0 or off > nbytes
        cdef int64_t base
        if not bad:
            base = off * esize
            if base + row_bytes > nbytes:
                bad = True
            elif rows > 1 and (stride > nbytes or
                               base + (rows - 1) * stride + row_bytes > nbytes):
                bad = True
        if bad:
            what = "write" if is_write else "read"
            raise SimulationError(
                f"DRAM {what} out of bounds on {self.low.arrays[arr_id].name!r}")
        return 0

    # -- instructions -------------------------------------------------------------

    cdef int _config_ex(self, int64_t dataflow, int64_t act, int64_t a_stride,
                        int64_t a_tr, int64_t b_tr) except -1:
        if dataflow != 1:
            raise SimulationError("only the weight-stationary dataflow is supported")
        if act != 0:
            raise SimulationError("activation functions are not supported")
        if a_tr or b_tr:
            raise SimulationError("transposed operands are not supported")
        if a_stride < 1:
            raise SimulationError("A row stride must be at least 1")
        self.a_stride = a_stride
        return self._issue(CTRL_EX, self.config_cost, NULL, 0, NULL, 0, "config_ex")

    cdef int _config_ld(self, int64_t stride, double scale, int64_t block,
                        int64_t ld_id) except -1:
        if ld_id < 0 or ld_id > 2:
            raise SimulationError("mvin stream id must be 0, 1, or 2")
        if stride < 0:
            raise SimulationError("negative DRAM stride")
        if block < 0:
            raise SimulationError("negative scratchpad block stride")
        self.ld_stride[ld_id] = stride
        self.ld_scale[ld_id] = scale
        self.ld_block[ld_id] = block
        return self._issue(CTRL_LOAD, self.config_cost, NULL, 0, NULL, 0, "config_ld")

    cdef int _config_st(self, int64_t stride, double scale) except -1:
        if stride < 0:
            raise SimulationError("negative DRAM stride")
        self.st_stride = stride
        self.st_scale = scale
        return self._issue(CTRL_STORE, self.config_cost, NULL, 0, NULL, 0, "config_st")

    cdef int _mvin(self, int ld_id, int64_t arr_id, int64_t off, int64_t local,
                   int64_t cols, int64_t rows, object name) except -1:
        cdef int64_t stride = self.ld_stride[ld_id]
        cdef double scale = self.ld_scale[ld_id]
        cdef int64_t block_stride = self.ld_block[ld_id]
        if rows < 0 or cols < 0:
            raise SimulationError("negative transfer size")
        cdef int dim = self.dim
        if rows > dim:
            raise SimulationError(f"{name} moves more than {dim} rows")
        cdef uint64_t raw = (<uint64_t>local) & 0xFFFFFFFFUL
        cdef bint is_acc = (raw & ACC_BIT) != 0
        cdef bint accumulate = (raw & ACCUM_BIT) != 0
        cdef int64_t row0 = <int64_t>(raw & ROW_MASK)
        cdef bint zero_fill = arr_id < 0
        if zero_fill and cols > dim:
            raise SimulationError(f"zero-fill {name} wider than {dim} columns")

        cdef int64_t service, r, c, b0, c0, bw, n_blocks, blk
        cdef int64_t esize
        cdef const char* sp
        cdef const char* rp
        cdef char* dst
        cdef int code
        cdef float fv
        cdef int32_t iv
        cdef int32_t* acc32
        cdef float* accf
        cdef int n_writes = 0

        if is_acc:
            if cols > dim:
                raise SimulationError(
                    f"{name} into the accumulator wider than {dim} columns")
            if row0 + rows > self.n_acc_rows:
                raise SimulationError(f"{name} beyond the end of the accumulator")
            if zero_fill:
                if rows and cols and not accumulate:
                    for r in range(rows):
                        memset(self.acc + ((row0 + r) * dim) * self.acc_bytes,
                               0, cols * self.acc_bytes)
                service = self.dma_startup + rows
            else:
                self._check_dram(arr_id, off, rows, cols, stride,
                                 self.arr_esize[arr_id], False)
                esize = self.arr_esize[arr_id]
                code = self.arr_code[arr_id]
                sp = self.arr_ptr[arr_id] + off * esize
                for r in range(rows):
                    rp = sp + r * stride
                    if self.is_float:
                        accf = (<float*>self.acc) + (row0 + r) * dim
                        for c in range(cols):
                            fv = _load_f32(rp + c * esize, code) * <float>scale
                            if accumulate:
                                accf[c] = accf[c] + fv
                            else:
                                accf[c] = fv
                    else:
                        acc32 = (<int32_t*>self.acc) + (row0 + r) * dim
                        for c in range(cols):
                            iv = _sat_i32(rint(_load_f64(rp + c * esize, code) * scale))
                            if accumulate:
                                acc32[c] = <int32_t>(<uint32_t>acc32[c] + <uint32_t>iv)
                            else:
                                acc32[c] = iv
                self.dma_in += rows * cols * self.acc_bytes
                service = self._xfer_service(rows, cols, self.acc_bytes)
            if rows and cols:
                for r in range(rows):
                    self.acc_written[row0 + r] = 1
                self.r_writes[0].space = 1
                self.r_writes[0].lo = row0
                self.r_writes[0].hi = row0 + rows
                n_writes = 1
            return self._issue(CTRL_LOAD, service, NULL, 0,
                               self.r_writes, n_writes, name)

        if cols > 4 * dim:
            raise SimulationError(f"{name} wider than {4 * dim} columns")
        n_blocks = (cols + dim - 1) // dim
        for blk in range(n_blocks):
            if blk and block_stride > self.n_spad_rows:
                raise SimulationError(f"{name} beyond the end of the scratchpad")
            b0 = row0 + blk * block_stride
            if b0 < 0 or b0 + rows > self.n_spad_rows:
                raise SimulationError(f"{name} beyond the end of the scratchpad")
            self.r_writes[n_writes].space = 0
            self.r_writes[n_writes].lo = b0
            self.r_writes[n_writes].hi = b0 + rows
            n_writes += 1
        if row0 + rows > self.n_spad_rows:
            raise SimulationError(f"{name} beyond the end of the scratchpad")
        if zero_fill:
            if rows and cols:
                for r in range(rows):
                    memset(self.spad + ((row0 + r) * dim) * self.elem_bytes,
                           0, cols * self.elem_bytes)
                    self.spad_written[row0 + r] = 1
            service = self.dma_startup + rows
        else:
            self._check_dram(arr_id, off, rows, cols, stride,
                             self.arr_esize[arr_id], False)
            esize = self.arr_esize[arr_id]
            code = self.arr_code[arr_id]
            sp = self.arr_ptr[arr_id] + off * esize
            for blk in range(n_blocks):
                c0 = blk * dim
                bw = cols - c0
                if bw > dim:
                    bw = dim
                b0 = row0 + blk * block_stride
                for r in range(rows):
                    rp = sp + r * stride + c0 * esize
                    if self.is_float:
                        accf = (<float*>self.spad) + (b0 + r) * dim
                        for c in range(bw):
                            accf[c] = _load_f32(rp + c * esize, code) * <float>scale
                    else:
                        dst = self.spad + (b0 + r) * dim
                        for c in range(bw):
                            (<int8_t*>dst)[c] = _sat_i8(
                                rint(_load_f64(rp + c * esize, code) * scale))
                    self.spad_written[b0 + r] = 1
            self.dma_in += rows * cols * self.elem_bytes
            service = self._xfer_service(rows, cols, self.elem_bytes)
        return self._issue(CTRL_LOAD, service, NULL, 0, self.r_writes, n_writes, name)

    cdef int _mvout(self, int64_t arr_id, int64_t off, int64_t local,
                    int64_t cols, int64_t rows) except -1:
        cdef int64_t stride = self.st_stride
        cdef double scale = self.st_scale
        if arr_id < 0:
            raise SimulationError("mvout requires a DRAM destination")
        if rows < 0 or cols < 0:
            raise SimulationError("negative transfer size")
        cdef int dim = self.dim
        if rows > dim or cols > dim:
            raise SimulationError(f"mvout tile exceeds {dim}x{dim}")
        cdef uint64_t raw = (<uint64_t>local) & 0xFFFFFFFFUL
        cdef int64_t row0 = <int64_t>(raw & ROW_MASK)
        cdef bint from_acc = (raw & ACC_BIT) != 0
        cdef bint full_width = (raw & FULLW_BIT) != 0

        cdef int64_t w
        cdef int space
        if from_acc:
            if row0 + rows > self.n_acc_rows:
                raise SimulationError("mvout beyond the end of the accumulator")
            w = self.acc_bytes if full_width else self.elem_bytes
            space = 1
        else:
            if row0 + rows > self.n_spad_rows:
                raise SimulationError("mvout beyond the end of the scratchpad")
            w = self.elem_bytes
            space = 0
        self._check_dram(arr_id, off, rows, cols, stride, w, True)

        cdef char* base = self.arr_ptr[arr_id] + off * self.arr_esize[arr_id]
        cdef char* dp
        cdef const char* src_row
        cdef int64_t r, c
        cdef float fv
        cdef int8_t v8
        for r in range(rows):
            dp = base + r * stride
            if from_acc:
                if full_width:
                    memcpy(dp, self.acc + ((row0 + r) * dim) * self.acc_bytes,
                           cols * self.acc_bytes)
                elif self.is_float:
                    for c in range(cols):
                        fv = (<float*>self.acc)[(row0 + r) * dim + c] * <float>scale
                        memcpy(dp + c * 4, &fv, 4)
                else:
                    for c in range(cols):
                        v8 = _sat_i8(rint(
                            <double>(<int32_t*>self.acc)[(row0 + r) * dim + c] * scale))
                        memcpy(dp + c, &v8, 1)
            else:
                memcpy(dp, self.spad + ((row0 + r) * dim) * self.elem_bytes,
                       cols * self.elem_bytes)
        self.dma_out += rows * cols * w
        self.r_reads[0].space = space
        self.r_reads[0].lo = row0
        self.r_reads[0].hi = row0 + rows
        return self._issue(CTRL_STORE, self._xfer_service(rows, cols, w),
                           self.r_reads, 1, NULL, 0, "mvout")

    cdef int _preload(self, int64_t bsp_in, int64_t cacc_in, int64_t b_cols,
                      int64_t b_rows, int64_t c_cols, int64_t c_rows) except -1:
        cdef uint64_t bsp = (<uint64_t>bsp_in) & 0xFFFFFFFFUL
        cdef uint64_t cacc = (<uint64_t>cacc_in) & 0xFFFFFFFFUL
        cdef int dim = self.dim
        if cacc == GARBAGE:
            raise SimulationError("preload requires an accumulator destination")
        if not (cacc & ACC_BIT):
            raise SimulationError("preload destination must be an accumulator address")
        if not (0 <= c_cols <= dim and 0 <= c_rows <= dim):
            raise SimulationError(f"preload C tile exceeds {dim}x{dim}")
        cdef int64_t crow = <int64_t>(cacc & ROW_MASK)
        if crow + c_rows > self.n_acc_rows:
            raise SimulationError("preload C beyond the end of the accumulator")
        cdef int n_reads = 0
        cdef int64_t brow, r, c
        if bsp != GARBAGE:
            if bsp & ACC_BIT:
                raise SimulationError("preload B must come from the scratchpad")
            if not (0 <= b_cols <= dim and 0 <= b_rows <= dim):
                raise SimulationError(f"preload B tile exceeds {dim}x{dim}")
            brow = <int64_t>(bsp & ROW_MASK)
            if brow + b_rows > self.n_spad_rows:
                raise SimulationError("preload B beyond the end of the scratchpad")
            if self.is_float:
                memset(self.arrb_f32, 0, dim * dim * sizeof(float))
                for r in range(b_rows):
                    for c in range(b_cols):
                        self.arrb_f32[r * dim + c] = \
                            (<float*>self.spad)[(brow + r) * dim + c]
            else:
                memset(self.arrb_i64, 0, dim * dim * sizeof(int64_t))
                for r in range(b_rows):
                    for c in range(b_cols):
                        self.arrb_i64[r * dim + c] = \
                            <int64_t>(<int8_t*>self.spad)[(brow + r) * dim + c]
            if b_rows:
                self.r_reads[0].space = 0
                self.r_reads[0].lo = brow
                self.r_reads[0].hi = brow + b_rows
                n_reads = 1
        self.desc_row = crow
        self.desc_acc = (cacc & ACCUM_BIT) != 0
        self.desc_cols = c_cols
        self.desc_rows = c_rows
        self.have_desc = True
        return self._issue(CTRL_EX, self.fill, self.r_reads, n_reads,
                           NULL, 0, "preload")

    cdef int _compute(self, object name, int64_t asp_in, int64_t dsp_in,
                      int64_t a_cols, int64_t a_rows, int64_t d_cols,
                      int64_t d_rows) except -1:
        if not self.have_desc:
            raise SimulationError("compute issued before any preload")
        cdef uint64_t asp = (<uint64_t>asp_in) & 0xFFFFFFFFUL
        cdef uint64_t dsp = (<uint64_t>dsp_in) & 0xFFFFFFFFUL
        cdef int dim = self.dim
        if asp == GARBAGE:
            raise SimulationError("compute requires a scratchpad A address")
        if asp & ACC_BIT:
            raise SimulationError("compute A must come from the scratchpad")
        if not (0 <= a_cols <= dim and 0 <= a_rows <= dim):
            raise SimulationError(f"compute A tile exceeds {dim}x{dim}")
        cdef int64_t arow = <int64_t>(asp & ROW_MASK)
        cdef int64_t s = self.a_stride
        cdef int n_reads = 0
        cdef int64_t r, c, k, i, j, row
        if a_rows:
            if a_rows > 1 and s > self.n_spad_rows:
                raise SimulationError("compute A beyond the end of the scratchpad")
            if arow + (a_rows - 1) * s >= self.n_spad_rows:
                raise SimulationError("compute A beyond the end of the scratchpad")
            if s == 1:
                self.r_reads[0].space = 0
                self.r_reads[0].lo = arow
                self.r_reads[0].hi = arow + a_rows
                n_reads = 1
            else:
                for r in range(a_rows):
                    self.r_reads[n_reads].space = 0
                    self.r_reads[n_reads].lo = arow + r * s
                    self.r_reads[n_reads].hi = arow + r * s + 1
                    n_reads += 1

        cdef bint has_bias = dsp != GARBAGE
        cdef int64_t drow = 0
        if has_bias:
            if dsp & ACC_BIT:
                raise SimulationError("compute bias must come from the scratchpad")
            if not (0 <= d_cols <= dim and 0 <= d_rows <= dim):
                raise SimulationError(f"compute bias tile exceeds {dim}x{dim}")
            drow = <int64_t>(dsp & ROW_MASK)
            if drow + d_rows > self.n_spad_rows:
                raise SimulationError("compute bias beyond the end of the scratchpad")
            if d_rows:
                self.r_reads[n_reads].space = 0
                self.r_reads[n_reads].lo = drow
                self.r_reads[n_reads].hi = drow + d_rows
                n_reads += 1

        cdef int64_t crow = self.desc_row
        cdef bint accumulate = self.desc_acc
        cdef int64_t cc = self.desc_cols
        cdef int64_t cr = self.desc_rows
        cdef float av
        cdef float* pf
        cdef float* spf
        cdef float* accf
        cdef int32_t* acc32
        cdef int32_t t32
        cdef uint64_t acc_u
        if self.is_float:
            memset(self.p_f32, 0, dim * dim * sizeof(float))
            if has_bias and d_rows and d_cols:
                spf = <float*>self.spad
                for r in range(d_rows):
                    for c in range(d_cols):
                        self.p_f32[r * dim + c] = spf[(drow + r) * dim + c]
            memset(self.pad_f32, 0, dim * dim * sizeof(float))
            if a_rows and a_cols:
                spf = <float*>self.spad
                for r in range(a_rows):
                    row = arow + r * s
                    for c in range(a_cols):
                        self.pad_f32[r * dim + c] = spf[row * dim + c]
            pf = self.p_f32
            for k in range(dim):
                for i in range(dim):
                    av = self.pad_f32[i * dim + k]
                    for j in range(dim):
                        pf[i * dim + j] = pf[i * dim + j] + av * self.arrb_f32[k * dim + j]
            if cr and cc:
                accf = <float*>self.acc
                for i in range(cr):
                    for j in range(cc):
                        if accumulate:
                            accf[(crow + i) * dim + j] = \
                                accf[(crow + i) * dim + j] + pf[i * dim + j]
                        else:
                            accf[(crow + i) * dim + j] = pf[i * dim + j]
                for i in range(cr):
                    self.acc_written[crow + i] = 1
        else:
            memset(self.pad_i64, 0, dim * dim * sizeof(int64_t))
            if a_rows and a_cols:
                for r in range(a_rows):
                    row = arow + r * s
                    for c in range(a_cols):
                        self.pad_i64[r * dim + c] = \
                            <int64_t>(<int8_t*>self.spad)[row * dim + c]
            for i in range(dim):
                for j in range(dim):
                    acc_u = 0
                    for k in range(dim):
                        acc_u += (<uint64_t>self.pad_i64[i * dim + k]) * \
                                 (<uint64_t>self.arrb_i64[k * dim + j])
                    self.p64[i * dim + j] = <int64_t>acc_u
            if has_bias and d_rows and d_cols:
                for r in range(d_rows):
                    for c in range(d_cols):
                        self.p64[r * dim + c] = <int64_t>(
                            <uint64_t>self.p64[r * dim + c] +
                            <uint64_t><int64_t>(<int8_t*>self.spad)[(drow + r) * dim + c])
            if cr and cc:
                acc32 = <int32_t*>self.acc
                for i in range(cr):
                    for j in range(cc):
                        t32 = <int32_t><uint32_t>self.p64[i * dim + j]
                        if accumulate:
                            acc32[(crow + i) * dim + j] = <int32_t>(
                                <uint32_t>acc32[(crow + i) * dim + j] + <uint32_t>t32)
                        else:
                            acc32[(crow + i) * dim + j] = t32
                for i in range(cr):
                    self.acc_written[crow + i] = 1
        self.macs += a_rows * cc * a_cols
        self.r_writes[0].space = 1
        self.r_writes[0].lo = crow
        self.r_writes[0].hi = crow + cr
        cdef int64_t service = a_rows if a_rows > 1 else 1
        return self._issue(CTRL_EX, service, self.r_reads, n_reads,
                           self.r_writes, 1, name)

    # -- CPU matrix helpers ---------------------------------------------------------

    cdef int _helper_check(self, int64_t arr_id, int64_t off, int64_t n,
                           object what) except -1:
        if arr_id < 0:
            raise SimulationError(f"{what} requires array operands")
        cdef int64_t size = self.arr_size[arr_id]
        if off < 0 or off > size or n > size - off:
            raise SimulationError(f"{what} operand out of bounds on "
                                  f"{self.low.arrays[arr_id].name!r}")
        return 0

    cdef int _negate_matrix(self, int64_t s_id, int64_t s_off, int64_t d_id,
                            int64_t d_off, int64_t rows, int64_t cols) except -1:
        if rows < 0 or cols < 0:
            raise SimulationError("negative matrix shape")
        cdef int64_t n
        if rows and cols > <int64_t>0x3FFFFFFFFFFFFFFF / rows:
            n = <int64_t>0x7FFFFFFFFFFFFFFF  # certainly out of bounds below
        else:
            n = rows * cols
        self._helper_check(s_id, s_off, n, "negate_matrix")
        self._helper_check(d_id, d_off, n, "negate_matrix")
        cdef int sc = self.arr_code[s_id]
        cdef int dc = self.arr_code[d_id]
        cdef const char* sp = self.arr_ptr[s_id] + s_off * self.arr_esize[s_id]
        cdef char* dp = self.arr_ptr[d_id] + d_off * self.arr_esize[d_id]
        cdef int se = self.arr_esize[s_id]
        cdef int de = self.arr_esize[d_id]
        cdef int64_t i
        cdef float f32
        if sc == 3 and dc == 3:
            for i in range(n):
                f32 = -_load_f32(sp + i * 4, 3)
                memcpy(dp + i * 4, &f32, 4)
        elif sc != 3 and dc != 3:
            for i in range(n):
                _store_i64_wrapped(dp + i * de, dc,
                                   <int64_t>(0 - <uint64_t>_load_i64(sp + i * se, sc)))
        else:
            for i in range(n):
                _store_f64_cconv(dp + i * de, dc, -_load_f64(sp + i * se, sc))
        if self.timed:
            self.cpu_t += n * self.cpu_node_cost
        return 0

    cdef int _add_matrix(self, int64_t a_id, int64_t a_off, int64_t b_id,
                         int64_t b_off, int64_t d_id, int64_t d_off,
                         int64_t rows, int64_t cols) except -1:
        if rows < 0 or cols < 0:
            raise SimulationError("negative matrix shape")
        cdef int64_t n
        if rows and cols > <int64_t>0x3FFFFFFFFFFFFFFF / rows:
            n = <int64_t>0x7FFFFFFFFFFFFFFF
        else:
            n = rows * cols
        self._helper_check(a_id, a_off, n, "add_matrix")
        self._helper_check(b_id, b_off, n, "add_matrix")
        self._helper_check(d_id, d_off, n, "add_matrix")
        cdef int ac = self.arr_code[a_id]
        cdef int bc = self.arr_code[b_id]
        cdef int dc = self.arr_code[d_id]
        cdef const char* ap = self.arr_ptr[a_id] + a_off * self.arr_esize[a_id]
        cdef const char* bp = self.arr_ptr[b_id] + b_off * self.arr_esize[b_id]
        cdef char* dp = self.arr_ptr[d_id] + d_off * self.arr_esize[d_id]
        cdef int ae = self.arr_esize[a_id]
        cdef int be = self.arr_esize[b_id]
        cdef int de = self.arr_esize[d_id]
        cdef int64_t i
        cdef float f32
        if ac == 3 and bc == 3 and dc == 3:
            for i in range(n):
                f32 = _load_f32(ap + i * 4, 3) + _load_f32(bp + i * 4, 3)
                memcpy(dp + i * 4, &f32, 4)
        elif ac != 3 and bc != 3 and dc != 3:
            for i in range(n):
                _store_i64_wrapped(
                    dp + i * de, dc,
                    <int64_t>(<uint64_t>_load_i64(ap + i * ae, ac) +
                              <uint64_t>_load_i64(bp + i * be, bc)))
        else:
            for i in range(n):
                _store_f64_cconv(dp + i * de, dc,
                                 _load_f64(ap + i * ae, ac) +
                                 _load_f64(bp + i * be, bc))
        if self.timed:
            self.cpu_t += n * self.cpu_node_cost
        return 0

    # -- interpreter ------------------------------------------------------------------

    cdef int _run(self) except -1:
        cdef int64_t[:, ::1] ops = self.low.ops
        cdef int64_t[:, ::1] argv = self.low.argv
        cdef double[::1] fconsts = self.low.fconsts
        cdef Py_ssize_t n_regs = self.low.n_regs
        if n_regs < 1:
            n_regs = 1
        cdef int64_t* regs = <int64_t*>calloc(n_regs, sizeof(int64_t))
        if regs == NULL:
            raise MemoryError()
        try:
            self._loop(ops, argv, fconsts, regs)
        finally:
            free(regs)
        return 0

    cdef int _loop(self, int64_t[:, ::1] ops, int64_t[:, ::1] argv,
                   double[::1] fconsts, int64_t* regs) except -1:
        cdef bint timed = self.timed
        cdef int64_t node_cost = self.cpu_node_cost
        cdef int64_t cpu_t = 0
        cdef int64_t nodes = 0
        cdef int64_t pc = 0
        cdef int op
        cdef int64_t a, b, c, d, cost
        cdef int64_t v, x, y, q, t, idx
        cdef int aid, code
        cdef char* p

        # CALL argument decode buffers; the widest signature has 23 entries
        cdef int k, argc, kd
        cdef int64_t iv[24]
        cdef int64_t ov[24]
        cdef double fv[24]

        while True:
            op = <int>ops[pc, 0]
            a = ops[pc, 1]
            b = ops[pc, 2]
            c = ops[pc, 3]
            d = ops[pc, 4]
            cost = ops[pc, 5]
            if cost:
                nodes += cost
                if timed:
                    cpu_t += cost * node_cost
            pc += 1
            if op == OP_CONST:
                regs[a] = b
            elif op == OP_MOV:
                regs[a] = regs[b]
            elif op == OP_ADD:
                regs[a] = <int64_t>(<uint64_t>regs[b] + <uint64_t>regs[c])
            elif op == OP_MUL:
                regs[a] = <int64_t>(<uint64_t>regs[b] * <uint64_t>regs[c])
            elif op == OP_LOAD_ARR:
                idx = regs[c]
                if idx < 0 or idx >= self.arr_size[b]:
                    raise SimulationError(
                        f"index {idx} out of bounds on "
                        f"{self.low.arrays[b].name!r}")
                regs[a] = _load_i64(self.arr_ptr[b] + idx * self.arr_esize[b],
                                    self.arr_code[b])
            elif op == OP_STORE_ARR:
                idx = regs[c]
                aid = <int>b
                if idx < 0 or idx >= self.arr_size[aid]:
                    raise SimulationError(
                        f"index {idx} out of bounds on "
                        f"{self.low.arrays[aid].name!r}")
                _store_i64_wrapped(
                    self.arr_ptr[aid] + idx * self.arr_esize[aid],
                    self.arr_code[aid], regs[d])
            elif op == OP_JMP:
                if a < pc and nodes > NODE_LIMIT:
                    raise SimulationError(
                        "kernel exceeded the interpreter's work limit")
                pc = a
            elif op == OP_JZ:
                if regs[a] == 0:
                    if b < pc and nodes > NODE_LIMIT:
                        raise SimulationError(
                            "kernel exceeded the interpreter's work limit")
                    pc = b
            elif op == OP_JNZ:
                if regs[a] != 0:
                    if b < pc and nodes > NODE_LIMIT:
                        raise SimulationError(
                            "kernel exceeded the interpreter's work limit")
                    pc = b
            elif op == OP_LT:
                regs[a] = 1 if regs[b] < regs[c] else 0
            elif op == OP_LE:
                regs[a] = 1 if regs[b] <= regs[c] else 0
            elif op == OP_GT:
                regs[a] = 1 if regs[b] > regs[c] else 0
            elif op == OP_GE:
                regs[a] = 1 if regs[b] >= regs[c] else 0
            elif op == OP_EQ:
                regs[a] = 1 if regs[b] == regs[c] else 0
            elif op == OP_NE:
                regs[a] = 1 if regs[b] != regs[c] else 0
            elif op == OP_CALL:
                argc = <int>c
                for k in range(argc):
                    kd = <int>argv[b + k, 0]
                    x = argv[b + k, 1]
                    y = argv[b + k, 2]
                    if kd == ARG_REG:
                        iv[k] = regs[x]
                        fv[k] = <double>regs[x]
                        ov[k] = 0
                    elif kd == ARG_FCONST:
                        fv[k] = fconsts[x]
                        iv[k] = 0
                        ov[k] = 0
                    else:
                        iv[k] = x
                        ov[k] = regs[y]
                        fv[k] = 0.0
                self.cpu_t = cpu_t
                self.nodes = nodes
                self._dispatch(<int>a, iv, ov, fv)
                cpu_t = self.cpu_t
            elif op == OP_SUB:
                regs[a] = <int64_t>(<uint64_t>regs[b] - <uint64_t>regs[c])
            elif op == OP_DIV:
                x = regs[b]
                y = regs[c]
                if y == 0:
                    raise SimulationError("division by zero")
                if y == -1:
                    regs[a] = <int64_t>(0 - <uint64_t>x)
                else:
                    regs[a] = x / y
            elif op == OP_MOD:
                x = regs[b]
                y = regs[c]
                if y == 0:
                    raise SimulationError("modulo by zero")
                if y == -1:
                    regs[a] = 0
                else:
                    regs[a] = x % y
            elif op == OP_SHL:
                regs[a] = <int64_t>(<uint64_t>regs[b] << (regs[c] & 63))
            elif op == OP_SHR:
                regs[a] = regs[b] >> (regs[c] & 63)
            elif op == OP_BAND:
                regs[a] = regs[b] & regs[c]
            elif op == OP_BOR:
                regs[a] = regs[b] | regs[c]
            elif op == OP_BXOR:
                regs[a] = regs[b] ^ regs[c]
            elif op == OP_LAND:
                regs[a] = 1 if (regs[b] != 0 and regs[c] != 0) else 0
            elif op == OP_LOR:
                regs[a] = 1 if (regs[b] != 0 or regs[c] != 0) else 0
            elif op == OP_NEG:
                regs[a] = <int64_t>(0 - <uint64_t>regs[b])
            elif op == OP_BNOT:
                regs[a] = ~regs[b]
            elif op == OP_LNOT:
                regs[a] = 1 if regs[b] == 0 else 0
            elif op == OP_SELECT:
                regs[a] = regs[c] if regs[b] != 0 else regs[d]
            elif op == OP_CAST_U32:
                regs[a] = <int64_t>(<uint64_t>regs[b] & 0xFFFFFFFFUL)
            elif op == OP_CAST_I32:
                regs[a] = <int64_t><int32_t><uint32_t>regs[b]
            elif op == OP_CAST_I8:
                regs[a] = <int64_t><int8_t><uint8_t>regs[b]
            elif op == OP_ARR_ZERO:
                memset(self.arr_ptr[a], 0, self.arr_nbytes[a])
            elif op == OP_HALT:
                break
            else:
                raise SimulationError(f"corrupt program: unknown op {op}")
        self.cpu_t = cpu_t
        self.nodes = nodes
        return 0

    cdef int _dispatch(self, int iid, int64_t* iv, int64_t* ov,
                       double* fv) except -1:
        if iid < N_KINDS:
            self.kind_counts[iid] += 1
        if iid == ID_COMPUTE_PRE:
            return self._compute("compute_preloaded", iv[0], iv[1], iv[2],
                                 iv[3], iv[4], iv[5])
        elif iid == ID_COMPUTE_ACC:
            return self._compute("compute_accumulated", iv[0], iv[1], iv[2],
                                 iv[3], iv[4], iv[5])
        elif iid == ID_PRELOAD:
            return self._preload(iv[0], iv[1], iv[2], iv[3], iv[4], iv[5])
        elif iid == ID_MVIN:
            return self._mvin(0, iv[0], ov[0], iv[1], iv[2], iv[3], "mvin")
        elif iid == ID_MVIN2:
            return self._mvin(1, iv[0], ov[0], iv[1], iv[2], iv[3], "mvin2")
        elif iid == ID_MVIN3:
            return self._mvin(2, iv[0], ov[0], iv[1], iv[2], iv[3], "mvin3")
        elif iid == ID_MVOUT:
            return self._mvout(iv[0], ov[0], iv[1], iv[2], iv[3])
        elif iid == ID_CONFIG_EX:
            return self._config_ex(iv[0], iv[1], iv[2], iv[3], iv[4])
        elif iid == ID_CONFIG_LD:
            return self._config_ld(iv[0], fv[1], iv[2], iv[3])
        elif iid == ID_CONFIG_ST:
            return self._config_st(iv[0], fv[1])
        elif iid == ID_FENCE:
            return self._fence()
        elif iid == ID_NEGATE:
            return self._negate_matrix(iv[0], ov[0], iv[1], ov[1], iv[2], iv[3])
        elif iid == ID_ADD_MAT:
            return self._add_matrix(iv[0], ov[0], iv[1], ov[1], iv[2], ov[2],
                                    iv[3], iv[4])
        raise SimulationError(
            f"instruction {_INTRINSIC_NAMES[iid]!r} cannot be executed by "
            f"this simulator")

    # -- results ----------------------------------------------------------------------

    def run(self):
        self._run()

    def finish(self):
        out = np.zeros(N_COUNTERS, dtype=np.int64)
        cdef int64_t[::1] o = out
        cdef int64_t total
        cdef int i
        if self.timed:
            total = self.cpu_t
            for i in range(3):
                if self.ctrl_end[i] > total:
                    total = self.ctrl_end[i]
            o[C_TOTAL] = total
            o[C_CPU] = self.cpu_t
            o[C_LBUSY] = self.busy[0]
            o[C_EBUSY] = self.busy[1]
            o[C_SBUSY] = self.busy[2]
            o[C_LSTALL] = self.stall[0]
            o[C_ESTALL] = self.stall[1]
            o[C_SSTALL] = self.stall[2]
        o[C_NINSTR] = self.n_instr
        o[C_DMA_IN] = self.dma_in
        o[C_DMA_OUT] = self.dma_out
        o[C_MACS] = self.macs
        cdef int64_t rows = 0
        cdef int64_t r
        for r in range(self.n_spad_rows):
            if self.spad_written[r]:
                rows += 1
        o[C_SPAD_ROWS] = rows
        rows = 0
        for r in range(self.n_acc_rows):
            if self.acc_written[r]:
                rows += 1
        o[C_ACC_ROWS] = rows
        o[C_NODES] = self.nodes
        for i in range(N_KINDS):
            o[C_KIND_BASE + i] = self.kind_counts[i]
        return out, self.events


def execute(low, list arrays, bint timed=True, bint record_events=False):
    """Run a lowered kernel against the given DRAM buffers.

    Same contract as ``engine_py.execute``: ``arrays`` is index-aligned with
    ``low.arrays`` and mutated in place; returns the counter vector and the
    event list.
    """
    m = _Machine(low, arrays, timed, record_events)
    m.run()
    return m.finish()
