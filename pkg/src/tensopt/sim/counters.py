"""Indices into the performance-counter vector produced by a simulation run.

Both execution engines fill the same fixed-length int64 vector; the report
layer turns it into a PerfReport. Keep this list append-only so counter
vectors stay comparable across versions.
"""

TOTAL_CYCLES = 0      # end-to-end latency (max of CPU time and controller ends)
CPU_CYCLES = 1        # CPU-side time: interpreted nodes, issue costs, queue waits
N_INSTR = 2           # accelerator instructions issued (configs and fences included)
LOAD_BUSY = 3         # cycles the load controller spent servicing
EXEC_BUSY = 4
STORE_BUSY = 5
LOAD_STALL = 6        # cycles instructions waited between dispatch and start
EXEC_STALL = 7
STORE_STALL = 8
DMA_BYTES_IN = 9      # bytes moved DRAM -> local memories
DMA_BYTES_OUT = 10    # bytes moved local memories -> DRAM
MACS = 11             # multiply-accumulates performed by the systolic array
SPAD_ROWS = 12        # distinct scratchpad rows written
ACC_ROWS = 13         # distinct accumulator rows written
NODE_COUNT = 14       # interpreted AST nodes (runaway guard metric)

# Slots KIND_BASE .. KIND_BASE+N_KINDS-1 count executed calls per intrinsic,
# in intrinsic-id order (the executable intrinsics occupy ids 0..N_KINDS-1).
KIND_BASE = 15
N_KINDS = 13

N_COUNTERS = KIND_BASE + N_KINDS
