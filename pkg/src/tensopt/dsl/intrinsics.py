"""The builtin intrinsic table: names, arities and argument kinds.

Argument kinds drive both static validation and lowering:
  'int'   — integer expression (local address, dimension, id, ...)
  'scale' — numeric expression; float literals allowed, evaluated as float64
  'dram'  — DRAM reference: array name, partially-indexed array, &arr[i][j],
            or the literal 0 (zero-fill / null)
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class IntrinsicSig:
    name: str
    args: tuple[str, ...]
    min_args: int  # trailing optional args permitted (config_st scale)
    executable: bool = True


def _sig(name, *args, optional=0, executable=True):
    return IntrinsicSig(name, tuple(args), len(args) - optional, executable)


_SIGS = [
    _sig("config_ex", "int", "int", "int", "int", "int"),
    _sig("config_ld", "int", "scale", "int", "int"),
    _sig("mvin", "dram", "int", "int", "int"),
    _sig("mvin2", "dram", "int", "int", "int"),
    _sig("mvin3", "dram", "int", "int", "int"),
    _sig("preload", "int", "int", "int", "int", "int", "int"),
    _sig("compute_preloaded", "int", "int", "int", "int", "int", "int"),
    _sig("compute_accumulated", "int", "int", "int", "int", "int", "int"),
    _sig("config_st", "int", "scale", optional=1),
    _sig("mvout", "dram", "int", "int", "int"),
    _sig("fence"),
    # CPU-side helpers operating on DRAM matrices.
    _sig("negate_matrix", "dram", "dram", "int", "int"),
    _sig("add_matrix", "dram", "dram", "dram", "int", "int"),
    # Hardware-FSM intrinsics: accepted by the parser/validator so reference
    # listings load, but deliberately not executable by the simulator.
    _sig("gemmini_extended_config_ex", "int", "int", "int", "int", "int", "int",
         executable=False),
    _sig("gemmini_extended3_config_ld", "int", "scale", "int", "int",
         executable=False),
    _sig("gemmini_extended_config_st", "int", "int", "scale", executable=False),
    _sig("gemmini_loop_ws", *(["int"] * 6 + ["dram"] * 4 + ["int"] * 13),
         executable=False),
    _sig("gemmini_fence", executable=False),
]

INTRINSICS: dict[str, IntrinsicSig] = {s.name: s for s in _SIGS}

ACCEL_INSTRUCTIONS = frozenset(
    {
        "config_ex",
        "config_ld",
        "mvin",
        "mvin2",
        "mvin3",
        "preload",
        "compute_preloaded",
        "compute_accumulated",
        "config_st",
        "mvout",
        "fence",
    }
)

CPU_HELPERS = frozenset({"negate_matrix", "add_matrix"})
