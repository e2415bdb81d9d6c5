"""Timed event records and the hazard-soundness trace checker.

An event is one accelerator instruction's lifetime:
    (seq, name, controller, dispatch, start, end, rows)
where rows is a list of (space, lo, hi, mode) half-open row ranges with mode
"r" or "w" and space "spad" or "acc". The checker replays a log and reports
any pair of instructions that overlap in time while touching conflicting
rows, and any controller whose instructions are not serialized in order.
"""

from __future__ import annotations


def _conflict(rows_a, rows_b) -> bool:
    for sa, la, ha, ma in rows_a:
        for sb, lb, hb, mb in rows_b:
            if sa != sb:
                continue
            if ma == "r" and mb == "r":
                continue
            if la < hb and lb < ha:
                return True
    return False


def check_trace(events) -> list[str]:
    """Validate a timed event log; returns human-readable violations."""
    problems: list[str] = []
    last_by_ctrl: dict[str, tuple] = {}
    for ev in events:
        seq, name, ctrl, dispatch, start, end, rows = ev
        if not (dispatch <= start <= end):
            problems.append(f"instr {seq} ({name}): dispatch/start/end out of order "
                            f"({dispatch}, {start}, {end})")
        if ctrl == "fence":
            continue
        prev = last_by_ctrl.get(ctrl)
        if prev is not None:
            pseq, pname, pend = prev
            if start < pend:
                problems.append(
                    f"controller {ctrl}: instr {seq} ({name}) starts at {start} "
                    f"before instr {pseq} ({pname}) ends at {pend}")
        last_by_ctrl[ctrl] = (seq, name, end)

    timed = [ev for ev in events if ev[2] != "fence" and ev[6]]
    order = sorted(range(len(timed)), key=lambda i: (timed[i][4], timed[i][0]))
    active: list[int] = []
    for i in order:
        ev = timed[i]
        active = [j for j in active if timed[j][5] > ev[4]]
        for j in active:
            other = timed[j]
            if _conflict(ev[6], other[6]):
                a, b = sorted((ev, other), key=lambda e: e[0])
                problems.append(
                    f"conflicting instrs {a[0]} ({a[1]}) and {b[0]} ({b[1]}) "
                    f"overlap in time: [{a[4]},{a[5]}) vs [{b[4]},{b[5]})")
        active.append(i)
    return problems


def event_to_json(ev) -> dict:
    seq, name, ctrl, dispatch, start, end, rows = ev
    return {
        "seq": seq,
        "instr": name,
        "controller": ctrl,
        "dispatch_cycle": dispatch,
        "start_cycle": start,
        "end_cycle": end,
        "rows": [{"space": s, "lo": lo, "hi": hi, "mode": m}
                 for s, lo, hi, m in rows],
    }


def event_from_json(d: dict):
    return (d["seq"], d["instr"], d["controller"], d["dispatch_cycle"],
            d["start_cycle"], d["end_cycle"],
            [(r["space"], r["lo"], r["hi"], r["mode"]) for r in d["rows"]])
