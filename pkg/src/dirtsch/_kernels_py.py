"""Pure-Python negotiation kernel; mirrors ``_kernels.pyx`` line for line."""

from __future__ import annotations

IDLE, SENDING, RECEIVING = 0, 1, 2


def negotiate(parent, level, reach, backlog, packets_per_cell, num_channels,
              slotframe_length, timer_base):
    """Outcome of one scheduling period, computed without messages.

    ``reach[a][b][c]`` is 1 when ``a`` transmitting towards ``b`` hits ``c``.
    Returns ``(cells, demand)`` where ``cells`` lists ``(slot, channel, tx, rx)``
    and ``demand`` holds each node's cells still unserved.
    """
    n = len(parent)
    parent = [int(p) for p in parent]
    level = [int(x) for x in level]
    reach = reach.tolist() if hasattr(reach, "tolist") else reach
    backlog = [int(b) for b in backlog]
    demand = [0] * n
    for v in range(n):
        if parent[v] >= 0 and backlog[v] > 0:
            demand[v] = -(-backlog[v] // packets_per_cell)
        elif parent[v] < 0:
            backlog[v] = 0

    depth = max(level) if n else 0
    by_level = [[] for _ in range(depth + 1)]
    for v in range(n):
        if parent[v] >= 0:
            by_level[level[v]].append(v)

    cells = []
    for slot in range(slotframe_length):
        if not any(demand):
            break
        mode = [IDLE] * n
        reserved = [False] * n
        for v in range(n):
            if parent[v] < 0:
                mode[v] = RECEIVING
        c_tx, c_rx, c_ch = [], [], []
        for lvl in range(1, depth + 1):
            members = by_level[lvl]
            order = sorted(
                members,
                key=lambda v: (max(1, timer_base // (1 + backlog[v])), -backlog[v], v),
            )
            for v in order:
                p = parent[v]
                granted = -1
                if demand[v] > 0 and mode[p] == RECEIVING and not reserved[p]:
                    rv = reach[v][p]
                    for ch in range(num_channels):
                        blocked = False
                        for k in range(len(c_tx)):
                            if c_ch[k] == ch and (rv[c_rx[k]] or reach[c_tx[k]][c_rx[k]][p]):
                                blocked = True
                                break
                        if not blocked:
                            granted = ch
                            break
                if granted >= 0:
                    c_tx.append(v)
                    c_rx.append(p)
                    c_ch.append(granted)
                    mode[v] = SENDING
                    reserved[v] = True
                    reserved[p] = True
                else:
                    mode[v] = RECEIVING
        for k in range(len(c_tx)):
            v = c_tx[k]
            cells.append((slot, c_ch[k], v, c_rx[k]))
            demand[v] -= 1
            backlog[v] = max(0, backlog[v] - packets_per_cell)
    return cells, demand
