# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled negotiation kernel; same contract as ``_kernels_py.negotiate``."""

import numpy as np

cdef enum:
    IDLE = 0
    SENDING = 1
    RECEIVING = 2


cdef inline long long _timer(long long base, long long b) nogil:
    cdef long long t = base // (1 + b)
    return t if t > 1 else 1


def negotiate(parent, level, reach, backlog, int packets_per_cell, int num_channels,
              int slotframe_length, int timer_base):
    cdef long long[:] par = np.ascontiguousarray(parent, dtype=np.int64)
    cdef long long[:] lvl = np.ascontiguousarray(level, dtype=np.int64)
    cdef const unsigned char[:, :, :] rc = np.ascontiguousarray(reach, dtype=np.uint8)
    cdef long long[:] bl = np.array(backlog, dtype=np.int64, copy=True)
    cdef Py_ssize_t n = par.shape[0]
    cdef long long[:] dem = np.zeros(n, dtype=np.int64)
    cdef long long[:] mode = np.zeros(n, dtype=np.int64)
    cdef unsigned char[:] reserved = np.zeros(n, dtype=np.uint8)
    cdef long long[:] order = np.zeros(n, dtype=np.int64)
    cdef long long[:] c_tx = np.zeros(n, dtype=np.int64)
    cdef long long[:] c_rx = np.zeros(n, dtype=np.int64)
    cdef long long[:] c_ch = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t v, p, k, i, j, m, cnt, depth = 0, slot
    cdef long long ch, granted, total, key_t, key_b, u, ut, ub
    cdef bint blocked, before

    for v in range(n):
        if par[v] >= 0 and bl[v] > 0:
            dem[v] = (bl[v] + packets_per_cell - 1) // packets_per_cell
        elif par[v] < 0:
            bl[v] = 0
        if lvl[v] > depth:
            depth = lvl[v]

    cells = []
    for slot in range(slotframe_length):
        total = 0
        for v in range(n):
            total += dem[v]
        if total == 0:
            break
        for v in range(n):
            mode[v] = RECEIVING if par[v] < 0 else IDLE
            reserved[v] = 0
        cnt = 0
        for i in range(1, depth + 1):
            # members of level i, insertion-sorted by (timer, -backlog, id)
            m = 0
            for v in range(n):
                if par[v] < 0 or lvl[v] != i:
                    continue
                key_t = _timer(timer_base, bl[v])
                key_b = bl[v]
                j = m
                while j > 0:
                    u = order[j - 1]
                    ut = _timer(timer_base, bl[u])
                    ub = bl[u]
                    before = key_t < ut or (key_t == ut and (key_b > ub or (key_b == ub and v < u)))
                    if not before:
                        break
                    order[j] = u
                    j -= 1
                order[j] = v
                m += 1
            for j in range(m):
                v = order[j]
                p = par[v]
                granted = -1
                if dem[v] > 0 and mode[p] == RECEIVING and not reserved[p]:
                    for ch in range(num_channels):
                        blocked = False
                        for k in range(cnt):
                            if c_ch[k] == ch and (rc[v, p, c_rx[k]] or rc[c_tx[k], c_rx[k], p]):
                                blocked = True
                                break
                        if not blocked:
                            granted = ch
                            break
                if granted >= 0:
                    c_tx[cnt] = v
                    c_rx[cnt] = p
                    c_ch[cnt] = granted
                    cnt += 1
                    mode[v] = SENDING
                    reserved[v] = 1
                    reserved[p] = 1
                else:
                    mode[v] = RECEIVING
        for k in range(cnt):
            v = c_tx[k]
            cells.append((slot, int(c_ch[k]), int(v), int(c_rx[k])))
            dem[v] -= 1
            bl[v] = bl[v] - packets_per_cell if bl[v] > packets_per_cell else 0
    return cells, [int(dem[v]) for v in range(n)]
