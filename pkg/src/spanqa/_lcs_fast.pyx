# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled LCS kernel; opcode-identical to spanqa._lcs_py."""

import numpy as np

KEEP, DELETE, INSERT = 0, 1, 2


def lcs_ops(str a, str b):
    cdef const unsigned int[::1] x = np.frombuffer(a.encode("utf-32-le"), dtype=np.uint32)
    cdef const unsigned int[::1] y = np.frombuffer(b.encode("utf-32-le"), dtype=np.uint32)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = y.shape[0]
    cdef int[:, ::1] M = np.zeros((n + 1, m + 1), dtype=np.int32)
    cdef Py_ssize_t i, j
    cdef int up, left

    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if x[i - 1] == y[j - 1]:
                M[i, j] = M[i - 1, j - 1] + 1
            else:
                up = M[i - 1, j]
                left = M[i, j - 1]
                M[i, j] = up if up >= left else left

    ops = []
    i, j = n, m
    while i > 0 and j > 0:
        if x[i - 1] == y[j - 1]:
            ops.append(0)
            i -= 1
            j -= 1
        elif M[i - 1, j] >= M[i, j - 1]:
            ops.append(1)
            i -= 1
        else:
            ops.append(2)
            j -= 1
    while i > 0:
        ops.append(1)
        i -= 1
    while j > 0:
        ops.append(2)
        j -= 1
    ops.reverse()
    return ops
