# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM sequence kernels.

Twin of ``lstm_py`` with the same call contract and operation order; matrix
products go through BLAS (the same library numpy dispatches to), elementwise
gate math is hand-rolled C loops. See ``lstm_py`` for the semantics.
"""

import numpy as np

from libc.math cimport exp, tanh
from scipy.linalg.cython_blas cimport dgemv, dger


cdef inline double sigmoid(double v) noexcept nogil:
    cdef double e
    if v >= 0.0:
        return 1.0 / (1.0 + exp(-v))
    e = exp(v)
    return e / (1.0 + e)


def lstm_forward(wx_in, wh_in, b_in, x_in, mask_in):
    cdef double[:, ::1] wx = np.ascontiguousarray(wx_in, dtype=np.float64)
    cdef double[:, ::1] wh = np.ascontiguousarray(wh_in, dtype=np.float64)
    cdef double[::1] b = np.ascontiguousarray(b_in, dtype=np.float64)
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] mask = np.ascontiguousarray(mask_in, dtype=np.float64)

    cdef int T = x.shape[0]
    cdef int I = wx.shape[0]
    cdef int H = wh.shape[0]
    cdef int G = 4 * H

    h_arr = np.zeros((T, H))
    c_arr = np.zeros((T, H))
    gates_arr = np.zeros((T, G))
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] gates = gates_arr

    cdef double[::1] z = np.zeros(G)
    cdef double[::1] h_prev = np.zeros(H)
    cdef double[::1] c_prev = np.zeros(H)

    cdef char transN = b'N'
    cdef int inc = 1
    cdef double one = 1.0
    cdef int t, k
    cdef double ik, fk, ok, gk, cn

    for t in range(T):
        if mask[t] == 0.0:
            for k in range(H):
                h[t, k] = h_prev[k]
                c[t, k] = c_prev[k]
            continue
        for k in range(G):
            z[k] = b[k]
        if I > 0:
            dgemv(&transN, &G, &I, &one, &wx[0, 0], &G, &x[t, 0], &inc, &one, &z[0], &inc)
        dgemv(&transN, &G, &H, &one, &wh[0, 0], &G, &h_prev[0], &inc, &one, &z[0], &inc)
        for k in range(H):
            ik = sigmoid(z[k])
            fk = sigmoid(z[H + k])
            ok = sigmoid(z[2 * H + k])
            gk = tanh(z[3 * H + k])
            cn = fk * c_prev[k] + ik * gk
            gates[t, k] = ik
            gates[t, H + k] = fk
            gates[t, 2 * H + k] = ok
            gates[t, 3 * H + k] = gk
            c[t, k] = cn
            c_prev[k] = cn
            h_prev[k] = ok * tanh(cn)
            h[t, k] = h_prev[k]
    return h_arr, c_arr, gates_arr


def lstm_backward(wx_in, wh_in, x_in, mask_in, h_in, c_in, gates_in,
                  dh_seq_in, dh_last_in, dc_last_in):
    cdef double[:, ::1] wx = np.ascontiguousarray(wx_in, dtype=np.float64)
    cdef double[:, ::1] wh = np.ascontiguousarray(wh_in, dtype=np.float64)
    cdef double[:, ::1] x = np.ascontiguousarray(x_in, dtype=np.float64)
    cdef double[::1] mask = np.ascontiguousarray(mask_in, dtype=np.float64)
    cdef double[:, ::1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef double[:, ::1] c = np.ascontiguousarray(c_in, dtype=np.float64)
    cdef double[:, ::1] gates = np.ascontiguousarray(gates_in, dtype=np.float64)
    cdef double[:, ::1] dh_seq = np.ascontiguousarray(dh_seq_in, dtype=np.float64)

    cdef int T = x.shape[0]
    cdef int I = wx.shape[0]
    cdef int H = wh.shape[0]
    cdef int G = 4 * H

    dx_arr = np.zeros((T, I))
    dwx_arr = np.zeros((I, G))
    dwh_arr = np.zeros((H, G))
    db_arr = np.zeros(G)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] dwx = dwx_arr
    cdef double[:, ::1] dwh = dwh_arr
    cdef double[::1] db = db_arr

    cdef double[::1] dh_carry = np.array(dh_last_in, dtype=np.float64).copy()
    cdef double[::1] dc_carry = np.array(dc_last_in, dtype=np.float64).copy()
    cdef double[::1] dz = np.zeros(G)
    cdef double[::1] dh_total = np.zeros(H)
    cdef double[::1] zeros_h = np.zeros(H)
    cdef double[::1] c_prev, h_prev

    cdef char transT = b'T'
    cdef int inc = 1
    cdef double one = 1.0
    cdef double zero = 0.0
    cdef int t, k
    cdef double ik, fk, ok, gk, tc, do_k, dc_k, di, df, dg

    for t in range(T - 1, -1, -1):
        if mask[t] == 0.0:
            for k in range(H):
                dh_carry[k] = dh_carry[k] + dh_seq[t, k]
            continue
        for k in range(H):
            dh_total[k] = dh_seq[t, k] + dh_carry[k]
        if t > 0:
            c_prev = c[t - 1]
            h_prev = h[t - 1]
        else:
            c_prev = zeros_h
            h_prev = zeros_h
        for k in range(H):
            ik = gates[t, k]
            fk = gates[t, H + k]
            ok = gates[t, 2 * H + k]
            gk = gates[t, 3 * H + k]
            tc = tanh(c[t, k])
            do_k = dh_total[k] * tc
            dc_k = dh_total[k] * ok * (1.0 - tc * tc) + dc_carry[k]
            di = dc_k * gk
            df = dc_k * c_prev[k]
            dg = dc_k * ik
            dz[k] = di * ik * (1.0 - ik)
            dz[H + k] = df * fk * (1.0 - fk)
            dz[2 * H + k] = do_k * ok * (1.0 - ok)
            dz[3 * H + k] = dg * (1.0 - gk * gk)
            dc_carry[k] = dc_k * fk
        if I > 0:
            dger(&G, &I, &one, &dz[0], &inc, &x[t, 0], &inc, &dwx[0, 0], &G)
        dger(&G, &H, &one, &dz[0], &inc, &h_prev[0], &inc, &dwh[0, 0], &G)
        for k in range(G):
            db[k] = db[k] + dz[k]
        if I > 0:
            dgemv(&transT, &G, &I, &one, &wx[0, 0], &G, &dz[0], &inc, &zero, &dx[t, 0], &inc)
        dgemv(&transT, &G, &H, &one, &wh[0, 0], &G, &dz[0], &inc, &zero, &dh_carry[0], &inc)
    return dx_arr, dwx_arr, dwh_arr, db_arr
