# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled whole-program kernels; same contract as ``_pykernels``.

Forward and backward over a program run without the GIL, so several instances can
be processed on separate threads. Loops are plain C (no BLAS) to keep summation
order fixed.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "compiled"

cdef int LSTM_K = 0
cdef int GRU_K = 1


cdef inline double _sigmoid(double v) noexcept nogil:
    cdef double e
    if v >= 0:
        return 1.0 / (1.0 + exp(-v))
    e = exp(v)
    return e / (1.0 + e)


cdef int _kind_code(kind) except -1:
    if kind == "lstm":
        return LSTM_K
    if kind == "gru":
        return GRU_K
    raise ValueError(f"unknown cell kind {kind!r}")


class Trace:
    """Per-node activations.

    ``A`` holds gate outputs (LSTM: i, f, o, u; GRU: r, z, candidate). ``S`` holds
    tanh(c) for LSTM and the child-state sum for GRU.
    """

    def __init__(self, H, C, A, S):
        self.H = H
        self.C = C
        self.A = A
        self.S = S

    @property
    def root_h(self):
        return self.H[self.H.shape[0] - 1]

    def hidden(self):
        return self.H


def forward(kind, Py_ssize_t[:, ::1] children, Py_ssize_t[::1] words, Py_ssize_t[::1] tags,
            double[:, ::1] E, double[:, ::1] T, double[:, ::1] W, double[:, ::1] U,
            double[::1] b, double[:, ::1] M=None):
    cdef int kc = _kind_code(kind)
    cdef Py_ssize_t n = children.shape[0]
    cdef Py_ssize_t nc = children.shape[1]
    cdef Py_ssize_t G = 4 if kc == LSTM_K else 3
    cdef Py_ssize_t d = b.shape[0] // G
    cdef Py_ssize_t wd = W.shape[1]
    cdef bint tagged = M is not None
    cdef Py_ssize_t td = M.shape[1] if tagged else 0
    cdef Py_ssize_t ntag = M.shape[0] if tagged else 0
    if U.shape[1] != nc * d or W.shape[0] != G * d or U.shape[0] != G * d:
        raise ValueError("parameter shapes disagree with the program")

    H_arr = np.zeros((n, d))
    C_arr = np.zeros((n, d))
    A_arr = np.zeros((n, G * d))
    S_arr = np.zeros((n, d))
    pre_arr = np.zeros(G * d)
    hcat_arr = np.zeros(nc * d)
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] C = C_arr
    cdef double[:, ::1] A = A_arr
    cdef double[:, ::1] S = S_arr
    cdef double[::1] pre = pre_arr
    cdef double[::1] hcat = hcat_arr
    cdef Py_ssize_t j, r, k, q, ch, w, tg
    cdef double acc, i_g, f_g, o_g, u_g, c_v, z_g, hs

    with nogil:
        for j in range(n):
            w = words[j]
            tg = tags[j]
            for k in range(nc):
                ch = children[j, k]
                for q in range(d):
                    hcat[k * d + q] = H[ch, q] if ch >= 0 else 0.0
            for r in range(G * d):
                acc = b[r]
                if w >= 0:
                    for k in range(wd):
                        acc = acc + W[r, k] * E[w, k]
                pre[r] = acc
            if tagged:
                for r in range(ntag):
                    acc = 0.0
                    for k in range(td):
                        acc = acc + M[r, k] * T[tg, k]
                    pre[r] = pre[r] + acc
            if kc == LSTM_K:
                for r in range(G * d):
                    acc = 0.0
                    for k in range(nc * d):
                        acc = acc + U[r, k] * hcat[k]
                    pre[r] = pre[r] + acc
                for q in range(d):
                    i_g = _sigmoid(pre[q])
                    f_g = _sigmoid(pre[d + q])
                    o_g = _sigmoid(pre[2 * d + q])
                    u_g = tanh(pre[3 * d + q])
                    acc = 0.0
                    for k in range(nc):
                        ch = children[j, k]
                        if ch >= 0:
                            acc = acc + C[ch, q]
                    c_v = i_g * u_g + f_g * acc
                    A[j, q] = i_g
                    A[j, d + q] = f_g
                    A[j, 2 * d + q] = o_g
                    A[j, 3 * d + q] = u_g
                    C[j, q] = c_v
                    S[j, q] = tanh(c_v)
                    H[j, q] = o_g * S[j, q]
            else:
                for r in range(2 * d):
                    acc = 0.0
                    for k in range(nc * d):
                        acc = acc + U[r, k] * hcat[k]
                    pre[r] = pre[r] + acc
                    A[j, r] = _sigmoid(pre[r])
                # reset gate scales every child's state
                for k in range(nc):
                    for q in range(d):
                        hcat[k * d + q] = hcat[k * d + q] * A[j, q]
                for q in range(d):
                    r = 2 * d + q
                    acc = 0.0
                    for k in range(nc * d):
                        acc = acc + U[r, k] * hcat[k]
                    A[j, r] = tanh(pre[r] + acc)
                    hs = 0.0
                    for k in range(nc):
                        ch = children[j, k]
                        if ch >= 0:
                            hs = hs + H[ch, q]
                    S[j, q] = hs
                    z_g = A[j, d + q]
                    H[j, q] = z_g * A[j, r] + (1.0 - z_g) * hs
    return Trace(H_arr, C_arr, A_arr, S_arr)


def backward(kind, Py_ssize_t[:, ::1] children, Py_ssize_t[::1] words, Py_ssize_t[::1] tags,
             trace, double[::1] d_root,
             double[:, ::1] E, double[:, ::1] T, double[:, ::1] W, double[:, ::1] U,
             double[::1] b, double[:, ::1] M, double[:, ::1] gW, double[:, ::1] gU,
             double[::1] gb, double[:, ::1] gM=None):
    cdef int kc = _kind_code(kind)
    cdef Py_ssize_t n = children.shape[0]
    cdef Py_ssize_t nc = children.shape[1]
    cdef Py_ssize_t G = 4 if kc == LSTM_K else 3
    cdef Py_ssize_t d = b.shape[0] // G
    cdef Py_ssize_t wd = W.shape[1]
    cdef bint tagged = M is not None
    cdef Py_ssize_t td = M.shape[1] if tagged else 0
    cdef Py_ssize_t ntag = M.shape[0] if tagged else 0
    cdef double[:, ::1] H = trace.H
    cdef double[:, ::1] C = trace.C
    cdef double[:, ::1] A = trace.A
    cdef double[:, ::1] S = trace.S

    DH_arr = np.zeros((n, d))
    DC_arr = np.zeros((n, d))
    dX_arr = np.zeros((n, wd))
    dT_arr = np.zeros((n, td)) if tagged else None
    dpre_arr = np.zeros(G * d)
    hcat_arr = np.zeros(nc * d)
    rh_arr = np.zeros(nc * d)
    drh_arr = np.zeros(nc * d)
    dhc_arr = np.zeros(nc * d)
    cdef double[:, ::1] DH = DH_arr
    cdef double[:, ::1] DC = DC_arr
    cdef double[:, ::1] dX = dX_arr
    cdef double[:, ::1] dT
    if tagged:
        dT = dT_arr
    cdef double[::1] dpre = dpre_arr
    cdef double[::1] hcat = hcat_arr
    cdef double[::1] rh = rh_arr
    cdef double[::1] drh = drh_arr
    cdef double[::1] dhc = dhc_arr
    cdef Py_ssize_t j, r, k, q, ch, w, tg
    cdef double dh, dc, tc, i_g, f_g, o_g, u_g, csum, r_g, z_g, cand, acc, dcsum

    for q in range(d):
        DH[n - 1, q] = d_root[q]

    with nogil:
        for j in range(n - 1, -1, -1):
            w = words[j]
            tg = tags[j]
            for k in range(nc):
                ch = children[j, k]
                for q in range(d):
                    hcat[k * d + q] = H[ch, q] if ch >= 0 else 0.0
            if kc == LSTM_K:
                for q in range(d):
                    i_g = A[j, q]
                    f_g = A[j, d + q]
                    o_g = A[j, 2 * d + q]
                    u_g = A[j, 3 * d + q]
                    tc = S[j, q]
                    dh = DH[j, q]
                    dc = DC[j, q] + dh * o_g * (1.0 - tc * tc)
                    csum = 0.0
                    for k in range(nc):
                        ch = children[j, k]
                        if ch >= 0:
                            csum = csum + C[ch, q]
                    dpre[q] = dc * u_g * i_g * (1.0 - i_g)
                    dpre[d + q] = dc * csum * f_g * (1.0 - f_g)
                    dpre[2 * d + q] = dh * tc * o_g * (1.0 - o_g)
                    dpre[3 * d + q] = dc * i_g * (1.0 - u_g * u_g)
                    dcsum = dc * f_g
                    for k in range(nc):
                        ch = children[j, k]
                        if ch >= 0:
                            DC[ch, q] = DC[ch, q] + dcsum
                # row-major sweep: parameter gradient and U^T dpre share one pass over U
                for k in range(nc * d):
                    dhc[k] = 0.0
                for r in range(G * d):
                    for k in range(nc * d):
                        gU[r, k] = gU[r, k] + dpre[r] * hcat[k]
                        dhc[k] = dhc[k] + U[r, k] * dpre[r]
                for k in range(nc * d):
                    ch = children[j, k // d]
                    if ch >= 0:
                        DH[ch, k % d] = DH[ch, k % d] + dhc[k]
            else:
                for q in range(d):
                    r_g = A[j, q]
                    z_g = A[j, d + q]
                    cand = A[j, 2 * d + q]
                    dh = DH[j, q]
                    dpre[2 * d + q] = dh * z_g * (1.0 - cand * cand)
                    dpre[d + q] = dh * (cand - S[j, q]) * z_g * (1.0 - z_g)
                for k in range(nc * d):
                    rh[k] = hcat[k] * A[j, k % d]
                    drh[k] = 0.0
                for q in range(d):
                    r = 2 * d + q
                    for k in range(nc * d):
                        gU[r, k] = gU[r, k] + dpre[r] * rh[k]
                        drh[k] = drh[k] + U[r, k] * dpre[r]
                for q in range(d):
                    acc = 0.0
                    for k in range(nc):
                        acc = acc + drh[k * d + q] * hcat[k * d + q]
                    r_g = A[j, q]
                    dpre[q] = acc * r_g * (1.0 - r_g)
                for k in range(nc * d):
                    dhc[k] = 0.0
                for r in range(2 * d):
                    for k in range(nc * d):
                        gU[r, k] = gU[r, k] + dpre[r] * hcat[k]
                        dhc[k] = dhc[k] + U[r, k] * dpre[r]
                for k in range(nc * d):
                    ch = children[j, k // d]
                    if ch < 0:
                        continue
                    q = k % d
                    DH[ch, q] = DH[ch, q] + dhc[k] + drh[k] * A[j, q] + DH[j, q] * (1.0 - A[j, d + q])
            for r in range(G * d):
                gb[r] = gb[r] + dpre[r]
            if w >= 0:
                for r in range(G * d):
                    for k in range(wd):
                        gW[r, k] = gW[r, k] + dpre[r] * E[w, k]
                        dX[j, k] = dX[j, k] + W[r, k] * dpre[r]
            if tagged:
                for r in range(ntag):
                    for k in range(td):
                        gM[r, k] = gM[r, k] + dpre[r] * T[tg, k]
                        dT[j, k] = dT[j, k] + M[r, k] * dpre[r]
    return dX_arr, dT_arr
