"""Compiled inner loops for residue arithmetic on int64 work buffers.

Every kernel expects entries already reduced into [0, mod) and keeps them
there.  Callers guarantee ``mod * mod < 2**63`` so products fit in int64.
"""

import numba
import numpy as np


@numba.njit(cache=True)
def geometric_divide_mod(a, length, m, plus, mod):
    # a[:length] /= (1 - q^m), or (1 + q^m) when plus
    if plus:
        for i in range(m, length):
            x = a[i] - a[i - m]
            if x < 0:
                x += mod
            a[i] = x
    else:
        for i in range(m, length):
            x = a[i] + a[i - m]
            if x >= mod:
                x -= mod
            a[i] = x


@numba.njit(cache=True)
def geometric_multiply_mod(a, length, m, plus, mod):
    # a[:length] *= (1 - q^m), or (1 + q^m) when plus; runs top-down in place
    i = length - 1
    if plus:
        while i >= m:
            x = a[i] + a[i - m]
            if x >= mod:
                x -= mod
            a[i] = x
            i -= 1
    else:
        while i >= m:
            x = a[i] - a[i - m]
            if x < 0:
                x += mod
            a[i] = x
            i -= 1


@numba.njit(cache=True)
def accumulate_mod(out, offset, src, length, negate, mod):
    # out[offset:offset+length] += src[:length]  (-= when negate)
    if negate:
        for i in range(length):
            x = out[offset + i] - src[i]
            if x < 0:
                x += mod
            out[offset + i] = x
    else:
        for i in range(length):
            x = out[offset + i] + src[i]
            if x >= mod:
                x -= mod
            out[offset + i] = x


@numba.njit(cache=True)
def convolve_mod(a, b, length, mod):
    out = np.zeros(length, np.int64)
    # products are < mod**2 < 2**63; reduce before the sum could overflow
    limit = np.int64(9223372036854775807) - (mod - 1) * (mod - 1)
    for k in range(length):
        acc = np.int64(0)
        for i in range(k + 1):
            ai = a[i]
            if ai == 0:
                continue
            acc += ai * b[k - i]
            if acc > limit:
                acc %= mod
        out[k] = acc % mod
    return out


@numba.njit(cache=True)
def partition_pentagonal_mod(length, mod):
    p = np.zeros(length, np.int64)
    if length == 0:
        return p
    p[0] = 1 % mod
    for n in range(1, length):
        acc = np.int64(0)
        k = 1
        while True:
            g1 = k * (3 * k - 1) // 2
            if g1 > n:
                break
            s = p[n - g1]
            g2 = g1 + k
            if g2 <= n:
                s += p[n - g2]
            if k & 1:
                acc += s
            else:
                acc -= s
            k += 1
        acc %= mod
        if acc < 0:
            acc += mod
        p[n] = acc
    return p
