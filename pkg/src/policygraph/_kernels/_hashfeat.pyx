# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled feature-hashing kernel; must match _hashfeat_py bit for bit."""

from libc.stdint cimport uint64_t

cdef uint64_t FNV_PRIME = 0x100000001B3UL

cdef uint64_t WORD_NS = 1
cdef uint64_t CHAR_NS = 2


cdef inline uint64_t fnv_bytes(uint64_t h, const unsigned char* buf, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n):
        h = (h ^ buf[i]) * FNV_PRIME
    return h


def accumulate_counts(text, tokens, Py_ssize_t dim, uint64_t seed, double[:] out):
    """Add raw feature counts for one text into ``out`` (length ``dim``)."""
    cdef bytes data = text.encode("utf-8")
    cdef const unsigned char* buf = data
    cdef Py_ssize_t n = len(data)
    cdef Py_ssize_t i, g
    cdef uint64_t h
    cdef uint64_t word_seed = (seed ^ WORD_NS) * FNV_PRIME
    cdef uint64_t char_seed = (seed ^ CHAR_NS) * FNV_PRIME

    for g in range(3, 6):
        for i in range(n - g + 1):
            h = fnv_bytes(char_seed, buf + i, g)
            out[<Py_ssize_t>(h % <uint64_t>dim)] += 1.0

    cdef list enc = [t.encode("utf-8") for t in tokens]
    cdef Py_ssize_t ntok = len(enc)
    cdef bytes tb, tb2
    cdef const unsigned char* p1
    cdef const unsigned char* p2
    for i in range(ntok):
        tb = enc[i]
        p1 = tb
        h = fnv_bytes(word_seed, p1, len(tb))
        out[<Py_ssize_t>(h % <uint64_t>dim)] += 1.0
        if i + 1 < ntok:
            tb2 = enc[i + 1]
            p2 = tb2
            h = fnv_bytes(word_seed, p1, len(tb))
            h = (h ^ <uint64_t>0x20) * FNV_PRIME
            h = fnv_bytes(h, p2, len(tb2))
            out[<Py_ssize_t>(h % <uint64_t>dim)] += 1.0
