"""Pure-Python feature-hashing kernel.

Reference implementation of the hashed n-gram counter. The compiled variant
in ``_hashfeat.pyx`` must produce bit-identical bucket counts: both hash the
UTF-8 byte encoding with 64-bit FNV-1a, using a one-byte namespace prefix
(0x01 word n-grams, 0x02 byte n-grams) so the two feature families do not
collide systematically.
"""

_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1

WORD_NS = 1
CHAR_NS = 2


def _fnv(h: int, data: bytes) -> int:
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def accumulate_counts(text: str, tokens: list, dim: int, seed: int, out) -> None:
    """Add raw feature counts for one text into ``out`` (length ``dim``).

    Features: byte 3/4/5-grams of the UTF-8 encoding, word unigrams and
    bigrams over ``tokens``.
    """
    data = text.encode("utf-8")
    n = len(data)
    for g in (3, 4, 5):
        for i in range(n - g + 1):
            h = ((seed ^ CHAR_NS) * _FNV_PRIME) & _MASK
            h = _fnv(h, data[i:i + g])
            out[h % dim] += 1.0
    enc = [t.encode("utf-8") for t in tokens]
    for i, tb in enumerate(enc):
        h = ((seed ^ WORD_NS) * _FNV_PRIME) & _MASK
        h = _fnv(h, tb)
        out[h % dim] += 1.0
        if i + 1 < len(enc):
            h = ((seed ^ WORD_NS) * _FNV_PRIME) & _MASK
            h = _fnv(h, tb)
            h = ((h ^ 0x20) * _FNV_PRIME) & _MASK
            h = _fnv(h, enc[i + 1])
            out[h % dim] += 1.0
