"""The compiled feature-hashing kernel must be bit-identical to the pure
Python twin on arbitrary input."""

import numpy as np
from hypothesis import given, settings, strategies as st

from policygraph import _kernels
from policygraph._kernels import python_impl
from policygraph.embedding import DEFAULT_SEED, tokenize


def _counts(impl, text, dim=256, seed=DEFAULT_SEED):
    out = np.zeros(dim, dtype=np.float64)
    impl(text, tokenize(text), dim, seed, out)
    return out


def test_backend_is_selected():
    assert _kernels.BACKEND in ("compiled", "python")


def test_simple_agreement():
    a = _counts(_kernels.accumulate_counts, "el bosque de restauración")
    b = _counts(python_impl.accumulate_counts, "el bosque de restauración")
    assert np.array_equal(a, b)
    assert a.sum() > 0


def test_empty_text_yields_no_counts():
    assert _counts(_kernels.accumulate_counts, "").sum() == 0


@settings(max_examples=200, deadline=None)
@given(st.text(max_size=120), st.sampled_from([64, 256, 4096]))
def test_agreement_property(text, dim):
    a = _counts(_kernels.accumulate_counts, text, dim=dim)
    b = _counts(python_impl.accumulate_counts, text, dim=dim)
    assert np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(st.text(min_size=1, max_size=60))
def test_counts_are_nonnegative_integers(text):
    out = _counts(_kernels.accumulate_counts, text)
    assert (out >= 0).all()
    assert np.array_equal(out, np.round(out))


def test_seed_changes_buckets():
    a = _counts(_kernels.accumulate_counts, "forest restoration incentives", seed=DEFAULT_SEED)
    b = _counts(_kernels.accumulate_counts, "forest restoration incentives", seed=12345)
    assert a.sum() == b.sum()  # same number of grams
    assert not np.array_equal(a, b)
