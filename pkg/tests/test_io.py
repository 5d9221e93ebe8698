from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortexlab import lie
from vortexlab.io import (
    dumps_report,
    field_to_text,
    product_field_to_text,
    read_connection,
    text_to_field,
    text_to_product_field,
    write_connection,
)
from vortexlab.surface import LatticeConnection, TorusGrid, reference_connection


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(["scalar", "complex"]))
def test_field_round_trip_is_bit_exact(seed, kind):
    rng = np.random.default_rng(seed)
    g = TorusGrid(4, 6, 1.3, 0.7)
    v = rng.standard_normal(g.shape) * 10.0 ** rng.integers(-300, 300)
    if kind == "complex":
        v = v + 1j * rng.standard_normal(g.shape)
    header, g2, w = text_to_field(field_to_text(g, v, kind))
    assert g2 == g and header["kind"] == kind
    assert np.array_equal(w, v)


@pytest.mark.parametrize("group", ["u1", "su2"])
def test_connection_round_trip(tmp_path, group):
    rng = np.random.default_rng(0)
    g = TorusGrid(6, 4)
    A = LatticeConnection(g, group, lie.random_algebra(group, g.shape, rng), lie.random_algebra(group, g.shape, rng))
    if group == "u1":
        A = reference_connection(g, 2) + (A.As, A.At)
    write_connection(tmp_path / "a.field", A)
    B = read_connection(tmp_path / "a.field")
    assert B.group == group and B.degree == A.degree
    assert np.array_equal(B.As, A.As) and np.array_equal(B.At, A.At)


def test_product_field_round_trip():
    rng = np.random.default_rng(1)
    s, f = TorusGrid(4, 4), TorusGrid(6, 8, 2.0, 1.0)
    v = rng.standard_normal(s.shape + f.shape)
    s2, f2, w = text_to_product_field(product_field_to_text(s, f, v))
    assert (s2, f2) == (s, f) and np.array_equal(w, v)
    with pytest.raises(ValueError):
        text_to_product_field(field_to_text(s, v[..., 0, 0], "scalar"))


def test_field_errors():
    g = TorusGrid(4, 4)
    with pytest.raises(ValueError):
        field_to_text(g, np.zeros(g.shape), "tensor")
    text = field_to_text(g, np.zeros(g.shape), "scalar")
    with pytest.raises(ValueError):
        text_to_field(text.rsplit("\n", 2)[0])


def test_report_format():
    out = dumps_report({"b": Fraction(1, 8), "a": [1, 0.1, np.float64(2.0)], "c": Fraction(3), "d": True})
    assert out == '{"a": [1, 0.10000000000000001, 2.0], "b": "1/8", "c": "3", "d": true}\n'


def test_report_is_deterministic():
    rng = np.random.default_rng(2)
    data = {str(k): float(x) for k, x in enumerate(rng.standard_normal(20))}
    shuffled = dict(reversed(list(data.items())))
    assert dumps_report(data) == dumps_report(shuffled)
