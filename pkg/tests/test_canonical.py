from __future__ import annotations

import random

import pytest
from hypothesis import given, strategies as st

from glasskit.canonical import canonical_parse, canonical_serialize
from glasskit.errors import CanonicalizationError


def test_keys_sorted_by_code_point():
    assert canonical_serialize({"b": 1, "a": 2}) == b'{"a":2,"b":1}'


def test_no_insignificant_whitespace():
    out = canonical_serialize({"k": [1, 2, {"x": True}]})
    assert b" " not in out and b"\n" not in out


def test_utf8_not_escaped():
    assert canonical_serialize({"name": "Åsa"}) == '{"name":"Åsa"}'.encode("utf-8")


def test_rejects_floats():
    with pytest.raises(CanonicalizationError):
        canonical_serialize({"x": 1.5})
    with pytest.raises(CanonicalizationError):
        canonical_serialize([1, [2, [3.0]]])


def test_rejects_non_text_keys():
    with pytest.raises(CanonicalizationError):
        canonical_serialize({1: "a"})


def test_parse_rejects_float_literals():
    with pytest.raises(CanonicalizationError):
        canonical_parse(b'{"x":1.5}')
    with pytest.raises(CanonicalizationError):
        canonical_parse(b'{"x":1e3}')


def test_parse_rejects_invalid_json():
    with pytest.raises(CanonicalizationError):
        canonical_parse(b"{nope")


def _random_document(rng: random.Random, depth: int = 0):
    kinds = ["int", "str", "bool", "null"]
    if depth < 3:
        kinds += ["map", "list", "map", "list"]
    kind = rng.choice(kinds)
    if kind == "int":
        return rng.randint(-(10 ** 12), 10 ** 12)
    if kind == "str":
        alphabet = "abcXYZ 0123_åß∆☃"
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 12)))
    if kind == "bool":
        return rng.random() < 0.5
    if kind == "null":
        return None
    if kind == "list":
        return [_random_document(rng, depth + 1)
                for _ in range(rng.randint(0, 5))]
    keys = [f"k{rng.randint(0, 50)}" for _ in range(rng.randint(0, 6))]
    return {k: _random_document(rng, depth + 1) for k in keys}


def _shuffled(value, rng: random.Random):
    """Same value, dict insertion orders shuffled recursively."""
    if isinstance(value, dict):
        items = [(k, _shuffled(v, rng)) for k, v in value.items()]
        rng.shuffle(items)
        return dict(items)
    if isinstance(value, list):
        return [_shuffled(v, rng) for v in value]
    return value


def test_idempotence_and_order_independence_1000_docs():
    rng = random.Random(2024)
    for _ in range(1000):
        doc = _random_document(rng)
        first = canonical_serialize(doc)
        # serialize . parse . serialize == serialize
        assert canonical_serialize(canonical_parse(first)) == first
        # insertion order never changes the bytes
        assert canonical_serialize(_shuffled(doc, rng)) == first


json_values = st.recursive(
    st.none() | st.booleans() | st.integers() | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=20,
)


@given(json_values)
def test_idempotence_property(doc):
    first = canonical_serialize(doc)
    assert canonical_serialize(canonical_parse(first)) == first
