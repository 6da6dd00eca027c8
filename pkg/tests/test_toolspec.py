from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from applscript.backends.toolspec import (
    NativeTool,
    ToolParam,
    ToolSpec,
    build_tool_spec,
    decode_arguments,
    parse_google_docstring,
)
from applscript.errors import ArgumentDecodeError, DocstringParseError
from applscript.tools import is_lucky

IS_LUCKY_JSON = (
    '{"type":"function","function":{"name":"is_lucky","description":"Determine whether the input number is a lucky '
    'number.","parameters":{"properties":{"x":{"description":"The input number to be checked.","type":"integer"}},'
    '"required":["x"],"type":"object"}}}'
)


def test_is_lucky_spec_bytes():
    assert build_tool_spec(NativeTool.from_function(is_lucky)).to_json() == IS_LUCKY_JSON


def test_is_lucky_value():
    assert is_lucky(2024) is True  # 2027 is prime
    assert is_lucky(2025) is False


def test_zero_parameter_tool():
    def ping() -> str:
        """Check the service."""
        return "pong"

    spec = build_tool_spec(NativeTool.from_function(ping))
    assert spec.parameters == {} and spec.required == []
    assert spec.description == "Check the service."


def test_missing_args_entry_names_parameter():
    def f(x: int, y: str) -> str:
        """Do a thing.

        Args:
            x (int): the x.
        """
        return ""

    with pytest.raises(DocstringParseError, match="'y'"):
        build_tool_spec(NativeTool.from_function(f))


def test_defaults_are_optional_and_types_mapped():
    def f(a: int, b: float, c: str = "z", d: bool = False) -> str:
        """Mixed.

        Args:
            a (int): first.
            b (float): second
                continued on the next line.
            c (str): third.
            d (bool): fourth.

        Returns:
            str: ignored.
        """
        return ""

    spec = build_tool_spec(NativeTool.from_function(f))
    assert [v["type"] for v in spec.parameters.values()] == ["integer", "number", "string", "boolean"]
    assert spec.required == ["a", "b"]
    assert spec.parameters["b"]["description"] == "second continued on the next line."


def test_unsupported_type_rejected():
    tool = NativeTool("t", [ToolParam("x", "list")], "T.\n\nArgs:\n    x (list): xs.", lambda x: x)
    with pytest.raises(DocstringParseError):
        build_tool_spec(tool)


def test_google_docstring_parse():
    desc, args = parse_google_docstring(is_lucky.__doc__)
    assert desc == "Determine whether the input number is a lucky number."
    assert args == {"x": ("int", "The input number to be checked.")}


names = st.from_regex(r"[a-z][a-z_]{0,6}", fullmatch=True)


@given(
    names,
    st.text(min_size=1, max_size=20),
    st.dictionaries(names, st.tuples(st.text(max_size=10), st.sampled_from(["integer", "number", "string", "boolean"])), max_size=4),
)
def test_spec_round_trip(name, description, params):
    props = {k: {"description": d, "type": t} for k, (d, t) in params.items()}
    spec = ToolSpec(name, description, props, sorted(props))
    assert ToolSpec.from_dict(json.loads(spec.to_json())) == spec


def test_decode_arguments():
    tool = NativeTool.from_function(is_lucky)
    assert decode_arguments(tool, {"x": 2024}) == {"x": 2024}
    assert decode_arguments(tool, '{"x": 7}') == {"x": 7}
    for bad in ({"x": "2024"}, {"x": True}, {"x": 1, "y": 2}, {}, "not json"):
        with pytest.raises(ArgumentDecodeError):
            decode_arguments(tool, bad)
