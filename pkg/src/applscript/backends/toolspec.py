"""Tool specifications extracted from signatures and Google-style docstrings."""

from __future__ import annotations

import inspect
import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

from ..errors import ArgumentDecodeError, DocstringParseError

# Python type name -> JSON schema type
TYPE_NAMES = {"int": "integer", "float": "number", "str": "string", "bool": "boolean"}
_PY_TYPES = {int: "int", float: "float", str: "str", bool: "bool"}
_SECTION = re.compile(r"^(\w[\w ]*):\s*$")
_ARG_LINE = re.compile(r"^(\w+)\s*(?:\(([^)]*)\))?\s*:\s*(.*)$")

_MISSING = object()


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict[str, dict] = field(default_factory=dict)
    required: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "type": "function",
            "function": {
                "name": self.name,
                "description": self.description,
                "parameters": {
                    "properties": {k: dict(v) for k, v in self.parameters.items()},
                    "required": list(self.required),
                    "type": "object",
                },
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> ToolSpec:
        if data.get("type") != "function":
            raise ValueError("tool spec must have type 'function'")
        fn = data["function"]
        params = fn.get("parameters", {})
        return cls(
            name=fn["name"],
            description=fn.get("description", ""),
            parameters={k: dict(v) for k, v in params.get("properties", {}).items()},
            required=list(params.get("required", [])),
        )


@dataclass(frozen=True)
class ToolParam:
    name: str
    type: str | None = None  # python type name: int | float | str | bool
    default: Any = _MISSING

    @property
    def has_default(self) -> bool:
        return self.default is not _MISSING


@dataclass
class NativeTool:
    """A callable the model may invoke; built from a Python function or declared directly."""

    name: str
    params: list[ToolParam]
    doc: str
    func: Callable[..., Any]

    @classmethod
    def from_function(cls, func: Callable[..., Any], name: str | None = None) -> NativeTool:
        params = []
        for p in inspect.signature(func).parameters.values():
            ann = p.annotation
            if isinstance(ann, str):
                type_name = ann
            elif ann is inspect.Parameter.empty:
                type_name = None
            else:
                type_name = _PY_TYPES.get(ann, getattr(ann, "__name__", str(ann)))
            default = p.default if p.default is not inspect.Parameter.empty else _MISSING
            params.append(ToolParam(p.name, type_name, default))
        return cls(name or func.__name__, params, inspect.getdoc(func) or "", func)

    def spec(self) -> ToolSpec:
        return build_tool_spec(self)

    def invoke(self, arguments: Any) -> Any:
        return self.func(**decode_arguments(self, arguments))


def parse_google_docstring(doc: str) -> tuple[str, dict[str, tuple[str | None, str]]]:
    """Return ``(description, {arg: (type, description)})`` from a Google-style docstring."""
    lines = inspect.cleandoc(doc or "").splitlines()
    description = ""
    for line in lines:
        if line.strip():
            description = line.strip()
            break
    args: dict[str, tuple[str | None, str]] = {}
    section = None
    section_indent = 0
    entry_indent = None
    current = None
    for line in lines:
        stripped = line.strip()
        indent = len(line) - len(line.lstrip())
        header = _SECTION.match(stripped)
        if header and (section is None or indent <= section_indent):
            section = header.group(1).lower()
            section_indent = indent
            entry_indent = None
            current = None
            continue
        if section not in ("args", "arguments", "parameters"):
            continue
        if not stripped:
            continue
        if indent <= section_indent:
            section = None
            continue
        if entry_indent is None:
            entry_indent = indent
        if indent == entry_indent:
            m = _ARG_LINE.match(stripped)
            if not m:
                raise DocstringParseError(f"cannot parse argument line: {stripped!r}")
            name, typ, desc = m.group(1), m.group(2), m.group(3).strip()
            args[name] = (typ.strip() if typ else None, desc)
            current = name
        elif current is not None:
            typ, desc = args[current]
            args[current] = (typ, (desc + " " + stripped).strip())
    return description, args


def build_tool_spec(tool: NativeTool | Callable) -> ToolSpec:
    """Build the function-calling spec from a tool's typed parameters and docstring."""
    if not isinstance(tool, NativeTool):
        tool = NativeTool.from_function(tool)
    description, documented = parse_google_docstring(tool.doc)
    properties: dict[str, dict] = {}
    required: list[str] = []
    declared = {p.name for p in tool.params}
    for extra in documented:
        if extra not in declared:
            raise DocstringParseError(f"docstring of '{tool.name}' documents unknown parameter '{extra}'")
    for p in tool.params:
        if p.name not in documented:
            raise DocstringParseError(f"parameter '{p.name}' of '{tool.name}' has no Args entry in the docstring")
        doc_type, desc = documented[p.name]
        type_name = p.type or doc_type
        if type_name not in TYPE_NAMES:
            raise DocstringParseError(f"parameter '{p.name}' of '{tool.name}' has unsupported type {type_name!r}")
        properties[p.name] = {"description": desc, "type": TYPE_NAMES[type_name]}
        if not p.has_default:
            required.append(p.name)
    return ToolSpec(tool.name, description, properties, required)


def _check_type(tool: str, name: str, type_name: str | None, value: Any) -> Any:
    if type_name is None:
        return value
    if type_name == "int":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
    elif type_name == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
    elif type_name == "str":
        if isinstance(value, str):
            return value
    elif type_name == "bool":
        if isinstance(value, bool):
            return value
    raise ArgumentDecodeError(f"argument '{name}' of tool '{tool}' expects {type_name}, got {type(value).__name__}")


def decode_arguments(tool: NativeTool, arguments: Any) -> dict[str, Any]:
    """Validate a tool call's JSON arguments against the tool's declared parameters."""
    if isinstance(arguments, str):
        try:
            arguments = json.loads(arguments) if arguments.strip() else {}
        except json.JSONDecodeError as exc:
            raise ArgumentDecodeError(f"arguments for tool '{tool.name}' are not valid JSON: {exc}") from None
    if not isinstance(arguments, dict):
        raise ArgumentDecodeError(f"arguments for tool '{tool.name}' must be a JSON object")
    known = {p.name: p for p in tool.params}
    extra = sorted(set(arguments) - set(known))
    if extra:
        raise ArgumentDecodeError(f"unexpected argument(s) for tool '{tool.name}': {', '.join(extra)}")
    out = {}
    doc_types = {}
    try:
        doc_types = {k: t for k, (t, _) in parse_google_docstring(tool.doc)[1].items()}
    except DocstringParseError:
        pass
    for p in tool.params:
        if p.name in arguments:
            out[p.name] = _check_type(tool.name, p.name, p.type or doc_types.get(p.name), arguments[p.name])
        elif not p.has_default:
            raise ArgumentDecodeError(f"missing argument '{p.name}' for tool '{tool.name}'")
    return out


def default_arguments(spec: ToolSpec) -> dict[str, Any]:
    """Zero-valued arguments for every required parameter of ``spec``."""
    zeros = {"integer": 0, "number": 0.0, "string": "", "boolean": False}
    return {name: zeros[spec.parameters[name]["type"]] for name in spec.required}
