from .base import Backend, GenerationRequest, GenerationResponse, canonical_json
from .http import HttpBackend, http_complete, parse_response, parse_tool_calls
from .mock import MockBackend, load_script, mock_complete
from .toolspec import NativeTool, ToolParam, ToolSpec, build_tool_spec, decode_arguments

__all__ = [
    "Backend",
    "GenerationRequest",
    "GenerationResponse",
    "HttpBackend",
    "MockBackend",
    "NativeTool",
    "ToolParam",
    "ToolSpec",
    "build_tool_spec",
    "canonical_json",
    "decode_arguments",
    "http_complete",
    "load_script",
    "mock_complete",
    "parse_response",
    "parse_tool_calls",
]
