"""applscript: compiler and asynchronous runtime for the APPL-script prompt language."""

from __future__ import annotations

__version__ = "0.1.0"

from .compiler import compile_source  # noqa: E402
from .context import promptify, render_messages  # noqa: E402
from .interpreter import Interpreter, RuntimeEnv, run_program  # noqa: E402

__all__ = ["Interpreter", "RuntimeEnv", "__version__", "compile_source", "promptify", "render_messages", "run_program"]
