"""Native tools available to every program unless the embedder replaces the registry."""

from __future__ import annotations

from typing import Callable, Iterable

from .backends.toolspec import NativeTool


def _isprime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def is_lucky(x: int) -> bool:
    """Determine whether the input number is a lucky number.

    Args:
        x (int): The input number to be checked.
    """
    return _isprime(x + 3)


def search(query: str) -> str:
    """Search the web for a query.

    Args:
        query (str): The search keywords.
    """
    return f"No results found for {query!r}."


def make_registry(funcs: Iterable[Callable | NativeTool] = ()) -> dict[str, NativeTool]:
    out: dict[str, NativeTool] = {}
    for f in funcs:
        tool = f if isinstance(f, NativeTool) else NativeTool.from_function(f)
        out[tool.name] = tool
    return out


def default_tools() -> dict[str, NativeTool]:
    return make_registry([is_lucky, search])
