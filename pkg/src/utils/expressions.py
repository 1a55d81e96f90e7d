"""Time-parameterized signal expressions declared in scenario files.

Only a fixed vocabulary is accepted: numeric literals, the variable ``t``
(seconds), ``pi``, ``sin``/``cos`` calls, unary +/- and the binary operators
+ - * /. Anything else is rejected at load time. Accepted sources are turned
into sympy expressions and compiled to numpy functions of t.
"""

import re
from dataclasses import dataclass, field
from typing import Callable, Sequence, Tuple, Union

import numpy as np
import sympy

from src.errors import ScenarioParseError

T = sympy.Symbol("t", real=True)
NAMESPACE = {"t": T, "pi": sympy.pi, "sin": sympy.sin, "cos": sympy.cos}
FUNCTIONS = (sympy.sin, sympy.cos)

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|([-+*/()]))")

TimeLike = Union[float, np.ndarray]


def _check_tokens(source: str) -> None:
    position = 0
    text = source.rstrip()
    while position < len(text):
        match = _TOKEN.match(text, position)
        if match is None:
            raise ScenarioParseError(f"unsupported syntax at {text[position:]!r} in {source!r}")
        name = match.group(2)
        if name is not None and name not in NAMESPACE:
            raise ScenarioParseError(f"unknown name {name!r} in {source!r}")
        position = match.end()
    if "**" in text.replace(" ", ""):
        raise ScenarioParseError(f"unsupported operator ** in {source!r}")


def parse_signal(source: str) -> sympy.Expr:
    """Validate a source string and return its sympy expression in t.

    Raises:
        ScenarioParseError: On unknown names, unsupported syntax or a value
            that is not finite
    """
    _check_tokens(source)
    try:
        expr = sympy.sympify(source.strip(), locals=NAMESPACE, rational=False)
    except (sympy.SympifyError, SyntaxError, TypeError) as exc:
        raise ScenarioParseError(f"malformed expression {source!r}: {exc}") from exc
    if not isinstance(expr, sympy.Expr) or expr.free_symbols - {T}:
        raise ScenarioParseError(f"unsupported expression {source!r}")
    if any(f.func not in FUNCTIONS for f in expr.atoms(sympy.Function)):
        raise ScenarioParseError(f"only sin(...) and cos(...) calls are allowed in {source!r}")
    if expr.has(sympy.zoo, sympy.oo, -sympy.oo, sympy.nan):
        raise ScenarioParseError(f"expression {source!r} is not finite")
    return expr


@dataclass(frozen=True)
class SignalExpression:
    """A validated scalar expression in t."""

    source: str
    _fn: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        expr = parse_signal(self.source)
        object.__setattr__(self, "_fn", sympy.lambdify(T, expr, modules="numpy"))

    def __call__(self, t: TimeLike) -> TimeLike:
        """Evaluate at a time (seconds) or an array of times."""
        value = self._fn(t)
        if isinstance(t, np.ndarray):
            return np.broadcast_to(np.asarray(value, dtype=float), t.shape).copy()
        return float(value)


@dataclass(frozen=True)
class VectorExpression:
    """An n-vector of scalar expressions."""

    components: Tuple[SignalExpression, ...]

    @classmethod
    def parse(cls, sources: Sequence[str]) -> "VectorExpression":
        return cls(tuple(SignalExpression(str(s)) for s in sources))

    @property
    def sources(self) -> Tuple[str, ...]:
        return tuple(c.source for c in self.components)

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, t: TimeLike) -> np.ndarray:
        """Evaluate to shape (n,) for scalar t or (len(t), n) for an array of times."""
        return np.stack([c(t) for c in self.components], axis=-1)
