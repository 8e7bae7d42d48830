"""Text form of coefficient and initial-data specs.

Coefficients are written as ``;``-separated items::

    background=1.0; delta(center=0.0, weight=1.0); jump(center=0.5, height=2.0);
    bump(center=[0.0, 0.5], width=1.0, height=0.5); sampled(path="g.csv")

Initial data is a single item: ``gaussian(center=0.0, a=1.0, k0=0.0)``,
``delta(center=0.0, weight=1.0)`` or ``sampled(path="u0.csv")``.
"""

import json
import logging
import re
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..errors import CoefficientError, SpecSyntaxError
from .coefficients import (
    Bump,
    CoefficientSpec,
    DataSpec,
    Delta,
    GaussianPacket,
    Jump,
    Sampled,
    SampledData,
)

logger = logging.getLogger(__name__)

Value = Union[float, Tuple[float, ...], str]

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<number>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?|[-+]?inf|nan)
      | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<string>"(?:[^"\\]|\\.)*")
      | (?P<punct>[=;,()\[\]])
    )""",
    re.VERBOSE,
)

_COEFFICIENT_ATOMS = {
    "delta": ("center", "weight"),
    "jump": ("center", "height"),
    "bump": ("center", "width", "height"),
    "sampled": ("path",),
}
_DATA_ITEMS = {
    "gaussian": ("center", "a", "k0", "amplitude"),
    "delta": ("center", "weight"),
    "sampled": ("path",),
}


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: List[Tuple[str, str, int]] = []
        position = 0
        stripped = text.rstrip()
        while position < len(stripped):
            match = _TOKEN.match(stripped, position)
            if match is None or match.end() == position:
                offset = position + len(stripped[position:]) - len(stripped[position:].lstrip())
                raise SpecSyntaxError("unexpected character", text, offset)
            kind = match.lastgroup or ""
            start = match.start(kind)
            self.items.append((kind, match.group(kind), start))
            position = match.end()
        self.index = 0

    def peek(self) -> Optional[Tuple[str, str, int]]:
        return self.items[self.index] if self.index < len(self.items) else None

    def position(self) -> int:
        token = self.peek()
        return token[2] if token else len(self.text)

    def next(self, expected: str) -> Tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise SpecSyntaxError(f"expected {expected}, found end of text", self.text, len(self.text))
        self.index += 1
        return token

    def expect_punct(self, symbol: str) -> None:
        kind, value, start = self.next(repr(symbol))
        if kind != "punct" or value != symbol:
            raise SpecSyntaxError(f"expected {symbol!r}, found {value!r}", self.text, start)

    def at_punct(self, symbol: str) -> bool:
        token = self.peek()
        return token is not None and token[0] == "punct" and token[1] == symbol


def _parse_value(tokens: _Tokens) -> Value:
    kind, value, start = tokens.next("a value")
    if kind == "number":
        return float(value)
    if kind == "string":
        return json.loads(value)
    if kind == "punct" and value == "[":
        numbers: List[float] = []
        while True:
            kind, item, item_start = tokens.next("a number")
            if kind != "number":
                raise SpecSyntaxError(f"expected a number, found {item!r}", tokens.text, item_start)
            numbers.append(float(item))
            if tokens.at_punct(","):
                tokens.next("','")
                continue
            tokens.expect_punct("]")
            return tuple(numbers)
    raise SpecSyntaxError(f"expected a value, found {value!r}", tokens.text, start)


def _parse_item(tokens: _Tokens) -> Tuple[str, Union[Value, Dict[str, Value]], int]:
    kind, name, start = tokens.next("an item")
    if kind != "name":
        raise SpecSyntaxError(f"expected an item name, found {name!r}", tokens.text, start)
    if tokens.at_punct("="):
        tokens.next("'='")
        return name, _parse_value(tokens), start
    tokens.expect_punct("(")
    args: Dict[str, Value] = {}
    if not tokens.at_punct(")"):
        while True:
            kind, key, key_start = tokens.next("an argument name")
            if kind != "name":
                raise SpecSyntaxError(f"expected an argument name, found {key!r}", tokens.text, key_start)
            if key in args:
                raise SpecSyntaxError(f"duplicate argument {key!r}", tokens.text, key_start)
            tokens.expect_punct("=")
            args[key] = _parse_value(tokens)
            if tokens.at_punct(","):
                tokens.next("','")
                continue
            break
    tokens.expect_punct(")")
    return name, args, start


def _items(text: str) -> List[Tuple[str, Union[Value, Dict[str, Value]], int]]:
    tokens = _Tokens(text)
    items = []
    while tokens.peek() is not None:
        items.append(_parse_item(tokens))
        if tokens.peek() is None:
            break
        tokens.expect_punct(";")
    if not items:
        raise SpecSyntaxError("empty spec", text, 0)
    return items


def _check_args(
    text: str, name: str, args: Dict[str, Value], allowed: Tuple[str, ...], start: int
) -> None:
    unknown = sorted(set(args) - set(allowed))
    if unknown:
        raise SpecSyntaxError(
            f"{name}() does not take {', '.join(unknown)} (allowed: {', '.join(allowed)})", text, start
        )


def _number(text: str, args: Dict[str, Value], key: str, start: int, default: Optional[float] = None) -> float:
    if key not in args:
        if default is None:
            raise SpecSyntaxError(f"missing argument {key!r}", text, start)
        return default
    value = args[key]
    if not isinstance(value, float):
        raise SpecSyntaxError(f"argument {key!r} must be a number", text, start)
    return value


def _center(text: str, args: Dict[str, Value], start: int) -> Tuple[float, ...]:
    value = args.get("center", 0.0)
    if isinstance(value, str):
        raise SpecSyntaxError("center must be a number or [x, y]", text, start)
    return (value,) if isinstance(value, float) else value


def _path(text: str, args: Dict[str, Value], start: int, base_dir: Optional[Path]) -> Tuple[Path, str]:
    value = args.get("path")
    if not isinstance(value, str):
        raise SpecSyntaxError("sampled() needs path=\"...\"", text, start)
    path = Path(value)
    if base_dir is not None and not path.is_absolute():
        path = base_dir / path
    return path, value


def _wrap_errors(text: str, start: int, error: CoefficientError) -> SpecSyntaxError:
    return SpecSyntaxError(str(error), text, start)


def parse_coefficient_spec(text: str, base_dir: Optional[Path] = None) -> CoefficientSpec:
    """Parse the text form of a coefficient; relative sample paths resolve against ``base_dir``."""
    from .report_writer import read_field_csv

    background: Optional[float] = None
    atoms = []
    for name, body, start in _items(text):
        try:
            if name == "background":
                if not isinstance(body, float):
                    raise SpecSyntaxError("background must be a number", text, start)
                if background is not None:
                    raise SpecSyntaxError("background given twice", text, start)
                background = body
                continue
            if name not in _COEFFICIENT_ATOMS or not isinstance(body, dict):
                raise SpecSyntaxError(
                    f"unknown coefficient atom {name!r} (known: {', '.join(_COEFFICIENT_ATOMS)})",
                    text,
                    start,
                )
            _check_args(text, name, body, _COEFFICIENT_ATOMS[name], start)
            if name == "delta":
                atoms.append(Delta(_center(text, body, start), _number(text, body, "weight", start, 1.0)))
            elif name == "jump":
                center = _center(text, body, start)
                atoms.append(Jump(center[0], _number(text, body, "height", start, 1.0)))
            elif name == "bump":
                atoms.append(
                    Bump(
                        _center(text, body, start),
                        _number(text, body, "width", start, 1.0),
                        _number(text, body, "height", start, 1.0),
                    )
                )
            else:
                path, source = _path(text, body, start, base_dir)
                atoms.append(Sampled(read_field_csv(path, complex_valued=False), source))  # type: ignore[arg-type]
        except CoefficientError as e:
            raise _wrap_errors(text, start, e) from e
    if background is None:
        raise SpecSyntaxError("coefficient spec needs background=<positive number>", text, 0)
    try:
        spec = CoefficientSpec(background, tuple(atoms))
    except CoefficientError as e:
        raise _wrap_errors(text, 0, e) from e
    logger.debug(f"Parsed coefficient spec with {len(atoms)} atom(s)")
    return spec


def parse_data_spec(text: str, base_dir: Optional[Path] = None) -> DataSpec:
    """Parse the text form of the initial data."""
    from .report_writer import read_field_csv

    items = _items(text)
    if len(items) != 1:
        raise SpecSyntaxError("initial data is a single item", text, items[1][2])
    name, body, start = items[0]
    if name not in _DATA_ITEMS or not isinstance(body, dict):
        raise SpecSyntaxError(
            f"unknown initial data {name!r} (known: {', '.join(_DATA_ITEMS)})", text, start
        )
    _check_args(text, name, body, _DATA_ITEMS[name], start)
    try:
        if name == "gaussian":
            return GaussianPacket(
                _center(text, body, start),
                _number(text, body, "a", start, 1.0),
                _number(text, body, "k0", start, 0.0),
                _number(text, body, "amplitude", start, 1.0),
            )
        if name == "delta":
            return Delta(_center(text, body, start), _number(text, body, "weight", start, 1.0))
        path, source = _path(text, body, start, base_dir)
        return SampledData(read_field_csv(path, complex_valued=True), source)  # type: ignore[arg-type]
    except CoefficientError as e:
        raise _wrap_errors(text, start, e) from e


def _format_center(center: Tuple[float, ...]) -> str:
    if len(center) == 1:
        return repr(center[0])
    return "[" + ", ".join(repr(c) for c in center) + "]"


def _format_path(source: Optional[str]) -> str:
    if source is None:
        raise CoefficientError("sampled values without a source path have no text form")
    return f"sampled(path={json.dumps(source)})"


def format_coefficient_spec(spec: CoefficientSpec) -> str:
    """Inverse of parse_coefficient_spec."""
    parts = [f"background={spec.background!r}"]
    for atom in spec.atoms:
        if isinstance(atom, Delta):
            parts.append(f"delta(center={_format_center(atom.center)}, weight={atom.weight!r})")
        elif isinstance(atom, Jump):
            parts.append(f"jump(center={atom.center!r}, height={atom.height!r})")
        elif isinstance(atom, Bump):
            parts.append(
                f"bump(center={_format_center(atom.center)}, width={atom.width!r}, height={atom.height!r})"
            )
        else:
            parts.append(_format_path(atom.source))
    return "; ".join(parts)


def format_data_spec(spec: DataSpec) -> str:
    """Inverse of parse_data_spec."""
    if isinstance(spec, GaussianPacket):
        text = f"gaussian(center={_format_center(spec.center)}, a={spec.a!r}, k0={spec.k0!r}"
        if spec.amplitude != 1.0:
            text += f", amplitude={spec.amplitude!r}"
        return text + ")"
    if isinstance(spec, Delta):
        return f"delta(center={_format_center(spec.center)}, weight={spec.weight!r})"
    return _format_path(spec.source)
