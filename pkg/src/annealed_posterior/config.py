"""Flat ``key = value`` configuration files.

Each command or experiment declares a schema: a mapping from key to its
default value.  The default's type decides how the text is parsed (``int``,
``float``, ``bool``, ``str``, or a tuple of floats written comma-separated).
Unknown keys and unparsable values raise :class:`ConfigError`.
Lines starting with ``#`` and blank lines are ignored; a trailing ``# ...``
comment after a value is stripped.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Mapping

from .errors import ConfigError

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}


def read_pairs(text: str, source: str = "<config>") -> dict:
    """Raw ``key -> value`` strings; duplicate keys are rejected."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: empty key")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def parse_value(key: str, text: str, default):
    """Parse ``text`` to the type of ``default``."""
    try:
        if isinstance(default, bool):
            low = text.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            value = float(text)
            if math.isnan(value):
                raise ValueError(text)
            return value
        if isinstance(default, tuple):
            return tuple(float(v) for v in text.split(",") if v.strip())
        if isinstance(default, str) or default is None:
            return text
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {text!r} as {type(default).__name__}") from None
    raise ConfigError(f"{key}: unsupported schema type {type(default).__name__}")


def apply_schema(pairs: Mapping[str, str], schema: Mapping[str, object], context: str = "config") -> dict:
    """Defaults from ``schema`` overridden by the parsed ``pairs``."""
    unknown = sorted(set(pairs) - set(schema))
    if unknown:
        raise ConfigError(f"{context}: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(sorted(schema))}")
    values = dict(schema)
    for key, text in pairs.items():
        values[key] = parse_value(key, text, schema[key])
    return values


def load_config(path, schema: Mapping[str, object], context: str = "config") -> dict:
    """Read ``path`` (or use defaults when ``path`` is None) and apply ``schema``."""
    if path is None:
        return dict(schema)
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return apply_schema(read_pairs(text, str(p)), schema, context)


def format_config(values: Mapping[str, object]) -> str:
    """Inverse of :func:`read_pairs` for round-tripping a parameter block."""
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, tuple):
            v = ", ".join(repr(float(x)) for x in v)
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"
