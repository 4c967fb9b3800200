"""JSON config documents with line-anchored diagnostics."""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .errors import ConfigError

_REQUIRED = object()


class Document:
    """Parsed JSON text that remembers where each key was written."""

    def __init__(self, text: str, path=None):
        self.text = text
        self.path = path
        try:
            self.data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, path, exc.lineno, exc.colno) from None
        if not isinstance(self.data, dict):
            raise ConfigError("top level must be a JSON object", path, 1, 1)

    @classmethod
    def load(cls, path) -> "Document":
        try:
            text = Path(path).read_text()
        except FileNotFoundError:
            raise ConfigError("file not found", path) from None
        except OSError as exc:
            raise ConfigError(exc.strerror or str(exc), path) from None
        return cls(text, path)

    def line_of(self, key: str) -> int | None:
        m = re.search(r'"' + re.escape(key) + r'"\s*:', self.text)
        return None if m is None else self.text.count("\n", 0, m.start()) + 1

    def error(self, message: str, key: str | None = None) -> ConfigError:
        return ConfigError(message, self.path, self.line_of(key) if key else None)

    def root(self) -> "Section":
        return Section(self, self.data, "")


class Section:
    """Typed reads from one JSON object; ``finish`` rejects unknown keys."""

    def __init__(self, doc: Document, data: dict, name: str):
        self.doc = doc
        self.data = data
        self.name = name
        self._seen: set[str] = set()

    def _where(self, key):
        return f"{self.name}.{key}" if self.name else key

    def has(self, key) -> bool:
        return key in self.data

    def raw(self, key, default=_REQUIRED):
        self._seen.add(key)
        if key not in self.data:
            if default is _REQUIRED:
                raise ConfigError(f"missing required key '{self._where(key)}'", self.doc.path, self.doc.line_of(self.name.split(".")[-1]) if self.name else None)
            return default
        return self.data[key]

    def number(self, key, default=_REQUIRED, lo=-math.inf, hi=math.inf) -> float:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.doc.error(f"'{self._where(key)}' must be a number", key)
        if not lo <= v <= hi:
            raise self.doc.error(f"'{self._where(key)}' = {v} outside [{lo}, {hi}]", key)
        return float(v)

    def integer(self, key, default=_REQUIRED, lo=-(2**63), hi=2**63 - 1) -> int:
        v = self.raw(key, default)
        if isinstance(v, bool) or not isinstance(v, int):
            raise self.doc.error(f"'{self._where(key)}' must be an integer", key)
        if not lo <= v <= hi:
            raise self.doc.error(f"'{self._where(key)}' = {v} outside [{lo}, {hi}]", key)
        return v

    def string(self, key, default=_REQUIRED, choices=None) -> str:
        v = self.raw(key, default)
        if not isinstance(v, str):
            raise self.doc.error(f"'{self._where(key)}' must be a string", key)
        if choices is not None and v not in choices:
            raise self.doc.error(f"'{self._where(key)}' must be one of {', '.join(choices)}", key)
        return v

    def vector(self, key, n: int, default=_REQUIRED) -> tuple:
        v = self.raw(key, default)
        if v is default and default is not _REQUIRED:
            return v
        if not isinstance(v, list) or len(v) != n or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v):
            raise self.doc.error(f"'{self._where(key)}' must be a list of {n} numbers", key)
        return tuple(float(c) for c in v)

    def items(self, key, default=_REQUIRED) -> list:
        v = self.raw(key, default)
        if not isinstance(v, list):
            raise self.doc.error(f"'{self._where(key)}' must be a list", key)
        return v

    def section(self, key, optional: bool = True) -> "Section":
        v = self.raw(key, {} if optional else _REQUIRED)
        if not isinstance(v, dict):
            raise self.doc.error(f"'{self._where(key)}' must be an object", key)
        return Section(self.doc, v, self._where(key))

    def child(self, data, label: str) -> "Section":
        if not isinstance(data, dict):
            raise ConfigError(f"'{self._where(label)}' must be an object", self.doc.path)
        return Section(self.doc, data, self._where(label))

    def finish(self):
        extra = sorted(set(self.data) - self._seen)
        if extra:
            raise self.doc.error(f"unknown key '{self._where(extra[0])}'", extra[0])
