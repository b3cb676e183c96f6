"""Language-specific prompt templates.

Templates live in a UTF-8 JSON-lines file, one record per language with the
fields ``language_code`` and ``template``. The literal token ``{X}`` marks the
upper bound. Only the English and the opening of the Spanish template are
fixed; the rest are editable translations and can be replaced by passing a
custom file to :meth:`PromptCatalog.from_file`.
"""

from __future__ import annotations

import enum
import json
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

from .errors import InvalidRangeError, TemplateError, UnsupportedLanguageError

PLACEHOLDER = "{X}"


class Language(str, enum.Enum):
    CN = "CN"
    EN = "EN"
    ES = "ES"
    FR = "FR"
    IN = "IN"
    JP = "JP"
    RU = "RU"

    def __str__(self) -> str:
        return self.value

    @classmethod
    def parse(cls, value: "Language | str") -> "Language":
        if isinstance(value, Language):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise UnsupportedLanguageError(value) from None


def _code(language: Language | str) -> str:
    return language.value if isinstance(language, Language) else str(language).strip().upper()


class PromptCatalog:
    """Immutable mapping of language code to template text."""

    def __init__(self, templates: Mapping[str, str]):
        checked = {}
        for code, text in templates.items():
            if text.count(PLACEHOLDER) != 1:
                raise TemplateError(
                    f"template for {code!r} must contain {PLACEHOLDER} exactly once"
                )
            checked[_code(code)] = text
        self._templates = MappingProxyType(checked)

    @classmethod
    def from_file(cls, path: str | Path) -> "PromptCatalog":
        with open(path, encoding="utf-8") as fh:
            return cls(_read_records(fh))

    @classmethod
    def default(cls) -> "PromptCatalog":
        ref = resources.files("rngaudit") / "data" / "prompts.jsonl"
        with ref.open(encoding="utf-8") as fh:
            return cls(_read_records(fh))

    @property
    def languages(self) -> list[str]:
        return sorted(self._templates)

    def template(self, language: Language | str) -> str:
        try:
            return self._templates[_code(language)]
        except KeyError:
            raise UnsupportedLanguageError(language) from None

    def render(self, language: Language | str, upper: int) -> str:
        template = self.template(language)
        if isinstance(upper, bool) or not isinstance(upper, int) or upper < 2:
            raise InvalidRangeError(f"upper bound must be an integer >= 2, got {upper!r}")
        return template.replace(PLACEHOLDER, str(upper))


def _read_records(lines) -> dict[str, str]:
    templates: dict[str, str] = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            templates[rec["language_code"]] = rec["template"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise TemplateError(f"bad template record on line {lineno}: {exc}") from exc
    return templates


_DEFAULT: PromptCatalog | None = None


def default_catalog() -> PromptCatalog:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = PromptCatalog.default()
    return _DEFAULT


def render_prompt(language: Language | str, upper: int, catalog: PromptCatalog | None = None) -> str:
    """Render the prompt asking for a random number in ``[1, upper]``."""
    return (catalog or default_catalog()).render(language, upper)
