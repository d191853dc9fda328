"""Prompt templates with {{variable}} interpolation.

Template file format: a header block of "key: value" lines (name, version,
variables), then a delimiter line, then the user-message body. An optional
system section sits between a "--- system ---" delimiter and the body
delimiter::

    name: syntax_feedback
    version: 1.0
    variables: essay
    --- system ---
    optional system text
    ---
    user body with {{essay}}

Rendering is strict and deterministic: bindings must cover the declared
variables exactly, and interpolated values are never re-scanned, so essay
text passes through verbatim.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

VARIABLE_RE = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")

_SYSTEM_DELIMITER = "--- system ---"

BUNDLED_TEMPLATES = ("placeholder_replacement", "syntax_feedback")


class TemplateError(Exception):
    """Malformed template file or bad render bindings."""


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    version: str
    system_text: str | None
    user_text: str
    required_variables: frozenset[str]


@dataclass(frozen=True)
class RenderedPrompt:
    """Ordered (role, content) messages ready for a chat endpoint."""

    messages: tuple[tuple[str, str], ...]
    template_name: str
    template_version: str


def _extract_variables(text: str, where: str) -> set[str]:
    found = set(VARIABLE_RE.findall(text))
    leftover = VARIABLE_RE.sub("", text)
    if "{{" in leftover or "}}" in leftover:
        raise TemplateError(f"{where}: stray '{{{{' or '}}}}' outside a {{{{variable}}}} slot")
    return found


def parse_template(content: str, default_name: str = "template") -> PromptTemplate:
    lines = content.split("\n")
    header: dict[str, str] = {}
    idx = 0
    while idx < len(lines):
        line = lines[idx]
        if line.strip().startswith("---"):
            break
        if line.strip():
            if ":" not in line:
                raise TemplateError(f"header line {idx + 1} is not 'key: value': {line!r}")
            key, value = line.split(":", 1)
            header[key.strip().lower()] = value.strip()
        idx += 1
    else:
        raise TemplateError("missing '---' delimiter before the template body")

    system_text: str | None = None
    if lines[idx].strip() == _SYSTEM_DELIMITER:
        idx += 1
        system_lines: list[str] = []
        while idx < len(lines) and not lines[idx].strip().startswith("---"):
            system_lines.append(lines[idx])
            idx += 1
        if idx >= len(lines):
            raise TemplateError("system section not closed by a '---' delimiter")
        system_text = "\n".join(system_lines).strip("\n")
    user_text = "\n".join(lines[idx + 1 :]).strip("\n")
    if not user_text:
        raise TemplateError("template has an empty user body")

    declared = {
        v.strip()
        for v in header.get("variables", "").split(",")
        if v.strip()
    }
    used = _extract_variables(user_text, "user body")
    if system_text:
        used |= _extract_variables(system_text, "system section")
    if used != declared:
        missing = sorted(used - declared)
        unused = sorted(declared - used)
        parts = []
        if missing:
            parts.append(f"used but not declared: {', '.join(missing)}")
        if unused:
            parts.append(f"declared but never used: {', '.join(unused)}")
        raise TemplateError("variable mismatch: " + "; ".join(parts))

    version = header.get("version") or hashlib.sha256(content.encode("utf-8")).hexdigest()[:12]
    return PromptTemplate(
        name=header.get("name", default_name),
        version=version,
        system_text=system_text,
        user_text=user_text,
        required_variables=frozenset(declared),
    )


def load_template(path: str | Path) -> PromptTemplate:
    path = Path(path)
    if not path.exists():
        raise TemplateError(f"template file not found: {path}")
    return parse_template(path.read_text(encoding="utf-8"), default_name=path.stem)


def load_bundled_template(name: str) -> PromptTemplate:
    """Load one of the templates shipped with the package."""
    if name not in BUNDLED_TEMPLATES:
        raise TemplateError(
            f"unknown bundled template '{name}'; available: {', '.join(BUNDLED_TEMPLATES)}"
        )
    content = resources.files("syntaxforge").joinpath(f"templates/{name}.prompt").read_text("utf-8")
    return parse_template(content, default_name=name)


def _interpolate(text: str, bindings: dict[str, str]) -> str:
    # Single pass: split on variable slots, then join with values, so bound
    # values are never themselves scanned for slots.
    parts = VARIABLE_RE.split(text)
    # re.split with one group yields [literal, varname, literal, varname, ...]
    out: list[str] = []
    for i, part in enumerate(parts):
        if i % 2 == 0:
            out.append(part)
        else:
            out.append(bindings[part])
    return "".join(out)


def render(template: PromptTemplate, bindings: dict[str, str]) -> RenderedPrompt:
    """Render a template; bindings must cover required_variables exactly."""
    provided = set(bindings)
    missing = sorted(template.required_variables - provided)
    extra = sorted(provided - template.required_variables)
    if missing:
        raise TemplateError(f"missing bindings: {', '.join(missing)}")
    if extra:
        raise TemplateError(f"unexpected bindings: {', '.join(extra)}")
    messages: list[tuple[str, str]] = []
    if template.system_text:
        messages.append(("system", _interpolate(template.system_text, bindings)))
    messages.append(("user", _interpolate(template.user_text, bindings)))
    return RenderedPrompt(
        messages=tuple(messages),
        template_name=template.name,
        template_version=template.version,
    )
