"""Prompt templates and placeholder substitution.

Two built-in templates ship with the package: one asking a generation
backend for a single clean English pseudo-reference, one asking for a
direct 0-100 quality score. Both may be overridden by user-supplied
template files; substitution is a single left-to-right pass, so values
containing placeholder-shaped text are never re-expanded.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

PLACEHOLDER_NAMES = ("src", "src_lang", "tgt_lang", "translation")

_PLACEHOLDER_RE = re.compile(r"\{(" + "|".join(PLACEHOLDER_NAMES) + r")\}")

GENERATION_TEMPLATE_ID = "generation"
DIRECT_SCORING_TEMPLATE_ID = "direct_scoring"


class PromptError(ValueError):
    pass


class EmptySource(PromptError):
    pass


class EmptyArgument(PromptError):
    pass


class MissingPlaceholderValue(PromptError):
    pass


class UnknownPlaceholder(PromptError):
    pass


@dataclass(frozen=True)
class PromptTemplate:
    template_id: str
    body: str

    def placeholders(self) -> set[str]:
        return set(_PLACEHOLDER_RE.findall(self.body))


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    template_id: str
    placeholder_values: dict[str, str]


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


def load_template(path: str | Path, template_id: str) -> PromptTemplate:
    """Load a template from a text file, normalizing line endings."""
    body = _normalize_newlines(Path(path).read_text(encoding="utf-8"))
    return PromptTemplate(template_id=template_id, body=body)


def _builtin(name: str) -> str:
    text = resources.files("pseudoref.templates").joinpath(name).read_text(encoding="utf-8")
    return _normalize_newlines(text)


def generation_template() -> PromptTemplate:
    return PromptTemplate(GENERATION_TEMPLATE_ID, _builtin("generation.txt"))


def direct_scoring_template() -> PromptTemplate:
    return PromptTemplate(DIRECT_SCORING_TEMPLATE_ID, _builtin("direct_scoring.txt"))


def render_template(tpl: PromptTemplate, values: dict[str, str]) -> RenderedPrompt:
    """Substitute placeholders in a single pass.

    Every placeholder present in the body must be supplied, and every
    supplied key must occur in the body; both directions are errors.
    """
    needed = tpl.placeholders()
    missing = needed - set(values)
    if missing:
        raise MissingPlaceholderValue(f"missing value(s) for {sorted(missing)}")
    extra = set(values) - needed
    if extra:
        raise UnknownPlaceholder(f"value(s) supplied for absent placeholder(s) {sorted(extra)}")
    text = _PLACEHOLDER_RE.sub(lambda m: values[m.group(1)], tpl.body)
    return RenderedPrompt(text=text, template_id=tpl.template_id, placeholder_values=dict(values))


def build_generation_prompt(src: str, tpl: PromptTemplate | None = None) -> RenderedPrompt:
    """Render the pseudo-reference generation prompt for one source sentence."""
    if not src.strip():
        raise EmptySource("source text is empty")
    if tpl is None:
        tpl = generation_template()
    return render_template(tpl, {"src": src})


def build_direct_scoring_prompt(
    src_lang: str, tgt_lang: str, translation: str, tpl: PromptTemplate | None = None
) -> RenderedPrompt:
    """Render the 0-100 direct-scoring prompt.

    The translation is substituted verbatim inside the template's existing
    double quotes; no escaping or re-quoting is applied.
    """
    for name, value in (("src_lang", src_lang), ("tgt_lang", tgt_lang), ("translation", translation)):
        if not value.strip():
            raise EmptyArgument(f"empty argument {name!r}")
    if tpl is None:
        tpl = direct_scoring_template()
    wanted = tpl.placeholders()
    values = {"src_lang": src_lang, "tgt_lang": tgt_lang, "translation": translation}
    return render_template(tpl, {k: v for k, v in values.items() if k in wanted})
