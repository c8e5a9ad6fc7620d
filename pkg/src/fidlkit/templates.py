"""Forensic VQA template table.

Ten (question, positive answer, negative answer) triples keep detection
prompts diverse while guaranteeing that every answer's first word lands
in the matching half of the detection vocabulary.  The table lives in a
checked-in TSV file (one row per template: id, question, positive,
negative) so transcription is auditable and checksummable; the wording
is stored verbatim, orthographic quirks included, because only the
first token carries scoring weight.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from . import rng
from .errors import TemplateTableError, UnknownTemplateError
from .vocab import AUTHENTIC, NEGATIVE_WORDS, POSITIVE_WORDS, TAMPERED

TEMPLATE_COUNT = 10
_TABLE_RESOURCE = "vqa_templates.tsv"

_FIRST_WORD_RE = re.compile(r"^[A-Za-z]+")


@dataclass(frozen=True)
class VqaTemplate:
    id: int
    question: str
    positive_answer: str
    negative_answer: str


@dataclass(frozen=True)
class RenderedPair:
    template_id: int
    label: str
    question: str
    answer: str


def first_word(text: str) -> str:
    """Leading alphabetic run of the text; punctuation terminates the word."""
    m = _FIRST_WORD_RE.match(text)
    if m is None:
        raise TemplateTableError(f"answer has no leading word: {text!r}")
    return m.group(0)


def table_text() -> str:
    """Raw contents of the template table file."""
    return (resources.files("fidlkit.data") / _TABLE_RESOURCE).read_text("utf-8")


def _word_in(word: str, vocabulary: tuple[str, ...]) -> bool:
    lowered = word.lower()
    return any(lowered == v.lower() for v in vocabulary)


@lru_cache(maxsize=1)
def list_templates() -> tuple[VqaTemplate, ...]:
    """All 10 templates in table order; validated on first load."""
    templates = []
    for line_no, line in enumerate(table_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise TemplateTableError(
                f"line {line_no}: expected 4 tab-separated fields, got {len(parts)}")
        tid = int(parts[0])
        tpl = VqaTemplate(id=tid, question=parts[1],
                          positive_answer=parts[2], negative_answer=parts[3])
        if not _word_in(first_word(tpl.positive_answer), POSITIVE_WORDS):
            raise TemplateTableError(
                f"template {tid}: positive answer starts outside the positive vocabulary")
        if not _word_in(first_word(tpl.negative_answer), NEGATIVE_WORDS):
            raise TemplateTableError(
                f"template {tid}: negative answer starts outside the negative vocabulary")
        templates.append(tpl)
    if [t.id for t in templates] != list(range(TEMPLATE_COUNT)):
        raise TemplateTableError(
            f"expected template ids 0..{TEMPLATE_COUNT - 1} in order")
    return tuple(templates)


def render(template_id: int, label: int) -> RenderedPair:
    """Question plus the answer matching the binary ground-truth label."""
    if not 0 <= template_id < TEMPLATE_COUNT:
        raise UnknownTemplateError(f"template id {template_id} outside 0..9")
    tpl = list_templates()[template_id]
    tampered = bool(label)
    return RenderedPair(
        template_id=template_id,
        label=TAMPERED if tampered else AUTHENTIC,
        question=tpl.question,
        answer=tpl.positive_answer if tampered else tpl.negative_answer,
    )


def sample_template(seed: int) -> VqaTemplate:
    """Deterministic uniform draw over the 10 templates."""
    return list_templates()[rng.value(seed, 0) % TEMPLATE_COUNT]
