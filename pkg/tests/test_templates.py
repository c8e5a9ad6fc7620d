from __future__ import annotations

import hashlib
from collections import Counter
from importlib import resources

import pytest

from fidlkit import rng, templates, vocab
from fidlkit.errors import UnknownTemplateError

# Frozen checksum of the template table file; any edit must be deliberate.
TABLE_SHA256 = "b07f94923795bfe0c1eb224c7306445ee9ba3a72300ddbb1960f7fa573bc2a9a"


def test_table_checksum_frozen():
    data = (resources.files("fidlkit") / "data/vqa_templates.tsv").read_bytes()
    assert hashlib.sha256(data).hexdigest() == TABLE_SHA256


def test_ten_templates_in_order():
    ts = templates.list_templates()
    assert len(ts) == templates.TEMPLATE_COUNT == 10
    assert [t.id for t in ts] == list(range(10))


def test_first_words_stay_in_vocabulary():
    lowered_pos = {w.lower() for w in vocab.POSITIVE_WORDS}
    lowered_neg = {w.lower() for w in vocab.NEGATIVE_WORDS}
    for t in templates.list_templates():
        assert templates.first_word(t.positive_answer).lower() in lowered_pos
        assert templates.first_word(t.negative_answer).lower() in lowered_neg


def test_known_irregular_rows_survive_verbatim():
    ts = templates.list_templates()
    # row 1: negative opens with "Not," rather than "No,"
    assert ts[1].negative_answer.startswith("Not,")
    # row 2: capital W after the comma
    assert ts[2].negative_answer.startswith("Never, We")
    # row 6: missing space after the comma
    assert ts[6].negative_answer.startswith("Never,there")
    # row 7: positive leads with "True,"
    assert ts[7].positive_answer.startswith("True,")


def test_first_word_strips_punctuation():
    assert templates.first_word("Never,there is") == "Never"
    assert templates.first_word("Yes, it is.") == "Yes"
    assert templates.first_word("True—statement") == "True"


def test_render_both_labels():
    for t in templates.list_templates():
        pos = templates.render(t.id, 1)
        neg = templates.render(t.id, 0)
        assert pos.question == neg.question == t.question
        assert pos.answer == t.positive_answer
        assert neg.answer == t.negative_answer
        assert pos.template_id == t.id


def test_render_out_of_range():
    with pytest.raises(UnknownTemplateError):
        templates.render(10, 1)
    with pytest.raises(UnknownTemplateError):
        templates.render(-1, 0)


def test_sample_template_golden_seed0():
    assert templates.sample_template(0).id == 5


def test_sample_template_is_value_mod_ten():
    for seed in range(50):
        assert templates.sample_template(seed).id == rng.value(seed, 0) % 10


def test_sample_template_long_run_frequencies():
    counts = Counter(templates.sample_template(seed).id for seed in range(100_000))
    for tid in range(10):
        assert 0.09 < counts[tid] / 100_000 < 0.11
