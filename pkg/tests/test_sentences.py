import random

import pytest
from conftest import make_doc, random_document, random_registry

from repominer.registry import compile_registry, find_mentions
from repominer.sentences import SegmentationError, SentenceIndex, segment_sentences


def spans_text(doc, index):
    return [doc.body_text[s:e] for s, e in index.spans]


class TestSegmentation:
    def test_three_plain_sentences(self):
        doc = make_doc("A is here. B follows. C ends.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == ["A is here.", "B follows.", "C ends."]

    def test_url_internal_period_is_not_a_boundary(self):
        doc = make_doc("Data at https://x.org/a.b is shared. Next.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == ["Data at https://x.org/a.b is shared.", "Next."]

    def test_abbreviations_protected(self):
        doc = make_doc("See Fig. 2 for details. Done.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == ["See Fig. 2 for details.", "Done."]

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("We use e.g. Zenodo here. Fine.", 2),
            ("This is i.e. The point. Hmm.", 2),
            ("Smith et al. Reported this. True.", 2),
            ("A vs. B was tested. Good.", 2),
            ("J. Smith ran the assay. Twice.", 2),
        ],
    )
    def test_protection_list(self, text, expected):
        assert len(segment_sentences(make_doc(text))) == expected

    def test_word_ending_in_abbreviation_is_not_protected(self):
        # "config." ends with "fig." but the f is mid-word
        doc = make_doc("Set the config. Then run.")
        assert len(segment_sentences(doc)) == 2

    def test_no_boundary_yields_one_sentence(self):
        doc = make_doc("just one long sentence without terminal punctuation")
        index = segment_sentences(doc)
        assert len(index) == 1

    def test_newline_always_ends_sentence(self):
        doc = make_doc("first line without period\nSecond line. And more.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == [
            "first line without period",
            "Second line.",
            "And more.",
        ]

    def test_boundary_requires_uppercase_or_digit(self):
        doc = make_doc("this ends. but continues lowercase. Then stops.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == [
            "this ends. but continues lowercase.",
            "Then stops.",
        ]

    def test_digit_starts_sentence(self):
        doc = make_doc("Counted twice. 42 samples were used.")
        assert len(segment_sentences(doc)) == 2

    def test_question_and_exclamation(self):
        doc = make_doc("Why share data? Because it helps! Really.")
        assert len(segment_sentences(doc)) == 3

    def test_empty_blocks_skipped(self):
        doc = make_doc("First.\n\n\nSecond one here.")
        index = segment_sentences(doc)
        assert spans_text(doc, index) == ["First.", "Second one here."]


class TestSentenceIndex:
    def test_spans_strictly_increasing_enforced(self):
        with pytest.raises(ValueError):
            SentenceIndex(spans=((0, 5), (3, 9)))

    def test_locate_finds_containing_span(self):
        index = SentenceIndex(spans=((0, 10), (11, 20)))
        assert index.locate(0) == 0
        assert index.locate(9) == 0
        assert index.locate(11) == 1
        with pytest.raises(SegmentationError):
            index.locate(10)
        with pytest.raises(SegmentationError):
            index.locate(25)

    def test_every_mention_offset_inside_exactly_one_span(self):
        rng = random.Random(2024)
        entries = random_registry(rng, size=12)
        registry = compile_registry(entries)
        checked = 0
        for i in range(100):
            doc = random_document(rng, entries, doc_id=f"s{i}")
            index = segment_sentences(doc)
            for mention in find_mentions(doc, registry):
                containing = [
                    k for k, (s, e) in enumerate(index.spans) if s <= mention.start < e
                ]
                assert len(containing) == 1
                checked += 1
        assert checked > 50
