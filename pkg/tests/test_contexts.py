import random

import pytest
from conftest import make_doc, random_document, random_registry

from repominer.contexts import extract_contexts
from repominer.registry import Mention, compile_registry, find_mentions
from repominer.sentences import SegmentationError, SentenceIndex, segment_sentences


def doc_with_n_sentences(n, mention_sentence, url="zenodo.org/rec", doc_id="doc1"):
    sentences = []
    for i in range(n):
        if i == mention_sentence:
            sentences.append(f"Sentence {i} cites {url} today.")
        else:
            sentences.append(f"Sentence {i} has plain text.")
    return make_doc(" ".join(sentences), doc_id=doc_id)


def mention_for(doc, url="zenodo.org/rec", repo_id="zenodo"):
    start = doc.body_text.index(url)
    return Mention(
        doc_id=doc.doc_id,
        repo_id=repo_id,
        start=start,
        end=start + len(url),
        matched_text=url,
        normalized_url=url,
    )


class TestWindows:
    def test_interior_mention_keeps_five_sentences(self):
        doc = doc_with_n_sentences(10, mention_sentence=5)
        index = segment_sentences(doc)
        [window] = extract_contexts(doc, [mention_for(doc)], index)
        assert (window.window_start, window.window_end) == (3, 7)
        assert window.core_index == 5
        assert window.mention_count == 1

    def test_clamped_at_document_start(self):
        doc = doc_with_n_sentences(2, mention_sentence=0)
        index = segment_sentences(doc)
        [window] = extract_contexts(doc, [mention_for(doc)], index)
        assert (window.window_start, window.window_end) == (0, 1)

    def test_clamped_at_document_end(self):
        doc = doc_with_n_sentences(4, mention_sentence=3)
        index = segment_sentences(doc)
        [window] = extract_contexts(doc, [mention_for(doc)], index)
        assert (window.window_start, window.window_end) == (1, 3)

    def test_same_repo_same_sentence_merges(self):
        doc = make_doc("Intro text sits here. Data at zenodo.org/a and zenodo.org/b today. Outro.")
        index = segment_sentences(doc)
        first = doc.body_text.index("zenodo.org/a")
        second = doc.body_text.index("zenodo.org/b")
        mentions = [
            Mention("doc1", "zenodo", first, first + 12, "zenodo.org/a", "zenodo.org/a"),
            Mention("doc1", "zenodo", second, second + 12, "zenodo.org/b", "zenodo.org/b"),
        ]
        [window] = extract_contexts(doc, mentions, index)
        assert window.mention_count == 2

    def test_different_repos_same_sentence_stay_separate(self):
        doc = make_doc("Intro text sits here. See zenodo.org/a and figshare.com/b now. Outro.")
        index = segment_sentences(doc)
        z = doc.body_text.index("zenodo.org/a")
        f = doc.body_text.index("figshare.com/b")
        mentions = [
            Mention("doc1", "zenodo", z, z + 12, "zenodo.org/a", "zenodo.org/a"),
            Mention("doc1", "figshare", f, f + 14, "figshare.com/b", "figshare.com/b"),
        ]
        windows = extract_contexts(doc, mentions, index)
        assert len(windows) == 2
        assert windows[0].text == windows[1].text
        assert {w.repo_id for w in windows} == {"zenodo", "figshare"}
        assert windows[0].context_id != windows[1].context_id

    def test_text_is_window_sentences_joined_by_single_spaces(self):
        doc = doc_with_n_sentences(10, mention_sentence=5)
        index = segment_sentences(doc)
        [window] = extract_contexts(doc, [mention_for(doc)], index)
        expected = " ".join(doc.body_text[s:e] for s, e in index.spans[3:8])
        assert window.text == expected

    def test_core_sentence_contains_matched_text(self):
        doc = doc_with_n_sentences(7, mention_sentence=2)
        index = segment_sentences(doc)
        mention = mention_for(doc)
        [window] = extract_contexts(doc, [mention], index)
        core_start, core_end = index.spans[window.core_index]
        assert mention.matched_text in doc.body_text[core_start:core_end]

    def test_mention_outside_spans_is_internal_error(self):
        doc = doc_with_n_sentences(3, mention_sentence=1)
        bad_index = SentenceIndex(spans=((0, 5),))
        mention = mention_for(doc)
        with pytest.raises(SegmentationError):
            extract_contexts(doc, [mention], bad_index)

    def test_wrong_document_rejected(self):
        doc = doc_with_n_sentences(3, mention_sentence=1)
        other = doc_with_n_sentences(3, mention_sentence=1, doc_id="other")
        index = segment_sentences(doc)
        with pytest.raises(ValueError):
            extract_contexts(doc, [mention_for(other)], index)


class TestWindowProperties:
    def test_window_bounds_formula_on_random_placements(self):
        rng = random.Random(31337)
        for _ in range(200):
            n = rng.randint(1, 12)
            core = rng.randint(0, n - 1)
            doc = doc_with_n_sentences(n, mention_sentence=core)
            index = segment_sentences(doc)
            assert len(index) == n
            [window] = extract_contexts(doc, [mention_for(doc)], index)
            assert window.window_start == max(0, core - 2)
            assert window.window_end == min(n - 1, core + 2)
            assert 1 <= (window.window_end - window.window_start + 1) <= 5
            if 2 <= core <= n - 3:
                assert window.window_end - window.window_start + 1 == 5

    def test_idempotent_context_ids(self):
        rng = random.Random(8)
        entries = random_registry(rng, size=10)
        registry = compile_registry(entries)
        for i in range(30):
            doc = random_document(rng, entries, doc_id=f"c{i}")
            index = segment_sentences(doc)
            mentions = find_mentions(doc, registry)
            first = [c.context_id for c in extract_contexts(doc, mentions, index)]
            second = [c.context_id for c in extract_contexts(doc, mentions, index)]
            assert first == second

    def test_contexts_per_article_bounds(self):
        rng = random.Random(9)
        entries = random_registry(rng, size=10)
        registry = compile_registry(entries)
        for i in range(50):
            doc = random_document(rng, entries, doc_id=f"p{i}")
            mentions = find_mentions(doc, registry)
            contexts = extract_contexts(doc, mentions, segment_sentences(doc))
            assert len(contexts) <= len(mentions)
            if mentions:
                assert len(contexts) >= 1
            assert sum(c.mention_count for c in contexts) == len(mentions)
