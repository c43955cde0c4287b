import time

import pytest

from repominer.truncation import TokenSequence, kept_indices, truncate, truncate_tokens


def expected_indices(n, max_len, method):
    if n <= max_len:
        return list(range(n))
    if method == "head":
        return list(range(max_len))
    if method == "tail":
        return list(range(n - max_len, n))
    if method == "middle":
        front = (n - max_len) // 2
        return list(range(front, front + max_len))
    half = max_len // 2
    return list(range(max_len - half)) + list(range(n - half, n))


class TestTruncate:
    def test_middle_1000_drops_244_each_side(self):
        tokens = list(range(1000))
        out = truncate_tokens(tokens, 512, "middle")
        assert out == list(range(244, 756))

    def test_identity_below_limit_for_all_methods(self):
        tokens = list(range(300))
        for method in ("head", "tail", "middle", "split"):
            assert truncate_tokens(tokens, 512, method) == tokens

    def test_split_600(self):
        tokens = list(range(600))
        out = truncate_tokens(tokens, 512, "split")
        assert out == list(range(256)) + list(range(344, 600))

    def test_middle_513_drops_one_from_back(self):
        tokens = list(range(513))
        out = truncate_tokens(tokens, 512, "middle")
        assert out == list(range(0, 512))

    def test_head_and_tail(self):
        tokens = list(range(700))
        assert truncate_tokens(tokens, 512, "head") == list(range(512))
        assert truncate_tokens(tokens, 512, "tail") == list(range(188, 700))

    def test_invalid_method_and_max_len(self):
        with pytest.raises(ValueError):
            truncate_tokens([1, 2, 3], 512, "diagonal")
        with pytest.raises(ValueError):
            truncate_tokens([1, 2, 3], 1, "head")

    def test_token_sequence_wrapper(self):
        seq = TokenSequence.from_text("a b c d")
        out = truncate(seq, max_len=2, method="head")
        assert out.tokens == ("a", "b")
        assert out.tokenizer_id == "whitespace"


class TestTruncationProperties:
    def test_exact_index_sets_for_all_lengths_and_methods(self):
        started = time.monotonic()
        for n in range(1, 2001):
            tokens = list(range(n))
            for method in ("head", "tail", "middle", "split"):
                out = truncate_tokens(tokens, 512, method)
                assert out == expected_indices(n, 512, method)
                assert len(out) <= 512
                assert kept_indices(n, 512, method) == expected_indices(n, 512, method)
        assert time.monotonic() - started < 1.0

    def test_never_lengthens(self):
        for n in (1, 10, 511, 512, 513, 1024):
            for method in ("head", "tail", "middle", "split"):
                assert len(truncate_tokens(list(range(n)), 512, method)) <= max(n, 512)

    def test_middle_balance(self):
        for n in range(513, 1600):
            kept = kept_indices(n, 512, "middle")
            front_dropped = kept[0]
            back_dropped = n - 1 - kept[-1]
            assert abs(front_dropped - back_dropped) <= 1

    def test_split_is_prefix_plus_suffix(self):
        for n in range(513, 1200, 37):
            tokens = [f"t{i}" for i in range(n)]
            out = truncate_tokens(tokens, 512, "split")
            assert out == tokens[:256] + tokens[-256:]

    def test_odd_max_len_split(self):
        tokens = list(range(20))
        out = truncate_tokens(tokens, 7, "split")
        assert out == [0, 1, 2, 3] + [17, 18, 19]
