import random

from oracles import oracle_normalize_url, oracle_tokens

from repominer.urls import iter_url_tokens, normalize_url, trim_token


class TestNormalizeUrl:
    def test_strips_scheme_and_trailing_slash(self):
        assert (
            normalize_url("https://meertens.knaw.nl/en/collections/")
            == "meertens.knaw.nl/en/collections"
        )

    def test_already_normalized_is_identity(self):
        assert normalize_url("zenodo.org/record/5210928") == "zenodo.org/record/5210928"

    def test_lowercases_and_strips_www(self):
        assert normalize_url("HTTP://WWW.Example.ORG/Path?Q=1") == "example.org/path?q=1"

    def test_whitespace_only_is_empty(self):
        assert normalize_url("   ") == ""
        assert normalize_url("") == ""

    def test_ftp_scheme(self):
        assert normalize_url("ftp://data.example.org/file") == "data.example.org/file"

    def test_preserves_query_and_fragment(self):
        assert normalize_url("https://x.org/a?b=1#c") == "x.org/a?b=1#c"

    def test_idempotent_on_degenerate_inputs(self):
        for url in (
            "www.www.example.org",
            "http://https://x.org",
            "x.org//",
            "HTTPS://WWW.WWW.X.ORG///",
            "www.",
            "http://",
        ):
            once = normalize_url(url)
            assert normalize_url(once) == once


class TestNormalizeAgainstOracle:
    def test_randomized_suite_matches_character_level_oracle(self):
        rng = random.Random(20240301)
        schemes = ["", "http://", "https://", "ftp://", "HTTP://", "hTTps://"]
        hosts = ["example.org", "www.example.org", "WWW.EXAMPLE.ORG", "sub.www.x.net",
                 "www.www.deep.org", "x.org"]
        paths = ["", "/", "//", "/a/b", "/A/B/", "/p?q=1", "/p#frag", "/p?Q=1#F", "///"]
        pads = ["", " ", "\t", "  "]
        cases = []
        for _ in range(200):
            url = (
                rng.choice(pads)
                + rng.choice(schemes)
                + rng.choice(hosts)
                + rng.choice(paths)
                + rng.choice(pads)
            )
            if rng.random() < 0.3:
                url = url.upper()
            cases.append(url)
        mismatches = [
            (u, normalize_url(u), oracle_normalize_url(u))
            for u in cases
            if normalize_url(u) != oracle_normalize_url(u)
        ]
        assert mismatches == []

    def test_idempotence_on_randomized_suite(self):
        rng = random.Random(7)
        alphabet = "abwW./:htps?#="
        for _ in range(500):
            url = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            once = normalize_url(url)
            assert normalize_url(once) == once


class TestTokenExtraction:
    def test_plain_url_token(self):
        # every maximal URL-character run is a token; prose words included
        tokens = list(iter_url_tokens("see https://zenodo.org/record/1 here"))
        assert ("https://zenodo.org/record/1", 4, 31) in tokens
        assert [t[0] for t in tokens] == ["see", "https://zenodo.org/record/1", "here"]

    def test_trailing_punctuation_trimmed(self):
        text = "at https://x.org/a."
        [(token, start, end)] = list(iter_url_tokens(text, require_dot=True))
        assert token == "https://x.org/a"
        assert text[start:end] == token

    def test_wrapping_parens_trimmed(self):
        text = "data (http://www.ebi.ac.uk/arrayexpress), with accession"
        [(token, start, end)] = [
            t for t in iter_url_tokens(text) if "ebi" in t[0]
        ]
        assert token == "http://www.ebi.ac.uk/arrayexpress"
        assert text[start:end] == token

    def test_require_dot_skips_plain_words(self):
        assert list(iter_url_tokens("plain words only", require_dot=True)) == []

    def test_matches_oracle_token_scan(self):
        rng = random.Random(99)
        alphabet = "ab .(),;'\"[]/:x.org!?#"
        for _ in range(300):
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            assert list(iter_url_tokens(text)) == oracle_tokens(text)

    def test_trim_token_offsets(self):
        token, start, end = trim_token("(x.org).", 10)
        assert (token, start, end) == ("x.org", 11, 16)
