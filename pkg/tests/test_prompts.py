import pytest
from hypothesis import given
from hypothesis import strategies as st

from pseudoref import prompts
from pseudoref.prompts import (
    EmptyArgument,
    EmptySource,
    MissingPlaceholderValue,
    PromptTemplate,
    UnknownPlaceholder,
    build_direct_scoring_prompt,
    build_generation_prompt,
    render_template,
)


class TestGenerationPrompt:
    def test_src_substituted_verbatim(self):
        rendered = build_generation_prompt("Guten Morgen.")
        assert rendered.text.endswith("Sentence: Guten Morgen.\nTranslation:")
        assert "{src}" not in rendered.text

    def test_empty_source(self):
        with pytest.raises(EmptySource):
            build_generation_prompt("   ")

    def test_placeholder_literal_in_src_survives(self):
        rendered = build_generation_prompt("literal {src} stays")
        assert "Sentence: literal {src} stays" in rendered.text

    def test_single_sentence_line_and_trailing_marker(self):
        rendered = build_generation_prompt("Hello world")
        assert rendered.text.count("Sentence:") == 1
        assert rendered.text.endswith("Translation:")

    def test_template_mentions_embedding_model(self):
        assert "'all-mpnet-base-v2'" in prompts.generation_template().body


class TestDirectScoringPrompt:
    def test_substitution(self):
        rendered = build_direct_scoring_prompt("Nepali", "English", "Hello.")
        assert 'English translation: "Hello."' in rendered.text
        assert rendered.text.endswith("Score (0-100):")
        assert "from Nepali to English" in rendered.text

    def test_empty_argument(self):
        with pytest.raises(EmptyArgument):
            build_direct_scoring_prompt("", "English", "x")

    def test_embedded_quote_not_escaped(self):
        rendered = build_direct_scoring_prompt("German", "English", 'He said "hi".')
        assert '"He said "hi"."' in rendered.text


class TestRenderTemplate:
    def test_basic(self):
        tpl = PromptTemplate("t", "A {src} B")
        assert render_template(tpl, {"src": "x"}).text == "A x B"

    def test_missing_value(self):
        tpl = PromptTemplate("t", "A {src} B")
        with pytest.raises(MissingPlaceholderValue, match="src"):
            render_template(tpl, {})

    def test_unknown_supplied_key(self):
        tpl = PromptTemplate("t", "A {src} B")
        with pytest.raises(UnknownPlaceholder, match="tgt_lang"):
            render_template(tpl, {"src": "x", "tgt_lang": "y"})

    def test_single_pass_no_reexpansion(self):
        tpl = PromptTemplate("t", "{src} and {translation}")
        rendered = render_template(tpl, {"src": "{translation}", "translation": "done"})
        assert rendered.text == "{translation} and done"

    @given(src=st.text(min_size=1).filter(lambda s: s.strip()))
    def test_length_additive(self, src):
        tpl = prompts.generation_template()
        rendered = render_template(tpl, {"src": src})
        assert len(rendered.text) == len(tpl.body) - len("{src}") + len(src)

    def test_deterministic(self):
        tpl = prompts.direct_scoring_template()
        values = {"src_lang": "Czech", "tgt_lang": "English", "translation": "ok"}
        assert render_template(tpl, values).text == render_template(tpl, values).text


def test_load_template_normalizes_newlines(tmp_path):
    path = tmp_path / "tpl.txt"
    path.write_bytes(b"A {src} B\r\nC\r")
    tpl = prompts.load_template(path, "custom")
    assert tpl.body == "A {src} B\nC\n"
