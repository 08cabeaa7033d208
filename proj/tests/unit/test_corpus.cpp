#include <doctest.h>

#include <fstream>
#include <set>

#include <json.hpp>

#include "daamsep/corpus.hpp"
#include "test_util.hpp"

using namespace daamsep;

namespace {

// Whitespace tokenizer with BOS/EOS, enough to check span bookkeeping.
std::vector<Token> whitespace_tokens(const std::string& prompt) {
    std::vector<Token> out{{"<bos>", true, std::nullopt}};
    std::size_t i = 0;
    while (i < prompt.size()) {
        if (prompt[i] == ' ') {
            ++i;
            continue;
        }
        const std::size_t b = i;
        while (i < prompt.size() && prompt[i] != ' ') {
            ++i;
        }
        out.push_back({prompt.substr(b, i - b), false, std::pair<std::size_t, std::size_t>{b, i}});
    }
    out.push_back({"<eos>", true, std::nullopt});
    return out;
}

// Recorded CLIP BPE tokens for a few prompts (see tests/data/make_clip_fixture.py).
std::vector<Token> clip_tokens(const std::string& prompt) {
    std::ifstream in(std::string(DAAMSEP_TEST_DATA_DIR) + "/clip_tokens.json");
    REQUIRE(in.good());
    const auto fixture = nlohmann::json::parse(in);
    for (const auto& entry : fixture) {
        if (entry.at("prompt") != prompt) {
            continue;
        }
        std::vector<Token> out;
        for (const auto& t : entry.at("tokens")) {
            Token tok{t.at("text"), t.at("special"), std::nullopt};
            if (t.contains("offset")) {
                tok.offset = std::pair<std::size_t, std::size_t>{t.at("offset")[0], t.at("offset")[1]};
            }
            out.push_back(tok);
        }
        return out;
    }
    FAIL("prompt missing from fixture: " << prompt);
    return {};
}

std::string slice(const std::string& s, CharSpan c) { return s.substr(c.first, c.second - c.first); }

} // namespace

TEST_CASE("template rendering") {
    const auto p = render_prompt(1, "giraffe", "Analytical Cubism");
    CHECK(p.prompt_text == "a painting of a giraffe in the Analytical Cubism style");
    CHECK(p.content_char_span == CharSpan{16, 23});
    CHECK(slice(p.prompt_text, p.style_char_span) == "Analytical Cubism");

    CHECK(render_prompt(2, "cow", "Rembrandt").prompt_text == "a Rembrandt painting of a cow");
    CHECK(render_prompt(3, "cow", "Rembrandt").prompt_text == "a cow in the Rembrandt style");
    CHECK(render_prompt(4, "cow", "Rembrandt").prompt_text == "a cow with Rembrandt style");
    CHECK(template_text(4) == "a <CONTENT> with <STYLE> style");
}

TEST_CASE("rendering rejects bad input") {
    CHECK_THROWS_AS(render_prompt(1, "cow\n", "Rembrandt"), std::invalid_argument);
    CHECK_THROWS_AS(render_prompt(1, "cow", "<STYLE>"), std::invalid_argument);
    CHECK_THROWS_AS(render_prompt(1, "", "Rembrandt"), std::invalid_argument);
    CHECK_THROWS_AS(render_prompt(5, "cow", "Rembrandt"), std::invalid_argument);
}

TEST_CASE("article fixing is opt-in") {
    CHECK(render_prompt(4, "apple", "Rembrandt").prompt_text == "a apple with Rembrandt style");
    RenderOptions fix;
    fix.fix_articles = true;
    const auto p = render_prompt(4, "apple", "Rembrandt", StyleKind::Artist, fix);
    CHECK(p.prompt_text == "an apple with Rembrandt style");
    CHECK(slice(p.prompt_text, p.content_char_span) == "apple");
    CHECK(render_prompt(2, "orange", "Impressionism", StyleKind::Movement, fix).prompt_text ==
          "an Impressionism painting of an orange");
}

TEST_CASE("bundled lists") {
    const auto contents = bundled_contents();
    const auto styles = bundled_styles();
    CHECK(contents.size() == 80);
    CHECK(styles.size() == 50);
    std::size_t artists = 0;
    for (const auto& s : styles) {
        artists += s.kind == StyleKind::Artist;
    }
    CHECK(artists == 23);
    CHECK(std::set<std::string>(contents.begin(), contents.end()).size() == 80);
    CHECK(std::find(contents.begin(), contents.end(), "giraffe") != contents.end());
}

TEST_CASE("full corpus size and ordering") {
    const auto corpus = generate_corpus(bundled_contents(), bundled_styles(), {1, 2, 3, 4});
    CHECK(corpus.size() == 16000);
    std::size_t per_template[5] = {};
    std::set<std::string> prompts;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(corpus[i].id == i);
        ++per_template[corpus[i].template_id];
        prompts.insert(corpus[i].prompt_text);
    }
    for (int t = 1; t <= 4; ++t) {
        CHECK(per_template[t] == 4000);
    }
    CHECK(prompts.size() == 16000);
    CHECK(corpus[0].template_id == 1);
    CHECK(corpus[1].style_label == bundled_styles()[1].label);
    CHECK(corpus[50].content_label == bundled_contents()[1]);
}

TEST_CASE("small corpora") {
    CHECK(generate_corpus({"cow"}, {{"Rembrandt", StyleKind::Artist}}, {1, 2, 3, 4}).size() == 4);
    CHECK(generate_corpus({"cow", "dog"}, {{"A", StyleKind::Artist}, {"B", StyleKind::Artist}, {"C", StyleKind::Movement}},
                          {3})
              .size() == 6);
    try {
        generate_corpus({"cow", "dog", "cow"}, {{"A", StyleKind::Artist}}, {1});
        FAIL("expected duplicate error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("cow") != std::string::npos);
    }
}

TEST_CASE("list parsing") {
    CHECK(parse_content_list("# header\ncow\n\ndog\n") == std::vector<std::string>{"cow", "dog"});
    const auto styles = parse_style_list("# x\nRembrandt\tartist\nCubism\tmovement\n");
    REQUIRE(styles.size() == 2);
    CHECK(styles[0].kind == StyleKind::Artist);
    CHECK_THROWS(parse_style_list("Rembrandt\n"));
}

TEST_CASE("corpus index round trip") {
    testutil::TempDir tmp("corpus");
    const auto corpus = generate_corpus({"cow", "hot dog"}, bundled_styles(), {1, 4});
    write_corpus_index(corpus, tmp / "corpus.jsonl");
    const auto back = read_corpus_index(tmp / "corpus.jsonl");
    REQUIRE(back.size() == corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        CHECK(back[i].prompt_text == corpus[i].prompt_text);
        CHECK(back[i].content_char_span == corpus[i].content_char_span);
        CHECK(back[i].style_kind == corpus[i].style_kind);
    }
}

TEST_CASE("single-token content span") {
    const auto p = render_prompt(4, "cow", "Rembrandt", StyleKind::Artist);
    const auto a = annotate_token_spans(p, whitespace_tokens(p.prompt_text));
    CHECK(a.content_span == TokenSpan{2, 2});
    CHECK(a.style_span == TokenSpan{4, 4});
}

TEST_CASE("CLIP BPE splits a style label into three tokens") {
    const auto p = render_prompt(1, "giraffe", "Analytical Cubism");
    const auto a = annotate_token_spans(p, clip_tokens(p.prompt_text));
    CHECK(a.content_span == TokenSpan{5, 5});
    CHECK(a.style_span == TokenSpan{8, 10});
    CHECK(a.style_span.length() == 3);

    const auto q = render_prompt(2, "hot dog", "Ukiyo e");
    const auto b = annotate_token_spans(q, clip_tokens(q.prompt_text));
    CHECK(b.style_span == TokenSpan{2, 4});
    CHECK(b.content_span == TokenSpan{8, 9});
}

TEST_CASE("a token straddling the span boundary is reported") {
    const std::string prompt = "a cowboy";
    std::vector<Token> tokens{{"a", false, std::pair<std::size_t, std::size_t>{0, 1}},
                              {"cowboy", false, std::pair<std::size_t, std::size_t>{2, 8}}};
    CHECK_THROWS_AS(token_span_for(tokens, {2, 5}, prompt), TokenizationMismatch);
    CHECK_THROWS_AS(token_span_for(tokens, {9, 12}, prompt + " dogs"), TokenizationMismatch);
}

TEST_CASE("spans slice back to the labels across the whole corpus") {
    for (const auto& p : generate_corpus(bundled_contents(), bundled_styles(), {1, 2, 3, 4})) {
        const auto tokens = whitespace_tokens(p.prompt_text);
        const auto a = annotate_token_spans(p, tokens);
        CHECK_FALSE(a.content_span.overlaps(a.style_span));
        auto join = [&](TokenSpan s) {
            std::string out;
            for (std::size_t i = s.first; i <= s.last; ++i) {
                out += (out.empty() ? "" : " ") + tokens[i].text;
            }
            return out;
        };
        if (join(a.content_span) != p.content_label || join(a.style_span) != p.style_label) {
            FAIL("span mismatch for: " << p.prompt_text);
        }
    }
}

TEST_CASE("manifest fragment carries labels and spans") {
    const auto p = render_prompt(3, "hot dog", "Ukiyo e", StyleKind::Movement);
    const auto a = annotate_token_spans(p, whitespace_tokens(p.prompt_text));
    const auto m = manifest_fragment(p, a);
    CHECK(m.prompt == p.prompt_text);
    CHECK(m.template_id == 3);
    CHECK(m.content_span == TokenSpan{2, 3});
    CHECK(m.style_span == TokenSpan{6, 7});
    CHECK(m.style_kind == StyleKind::Movement);
    CHECK(m.tokens.size() == a.tokens.size());
}
