#ifndef STE_TEXT_HPP
#define STE_TEXT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ste {

// All span offsets in this codebase are Unicode code-point offsets, matching
// the dataset file schema. Utf8View decodes a UTF-8 string once and maps
// code-point indices back to byte ranges.
class Utf8View {
public:
    explicit Utf8View(std::string text);

    std::size_t size() const { return codepoints_.size(); }
    char32_t at(std::size_t cp_index) const { return codepoints_[cp_index]; }
    const std::string& str() const { return text_; }

    // Substring by code-point range [start, end).
    std::string substr(std::size_t start, std::size_t end) const;

private:
    std::string text_;
    std::vector<char32_t> codepoints_;
    std::vector<std::size_t> byte_offset_;  // size() + 1 entries
};

// Contiguous justification-cue span, in code points, end exclusive.
struct CueSpan {
    int start_char = 0;
    int end_char = 0;

    bool operator==(const CueSpan&) const = default;
};

struct Token {
    std::string surface;
    int start_char = 0;  // code points into the original text
    int end_char = 0;
};

struct TokenizedText {
    std::string text;
    std::vector<Token> tokens;

    std::size_t size() const { return tokens.size(); }
};

// Rule-based tokenizer, locked so cue alignment is reproducible:
//   1. Split on Unicode whitespace (ASCII whitespace plus U+3000).
//   2. Detach leading and trailing punctuation, one code point per token.
//      Detachable punctuation: ASCII punctuation, curly quotes (U+2018,
//      U+2019, U+201C, U+201D), ellipsis (U+2026), and the CJK marks
//      U+3001/U+3002.
//   3. Repeatedly split English contraction suffixes off the remaining core:
//      "n't" first, then 's, 're, 've, 'll, 'd, 'm (ASCII or curly
//      apostrophe, case-insensitive). A core that is only the suffix itself
//      (e.g. "n't") stays whole.
// Offsets always point into the original text.
TokenizedText tokenize(const std::string& text);

// Indices of tokens overlapping [span.start_char, span.end_char).
// `partial` is set when some overlapped token is not fully covered by the
// span, i.e. the span cuts through a token boundary.
std::vector<std::size_t> tokens_overlapping(const TokenizedText& tokenized,
                                            const CueSpan& span,
                                            bool* partial = nullptr);

// Per-token gold attention target: 1/k on each of the k cue tokens, 0
// elsewhere. Absent when no cue is given or the cue covers no token (the
// latter also records a warning).
std::optional<std::vector<double>> gold_attention_target(
    const TokenizedText& tokenized, const std::optional<CueSpan>& cue,
    std::vector<std::string>* warnings = nullptr);

// Character span covering a contiguous token index range [first, last].
CueSpan span_for_tokens(const TokenizedText& tokenized, std::size_t first,
                        std::size_t last);

}  // namespace ste

#endif  // STE_TEXT_HPP
