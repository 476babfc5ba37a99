#include "ste/text.hpp"

#include <array>
#include <cctype>
#include <stdexcept>

namespace ste {

namespace {

bool is_space_cp(char32_t c) {
    switch (c) {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\r':
        case U'\f':
        case U'\v':
        case U' ':
        case U'　':
            return true;
        default:
            return false;
    }
}

bool is_detach_punct(char32_t c) {
    if (c < 128) return std::ispunct(static_cast<unsigned char>(c)) != 0;
    switch (c) {
        case U'‘':
        case U'’':
        case U'“':
        case U'”':
        case U'…':
        case U'、':
        case U'。':
            return true;
        default:
            return false;
    }
}

bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

char32_t lower_ascii(char32_t c) {
    return (c >= U'A' && c <= U'Z') ? c + 32 : c;
}

// Length of the contraction suffix ending at position `end` (exclusive) in
// [begin, end), or 0. Checks "n't" first, then one-letter and two-letter
// apostrophe suffixes.
std::size_t contraction_suffix_len(const std::vector<char32_t>& cps,
                                   std::size_t begin, std::size_t end) {
    const std::size_t len = end - begin;
    // n't
    if (len > 3 && lower_ascii(cps[end - 3]) == U'n' &&
        is_apostrophe(cps[end - 2]) && lower_ascii(cps[end - 1]) == U't') {
        return 3;
    }
    // 're 've 'll
    if (len > 3 && is_apostrophe(cps[end - 3])) {
        const char32_t a = lower_ascii(cps[end - 2]);
        const char32_t b = lower_ascii(cps[end - 1]);
        if ((a == U'r' && b == U'e') || (a == U'v' && b == U'e') ||
            (a == U'l' && b == U'l')) {
            return 3;
        }
    }
    // 's 'd 'm
    if (len > 2 && is_apostrophe(cps[end - 2])) {
        const char32_t a = lower_ascii(cps[end - 1]);
        if (a == U's' || a == U'd' || a == U'm') return 2;
    }
    return 0;
}

}  // namespace

Utf8View::Utf8View(std::string text) : text_(std::move(text)) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(text_.data());
    const std::size_t n = text_.size();
    std::size_t i = 0;
    while (i < n) {
        byte_offset_.push_back(i);
        const unsigned char b0 = bytes[i];
        char32_t cp = 0;
        std::size_t len = 1;
        if (b0 < 0x80) {
            cp = b0;
        } else if ((b0 & 0xe0) == 0xc0) {
            len = 2;
            cp = b0 & 0x1f;
        } else if ((b0 & 0xf0) == 0xe0) {
            len = 3;
            cp = b0 & 0x0f;
        } else if ((b0 & 0xf8) == 0xf0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            throw std::runtime_error("invalid UTF-8 lead byte");
        }
        if (i + len > n) throw std::runtime_error("truncated UTF-8 sequence");
        for (std::size_t k = 1; k < len; ++k) {
            const unsigned char bk = bytes[i + k];
            if ((bk & 0xc0) != 0x80)
                throw std::runtime_error("invalid UTF-8 continuation byte");
            cp = (cp << 6) | (bk & 0x3f);
        }
        codepoints_.push_back(cp);
        i += len;
    }
    byte_offset_.push_back(n);
}

std::string Utf8View::substr(std::size_t start, std::size_t end) const {
    if (start > end || end > codepoints_.size())
        throw std::out_of_range("Utf8View::substr range");
    return text_.substr(byte_offset_[start], byte_offset_[end] - byte_offset_[start]);
}

TokenizedText tokenize(const std::string& text) {
    Utf8View view(text);
    TokenizedText out;
    out.text = text;

    std::vector<char32_t> cps(view.size());
    for (std::size_t i = 0; i < view.size(); ++i) cps[i] = view.at(i);

    auto emit = [&](std::size_t s, std::size_t e) {
        out.tokens.push_back(Token{view.substr(s, e), static_cast<int>(s),
                                   static_cast<int>(e)});
    };

    std::size_t i = 0;
    const std::size_t n = cps.size();
    while (i < n) {
        if (is_space_cp(cps[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !is_space_cp(cps[j])) ++j;

        std::size_t begin = i;
        std::size_t end = j;
        while (begin < end && is_detach_punct(cps[begin])) {
            emit(begin, begin + 1);
            ++begin;
        }
        std::size_t trailing = 0;
        while (begin < end - trailing && is_detach_punct(cps[end - trailing - 1]))
            ++trailing;
        const std::size_t core_end = end - trailing;

        if (begin < core_end) {
            // Peel contraction suffixes right-to-left, then emit in order.
            std::vector<std::size_t> cuts;
            std::size_t e = core_end;
            for (;;) {
                const std::size_t len = contraction_suffix_len(cps, begin, e);
                if (len == 0) break;
                e -= len;
                cuts.push_back(e);
            }
            std::size_t s = begin;
            for (auto it = cuts.rbegin(); it != cuts.rend(); ++it) {
                emit(s, *it);
                s = *it;
            }
            emit(s, core_end);
        }
        for (std::size_t k = core_end; k < end; ++k) emit(k, k + 1);
        i = j;
    }
    return out;
}

std::vector<std::size_t> tokens_overlapping(const TokenizedText& tokenized,
                                            const CueSpan& span, bool* partial) {
    std::vector<std::size_t> idx;
    bool cut = false;
    for (std::size_t t = 0; t < tokenized.tokens.size(); ++t) {
        const Token& tok = tokenized.tokens[t];
        if (tok.start_char < span.end_char && span.start_char < tok.end_char) {
            idx.push_back(t);
            if (tok.start_char < span.start_char || tok.end_char > span.end_char)
                cut = true;
        }
    }
    if (partial) *partial = cut;
    return idx;
}

std::optional<std::vector<double>> gold_attention_target(
    const TokenizedText& tokenized, const std::optional<CueSpan>& cue,
    std::vector<std::string>* warnings) {
    if (!cue) return std::nullopt;
    bool partial = false;
    const auto idx = tokens_overlapping(tokenized, *cue, &partial);
    if (idx.empty()) {
        if (warnings)
            warnings->push_back("cue span [" + std::to_string(cue->start_char) +
                                ", " + std::to_string(cue->end_char) +
                                ") covers no token; attention target skipped");
        return std::nullopt;
    }
    if (partial && warnings)
        warnings->push_back("cue span [" + std::to_string(cue->start_char) +
                            ", " + std::to_string(cue->end_char) +
                            ") is not token-aligned; partially overlapped "
                            "tokens included");
    std::vector<double> target(tokenized.tokens.size(), 0.0);
    const double w = 1.0 / static_cast<double>(idx.size());
    for (const std::size_t t : idx) target[t] = w;
    return target;
}

CueSpan span_for_tokens(const TokenizedText& tokenized, std::size_t first,
                        std::size_t last) {
    if (first > last || last >= tokenized.tokens.size())
        throw std::out_of_range("span_for_tokens range");
    return CueSpan{tokenized.tokens[first].start_char,
                   tokenized.tokens[last].end_char};
}

}  // namespace ste
