#ifndef STE_ORACLE_HPP
#define STE_ORACLE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ste/corpus.hpp"

namespace ste {

struct RuleVerdict {
    ScoreLabel label = ScoreLabel::incorrect;
    std::optional<CueSpan> cue;
};

// Evaluates one machine rule against a tokenized response. The question
// provides chunk-reference resolution: a referenced chunk is realized by the
// correct (or partial) alternatives of that chunk's expression criterion,
// and a chunk with no realization in the response yields label 0 without a
// cue.
RuleVerdict apply_rule(const RubricRule& rule, const Question& question,
                       const TokenizedText& tokenized);

struct OracleGrading {
    std::map<std::string, Annotation> annotations;  // annotator_id "oracle"
    std::vector<std::string> skipped;  // criteria without machine_rule
};

OracleGrading grade_response_oracle(const Question& question, const std::string& response_text);

// Per-criterion injection probabilities for the synthesizer.
struct CriterionErrorRate {
    double incorrect = 0.0;
    double partial = 0.0;
};

struct ErrorProfile {
    std::map<std::string, CriterionErrorRate> rates;
    std::optional<std::uint64_t> seed;  // default when the caller passes none
};

ErrorProfile load_error_profile(const std::string& path);
std::string serialize_error_profile(const ErrorProfile& profile);

// Generates n responses by composing per-chunk realizations in the order the
// reference answer realizes them, injecting per-criterion errors with the
// profile's probabilities, then grading each result with the oracle so the
// stored labels and cues are consistent with the text by construction.
// Injections are verified to actually flip their criterion; surfaces that
// cannot are reported by throwing.
std::vector<Response> synthesize_responses(const Question& question,
                                           const ErrorProfile& profile,
                                           std::size_t n, std::uint64_t seed);

}  // namespace ste

#endif  // STE_ORACLE_HPP
