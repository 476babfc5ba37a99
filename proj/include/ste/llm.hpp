#ifndef STE_LLM_HPP
#define STE_LLM_HPP

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ste/corpus.hpp"

namespace ste {

// Rendered few-shot prompt: the instruction/rubric/examples part and the
// student response part.
struct PromptSpec {
    std::string system_text;
    std::string user_text;
};

struct ShotExample {
    std::string response_id;
    std::string text;
    ScoreLabel label = ScoreLabel::correct;
    std::optional<std::string> cue_text;
};

struct ShotSet {
    std::array<std::vector<ShotExample>, 3> by_label;  // indexed by label value
    std::vector<std::string> warnings;

    std::size_t total() const {
        return by_label[0].size() + by_label[1].size() + by_label[2].size();
    }
};

// Uniform draw without replacement from the training split, per label,
// deterministic in (seed, criterion). A label with no training instances
// gets an empty list and a warning; label 1 is skipped outright for
// criteria that do not allow partial credit.
ShotSet sample_shots(const std::vector<const Response*>& train_split,
                     const AnalyticCriterion& criterion, int n_per_label,
                     std::uint64_t seed);

// Byte-deterministic rendering of the grading prompt: instruction, output
// format block, question block with the chunk gloss line, the criterion's
// per-label descriptions, and one example block per label that has shots.
PromptSpec build_prompt(const Question& question, const AnalyticCriterion& criterion,
                        const ShotSet& shots, const std::string& response_text);

struct LlmVerdict {
    std::string criterion_id;
    ScoreLabel label = ScoreLabel::incorrect;
    std::optional<std::string> cue_text;
    std::string raw;
};

// Extracts the first "<criterion_id>: <digit>" or "Label: <digit>" line and
// the first "Justification cue: <text>" line; keys are matched
// case-insensitively, whitespace is stripped. Throws ParseError when no
// label line exists or the digit is not 0/1/2.
LlmVerdict parse_verdict(const std::string& raw, const std::string& criterion_id);

// The documented reply format; parse_verdict(render_verdict(v)) == v.
std::string render_verdict(const LlmVerdict& verdict);

struct LlmClientConfig {
    std::string model = "stub";
    double timeout_seconds = 60.0;
    int max_retries = 2;      // transport retries per request
    int max_concurrency = 4;  // simultaneous in-flight requests
    std::string base_url;     // http client only
};

class LlmClient {
public:
    explicit LlmClient(LlmClientConfig config) : config_(std::move(config)) {}
    virtual ~LlmClient() = default;

    // Sends one prompt and returns the raw completion. Throws TransportError
    // on network-level failure; re-sending the same prompt is safe.
    virtual std::string complete(const PromptSpec& prompt) = 0;

    const LlmClientConfig& config() const { return config_; }

private:
    LlmClientConfig config_;
};

// Test double replaying canned completions. Resolution order: scripted
// sequence (FIFO), then exact user-text match, then the default reply.
class ScriptedStubClient final : public LlmClient {
public:
    explicit ScriptedStubClient(LlmClientConfig config = {});

    std::string complete(const PromptSpec& prompt) override;

    void push_reply(std::string reply);                       // sequence mode
    void set_reply_for(std::string user_text, std::string reply);
    void set_default_reply(std::string reply);

    std::size_t request_count() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> sequence_;
    std::map<std::string, std::string> by_user_text_;
    std::optional<std::string> default_reply_;
    std::size_t requests_ = 0;
};

// OpenAI-compatible chat-completions client. The credential is read from the
// STE_LLM_API_KEY environment variable.
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(LlmClientConfig config);

    std::string complete(const PromptSpec& prompt) override;
};

struct LlmItem {
    std::string response_id;
    int fold = 0;
    std::string criterion_id;
    std::optional<ScoreLabel> gold;
    std::optional<ScoreLabel> pred;  // absent when unparsed/failed
    std::optional<std::string> cue_text;
    std::optional<CueSpan> cue_span;
    std::string error;  // non-empty for failed items
};

struct LlmRunResult {
    std::vector<LlmItem> items;
    std::size_t request_count = 0;  // logical requests, retries excluded
    std::vector<std::string> failures;
    std::vector<std::string> warnings;
};

struct LlmGradeOptions {
    int n_per_label = 2;
    std::uint64_t seed = 42;
    std::string transcripts_dir;  // empty: no transcripts persisted
};

// Grades each fold's test split, one independent request per (response,
// criterion), with shots sampled from that fold's training split. A reply
// that fails to parse is re-requested once, then recorded as failed and
// excluded from metrics. Requests may run concurrently up to the client's
// max_concurrency.
LlmRunResult grade_with_llm(LlmClient& client, const Question& question,
                            const std::vector<std::string>& criterion_ids,
                            const std::vector<Response>& responses,
                            const FoldAssignment& folds, const LlmGradeOptions& options);

// First exact occurrence of `needle` in `text`, as code-point offsets.
std::optional<CueSpan> find_cue_span(const std::string& text, const std::string& needle);

}  // namespace ste

#endif  // STE_LLM_HPP
