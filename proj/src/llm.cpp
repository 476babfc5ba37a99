#include "ste/llm.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "ste/errors.hpp"
#include "ste/rng.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace ste {

namespace fs = std::filesystem;

// --- shot sampling -----------------------------------------------------------

ShotSet sample_shots(const std::vector<const Response*>& train_split,
                     const AnalyticCriterion& criterion, int n_per_label,
                     std::uint64_t seed) {
    const std::string& criterion_id = criterion.id;
    ShotSet shots;
    for (const int label : {2, 1, 0}) {
        if (label == 1 && !criterion.allows_partial) continue;
        std::vector<const Response*> candidates;
        for (const auto* r : train_split) {
            auto it = r->annotations.find(criterion_id);
            if (it != r->annotations.end() && label_value(it->second.score) == label)
                candidates.push_back(r);
        }
        if (candidates.empty()) {
            shots.warnings.push_back("criterion " + criterion_id + ": no training instance with label " +
                                     std::to_string(label));
            continue;
        }
        Rng rng(mix_seed(mix_seed(seed, criterion_id), static_cast<std::uint64_t>(label)));
        const auto picks =
            rng.sample_indices(candidates.size(), static_cast<std::size_t>(n_per_label));
        if (picks.size() < static_cast<std::size_t>(n_per_label))
            shots.warnings.push_back("criterion " + criterion_id + ": only " +
                                     std::to_string(picks.size()) + " of " +
                                     std::to_string(n_per_label) +
                                     " requested shots available for label " +
                                     std::to_string(label));
        for (const std::size_t p : picks) {
            const Response* r = candidates[p];
            ShotExample shot;
            shot.response_id = r->id;
            shot.text = r->text;
            shot.label = label_from_int(label);
            const auto& ann = r->annotations.at(criterion_id);
            if (ann.cue) {
                Utf8View view(r->text);
                shot.cue_text = view.substr(static_cast<std::size_t>(ann.cue->start_char),
                                            static_cast<std::size_t>(ann.cue->end_char));
            }
            shots.by_label[label].push_back(std::move(shot));
        }
    }
    return shots;
}

// --- prompt rendering ----------------------------------------------------------

namespace {

const char* category_long_name(Category c) {
    switch (c) {
        case Category::E: return "Expression";
        case Category::O: return "Word order";
        case Category::G: return "Grammar";
    }
    return "?";
}

}  // namespace

PromptSpec build_prompt(const Question& question, const AnalyticCriterion& criterion,
                        const ShotSet& shots, const std::string& response_text) {
    std::ostringstream os;
    os << "Your task is to classify the labels corresponding to the analytic criterion "
          "from the input response.\n"
          "Please refer to the Classification Rubric and Classification Examples when "
          "performing the task.\n\n";

    os << "_Your Outputs_\n"
       << criterion.id << ": _Your Outputs_\n"
       << "Justification Cue: _Your Outputs_\n\n";

    os << "_Question_\n\"" << question.l1_text << "\"\n<";
    for (std::size_t i = 0; i < question.chunks.size(); ++i) {
        if (i) os << " / ";
        os << question.chunks[i].gloss;
    }
    os << ">\n\n";

    os << "_Analytic criterion_\n";
    const Chunk& chunk = question.chunks.at(static_cast<std::size_t>(criterion.chunk_index));
    os << criterion.id << ": " << category_long_name(criterion.category)
       << " corresponding to \"" << chunk.l1_text << "\" (" << chunk.gloss << ")\n\n";
    for (const int label : {2, 1, 0}) {
        auto it = criterion.label_descriptions.find(label);
        if (it == criterion.label_descriptions.end()) continue;
        os << criterion.id << ": " << label << " - " << it->second << "\n";
    }

    os << "\n_Classification Examples_";
    for (const int label : {2, 1, 0}) {
        for (const auto& shot : shots.by_label[label]) {
            os << "\n\nAns: " << shot.text << "\n"
               << criterion.id << ": " << label_value(shot.label);
            if (shot.cue_text) os << "\nJustification cue: " << *shot.cue_text;
        }
    }
    os << "\n";

    PromptSpec prompt;
    prompt.system_text = os.str();
    prompt.user_text = response_text;
    return prompt;
}

// --- verdict parsing -------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

LlmVerdict parse_verdict(const std::string& raw, const std::string& criterion_id) {
    LlmVerdict verdict;
    verdict.criterion_id = criterion_id;
    verdict.raw = raw;

    const std::string want_id = lower(criterion_id);
    std::optional<int> label;
    std::optional<std::string> cue;

    std::istringstream lines(raw);
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto colon = line.find(':');
        if (colon == std::string::npos) continue;
        const std::string key = lower(trim(line.substr(0, colon)));
        const std::string value = trim(line.substr(colon + 1));
        if (!label && (key == want_id || key == "label")) {
            if (value.size() != 1 || value[0] < '0' || value[0] > '2')
                throw ParseError("label line \"" + trim(line) + "\" does not carry a digit in {0,1,2}",
                                 raw);
            label = value[0] - '0';
        } else if (!cue && key == "justification cue") {
            if (!value.empty()) cue = value;
        }
    }
    if (!label)
        throw ParseError("no \"" + criterion_id + ": <digit>\" or \"Label: <digit>\" line found", raw);
    verdict.label = label_from_int(*label);
    verdict.cue_text = cue;
    return verdict;
}

std::string render_verdict(const LlmVerdict& verdict) {
    std::string out = verdict.criterion_id + ": " + std::to_string(label_value(verdict.label)) + "\n";
    if (verdict.cue_text) out += "Justification cue: " + *verdict.cue_text + "\n";
    return out;
}

// --- clients ----------------------------------------------------------------------

ScriptedStubClient::ScriptedStubClient(LlmClientConfig config) : LlmClient(std::move(config)) {}

std::string ScriptedStubClient::complete(const PromptSpec& prompt) {
    std::lock_guard<std::mutex> lock(mutex_);
    ++requests_;
    if (!sequence_.empty()) {
        std::string reply = std::move(sequence_.front());
        sequence_.pop_front();
        return reply;
    }
    auto it = by_user_text_.find(prompt.user_text);
    if (it != by_user_text_.end()) return it->second;
    if (default_reply_) return *default_reply_;
    throw TransportError("stub has no scripted reply for this prompt");
}

void ScriptedStubClient::push_reply(std::string reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    sequence_.push_back(std::move(reply));
}

void ScriptedStubClient::set_reply_for(std::string user_text, std::string reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    by_user_text_[std::move(user_text)] = std::move(reply);
}

void ScriptedStubClient::set_default_reply(std::string reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    default_reply_ = std::move(reply);
}

std::size_t ScriptedStubClient::request_count() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
}

HttpLlmClient::HttpLlmClient(LlmClientConfig config) : LlmClient(std::move(config)) {}

std::string HttpLlmClient::complete(const PromptSpec& prompt) {
    const char* key = std::getenv("STE_LLM_API_KEY");
    if (!key || !*key)
        throw TransportError("STE_LLM_API_KEY is not set; cannot call a live endpoint");

    std::string base = config().base_url.empty() ? "https://api.openai.com" : config().base_url;
    httplib::Client client(base);
    client.set_connection_timeout(static_cast<time_t>(config().timeout_seconds));
    client.set_read_timeout(static_cast<time_t>(config().timeout_seconds));
    client.set_bearer_token_auth(key);

    nlohmann::json body = {
        {"model", config().model},
        {"temperature", 0},
        {"messages",
         {{{"role", "system"}, {"content", prompt.system_text}},
          {{"role", "user"}, {"content", prompt.user_text}}}},
    };
    auto res = client.Post("/v1/chat/completions", body.dump(), "application/json");
    if (!res)
        throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("endpoint returned status " + std::to_string(res->status) + ": " +
                             res->body);
    try {
        const auto doc = nlohmann::json::parse(res->body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed completion payload: ") + e.what());
    }
}

// --- grading harness -----------------------------------------------------------------

std::optional<CueSpan> find_cue_span(const std::string& text, const std::string& needle) {
    if (needle.empty()) return std::nullopt;
    const auto byte_pos = text.find(needle);
    if (byte_pos == std::string::npos) return std::nullopt;
    // UTF-8 is self-synchronizing, so a byte match is code-point aligned;
    // count code points up to the match boundaries.
    auto count_cps = [&](std::size_t byte_end) {
        int cps = 0;
        for (std::size_t i = 0; i < byte_end; ++i)
            if ((static_cast<unsigned char>(text[i]) & 0xc0) != 0x80) ++cps;
        return cps;
    };
    CueSpan span;
    span.start_char = count_cps(byte_pos);
    span.end_char = count_cps(byte_pos + needle.size());
    return span;
}

namespace {

std::string call_with_transport_retries(LlmClient& client, const PromptSpec& prompt) {
    const int attempts = 1 + std::max(0, client.config().max_retries);
    for (int attempt = 1;; ++attempt) {
        try {
            return client.complete(prompt);
        } catch (const TransportError&) {
            if (attempt >= attempts) throw;
        }
    }
}

struct GradeTask {
    std::size_t index = 0;
    int fold = 0;
    const Response* response = nullptr;
    const AnalyticCriterion* criterion = nullptr;
    PromptSpec prompt;
};

void write_transcript(const std::string& dir, const GradeTask& task,
                      const std::vector<std::string>& raw_replies, const LlmItem& item,
                      double elapsed_ms) {
    if (dir.empty()) return;
    nlohmann::ordered_json doc;
    doc["fold"] = task.fold;
    doc["response_id"] = task.response->id;
    doc["criterion_id"] = task.criterion->id;
    doc["prompt"] = {{"system", task.prompt.system_text}, {"user", task.prompt.user_text}};
    doc["replies"] = raw_replies;
    if (item.pred)
        doc["verdict"] = {{"label", label_value(*item.pred)},
                          {"cue", item.cue_text ? nlohmann::json(*item.cue_text) : nlohmann::json()}};
    else
        doc["error"] = item.error;
    doc["elapsed_ms"] = elapsed_ms;
    const fs::path path = fs::path(dir) / ("fold" + std::to_string(task.fold) + "__" +
                                           task.response->id + "__" + task.criterion->id + ".json");
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

}  // namespace

LlmRunResult grade_with_llm(LlmClient& client, const Question& question,
                            const std::vector<std::string>& criterion_ids,
                            const std::vector<Response>& responses,
                            const FoldAssignment& folds, const LlmGradeOptions& options) {
    LlmRunResult result;
    if (!options.transcripts_dir.empty()) fs::create_directories(options.transcripts_dir);

    std::map<std::string, const Response*> by_id;
    for (const auto& r : responses) by_id[r.id] = &r;

    std::vector<GradeTask> tasks;
    for (std::size_t fold = 0; fold < folds.folds.size(); ++fold) {
        const FoldSplit& split = folds.folds[fold];
        std::vector<const Response*> train;
        for (const auto& id : split.train_ids) train.push_back(by_id.at(id));

        std::set<std::string> eval_ids(split.dev_ids.begin(), split.dev_ids.end());
        eval_ids.insert(split.test_ids.begin(), split.test_ids.end());

        for (const auto& cid : criterion_ids) {
            const AnalyticCriterion* criterion = question.rubric.find(cid);
            if (!criterion)
                throw std::invalid_argument("unknown criterion \"" + cid + "\"");
            const ShotSet shots = sample_shots(
                train, *criterion, options.n_per_label,
                mix_seed(options.seed, static_cast<std::uint64_t>(fold)));
            for (const auto& w : shots.warnings) result.warnings.push_back(w);
            for (const int label : {2, 1, 0})
                for (const auto& shot : shots.by_label[label])
                    if (eval_ids.count(shot.response_id))
                        throw std::logic_error("shot sampling leaked evaluation response \"" +
                                               shot.response_id + "\"");
            for (const auto& rid : split.test_ids) {
                GradeTask task;
                task.index = tasks.size();
                task.fold = static_cast<int>(fold);
                task.response = by_id.at(rid);
                task.criterion = criterion;
                task.prompt = build_prompt(question, *criterion, shots, task.response->text);
                tasks.push_back(std::move(task));
            }
        }
    }

    result.items.resize(tasks.size());
    result.request_count = tasks.size();

    std::atomic<std::size_t> cursor{0};
    std::mutex failures_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= tasks.size()) return;
            const GradeTask& task = tasks[i];
            LlmItem item;
            item.response_id = task.response->id;
            item.fold = task.fold;
            item.criterion_id = task.criterion->id;
            auto gold = task.response->annotations.find(task.criterion->id);
            if (gold != task.response->annotations.end()) item.gold = gold->second.score;

            const auto t0 = std::chrono::steady_clock::now();
            std::vector<std::string> raw_replies;
            try {
                std::string raw = call_with_transport_retries(client, task.prompt);
                raw_replies.push_back(raw);
                LlmVerdict verdict;
                try {
                    verdict = parse_verdict(raw, task.criterion->id);
                } catch (const ParseError&) {
                    // One re-request on parse failure, then give up.
                    raw = call_with_transport_retries(client, task.prompt);
                    raw_replies.push_back(raw);
                    verdict = parse_verdict(raw, task.criterion->id);
                }
                item.pred = verdict.label;
                item.cue_text = verdict.cue_text;
                if (verdict.cue_text)
                    item.cue_span = find_cue_span(task.response->text, *verdict.cue_text);
            } catch (const std::exception& e) {
                item.error = e.what();
                std::lock_guard<std::mutex> lock(failures_mutex);
                result.failures.push_back(task.response->id + "/" + task.criterion->id + ": " +
                                          e.what());
            }
            const double elapsed_ms =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            write_transcript(options.transcripts_dir, task, raw_replies, item, elapsed_ms);
            result.items[task.index] = std::move(item);
        }
    };

    const std::size_t thread_count = std::min<std::size_t>(
        tasks.size(), static_cast<std::size_t>(std::max(1, client.config().max_concurrency)));
    if (thread_count <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return result;
}

}  // namespace ste
