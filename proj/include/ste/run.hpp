#ifndef STE_RUN_HPP
#define STE_RUN_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ste/llm.hpp"
#include "ste/training.hpp"
#include <nlohmann/json.hpp>

namespace ste {

// Scripted completions for offline runs, loaded from the config file.
struct StubScript {
    std::optional<std::string> default_reply;
    std::map<std::string, std::string> by_user_text;
    std::vector<std::string> sequence;
};

// One structured config drives every subcommand; defaults reproduce the
// experimental protocol (5 folds, 50 epochs, lr 0.001, hidden 128, batch 10).
struct RunConfig {
    std::string dataset;
    std::vector<std::string> questions;  // empty: all questions in the file
    int folds = 5;
    std::uint64_t seed = 42;
    bool allow_duplicate_leakage = false;
    double min_incorrect_ratio = 0.10;
    TrainingConfig training;
    LlmClientConfig llm;
    bool llm_stub = false;
    StubScript stub;
    int shots = 2;
    std::string output_dir = "runs";
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::ordered_json run_config_to_json(const RunConfig& config);
RunConfig load_run_config(const std::string& path);

// Creates the run directory: an explicit path must not already exist; with
// none given, a timestamped directory under `output_dir` is created and
// never reused.
std::string create_run_dir(const std::string& explicit_dir, const std::string& output_dir,
                           const std::string& command);

// manifest.json: command, argv, resolved config, seed and version; enough to
// replay the run byte-for-byte.
void write_manifest(const std::string& run_dir, const std::string& command,
                    const std::vector<std::string>& argv,
                    const nlohmann::ordered_json& config_snapshot);

nlohmann::json read_manifest(const std::string& run_dir);

}  // namespace ste

#endif  // STE_RUN_HPP
