#include "ste/run.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ste/errors.hpp"
#include "ste/version.hpp"

namespace ste {

namespace fs = std::filesystem;

RunConfig run_config_from_json(const nlohmann::json& doc) {
    RunConfig c;
    if (doc.contains("dataset")) c.dataset = doc["dataset"].get<std::string>();
    if (doc.contains("questions")) c.questions = doc["questions"].get<std::vector<std::string>>();
    if (doc.contains("folds")) c.folds = doc["folds"].get<int>();
    if (doc.contains("seed")) c.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("allow_duplicate_leakage"))
        c.allow_duplicate_leakage = doc["allow_duplicate_leakage"].get<bool>();
    if (doc.contains("min_incorrect_ratio"))
        c.min_incorrect_ratio = doc["min_incorrect_ratio"].get<double>();
    if (doc.contains("shots")) c.shots = doc["shots"].get<int>();
    if (doc.contains("output_dir")) c.output_dir = doc["output_dir"].get<std::string>();

    if (doc.contains("training")) {
        const auto& t = doc["training"];
        if (t.contains("epochs")) c.training.epochs = t["epochs"].get<int>();
        if (t.contains("learning_rate")) c.training.learning_rate = t["learning_rate"].get<double>();
        if (t.contains("recurrent_hidden"))
            c.training.recurrent_hidden = t["recurrent_hidden"].get<int>();
        if (t.contains("batch_size")) c.training.batch_size = t["batch_size"].get<int>();
        if (t.contains("encoder_dim")) c.training.encoder_dim = t["encoder_dim"].get<int>();
        if (t.contains("attention_supervision"))
            c.training.attention_supervision = t["attention_supervision"].get<bool>();
        if (t.contains("per_criterion_models"))
            c.training.per_criterion_models = t["per_criterion_models"].get<bool>();
    }
    c.training.seed = c.seed;

    if (doc.contains("llm")) {
        const auto& l = doc["llm"];
        if (l.contains("model")) c.llm.model = l["model"].get<std::string>();
        if (l.contains("timeout_seconds")) c.llm.timeout_seconds = l["timeout_seconds"].get<double>();
        if (l.contains("max_retries")) c.llm.max_retries = l["max_retries"].get<int>();
        if (l.contains("max_concurrency")) c.llm.max_concurrency = l["max_concurrency"].get<int>();
        if (l.contains("base_url")) c.llm.base_url = l["base_url"].get<std::string>();
        if (l.contains("stub")) {
            c.llm_stub = true;
            const auto& s = l["stub"];
            if (s.contains("default")) c.stub.default_reply = s["default"].get<std::string>();
            if (s.contains("by_user_text"))
                for (auto it = s["by_user_text"].begin(); it != s["by_user_text"].end(); ++it)
                    c.stub.by_user_text[it.key()] = it.value().get<std::string>();
            if (s.contains("sequence"))
                c.stub.sequence = s["sequence"].get<std::vector<std::string>>();
        }
    }
    return c;
}

nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
    nlohmann::ordered_json doc;
    doc["dataset"] = c.dataset;
    doc["questions"] = c.questions;
    doc["folds"] = c.folds;
    doc["seed"] = c.seed;
    doc["allow_duplicate_leakage"] = c.allow_duplicate_leakage;
    doc["min_incorrect_ratio"] = c.min_incorrect_ratio;
    doc["shots"] = c.shots;
    doc["output_dir"] = c.output_dir;
    doc["training"] = {
        {"epochs", c.training.epochs},
        {"learning_rate", c.training.learning_rate},
        {"recurrent_hidden", c.training.recurrent_hidden},
        {"batch_size", c.training.batch_size},
        {"encoder_dim", c.training.encoder_dim},
        {"attention_supervision", c.training.attention_supervision},
        {"per_criterion_models", c.training.per_criterion_models},
    };
    nlohmann::ordered_json llm = {
        {"model", c.llm.model},
        {"timeout_seconds", c.llm.timeout_seconds},
        {"max_retries", c.llm.max_retries},
        {"max_concurrency", c.llm.max_concurrency},
        {"base_url", c.llm.base_url},
    };
    if (c.llm_stub) {
        nlohmann::ordered_json stub = nlohmann::ordered_json::object();
        if (c.stub.default_reply) stub["default"] = *c.stub.default_reply;
        if (!c.stub.by_user_text.empty()) {
            nlohmann::ordered_json m = nlohmann::ordered_json::object();
            for (const auto& [k, v] : c.stub.by_user_text) m[k] = v;
            stub["by_user_text"] = std::move(m);
        }
        if (!c.stub.sequence.empty()) stub["sequence"] = c.stub.sequence;
        llm["stub"] = std::move(stub);
    }
    doc["llm"] = std::move(llm);
    return doc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config file \"" + path + "\"");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError("config parse error in \"" + path + "\": " + e.what());
    }
    return run_config_from_json(doc);
}

std::string create_run_dir(const std::string& explicit_dir, const std::string& output_dir,
                           const std::string& command) {
    if (!explicit_dir.empty()) {
        if (fs::exists(explicit_dir))
            throw std::runtime_error("run directory \"" + explicit_dir +
                                     "\" already exists; runs are never overwritten");
        fs::create_directories(explicit_dir);
        return explicit_dir;
    }
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
    for (int suffix = 0;; ++suffix) {
        std::ostringstream name;
        name << command << "-" << stamp;
        if (suffix > 0) name << "-" << suffix;
        const fs::path dir = fs::path(output_dir) / name.str();
        if (!fs::exists(dir)) {
            fs::create_directories(dir);
            return dir.string();
        }
    }
}

void write_manifest(const std::string& run_dir, const std::string& command,
                    const std::vector<std::string>& argv,
                    const nlohmann::ordered_json& config_snapshot) {
    nlohmann::ordered_json doc;
    doc["version"] = kVersion;
    doc["command"] = command;
    doc["argv"] = argv;
    doc["config"] = config_snapshot;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    localtime_r(&t, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%S", &tm);
    doc["created"] = stamp;
    std::ofstream out(fs::path(run_dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + run_dir);
    out << doc.dump(2) << "\n";
}

nlohmann::json read_manifest(const std::string& run_dir) {
    const fs::path path = fs::path(run_dir) / "manifest.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("no manifest.json in " + run_dir);
    return nlohmann::json::parse(in);
}

}  // namespace ste
