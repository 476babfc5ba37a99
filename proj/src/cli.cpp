#include "ste/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include "ste/agreement.hpp"
#include "ste/errors.hpp"
#include "ste/evaluation.hpp"
#include "ste/oracle.hpp"
#include "ste/run.hpp"
#include "ste/version.hpp"
#include <CLI11.hpp>

namespace ste::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

const Question& require_question(const Dataset& dataset, const std::string& id) {
    const Question* q = dataset.question_by_id(id);
    if (!q) throw std::invalid_argument("dataset has no question \"" + id + "\"");
    return *q;
}

std::vector<std::string> question_ids(const Dataset& dataset, const std::vector<std::string>& wanted) {
    if (!wanted.empty()) return wanted;
    std::vector<std::string> ids;
    for (const auto& q : dataset.questions) ids.push_back(q.id);
    return ids;
}

std::unique_ptr<LlmClient> make_client(const RunConfig& config) {
    if (config.llm_stub) {
        auto stub = std::make_unique<ScriptedStubClient>(config.llm);
        if (config.stub.default_reply) stub->set_default_reply(*config.stub.default_reply);
        for (const auto& [text, reply] : config.stub.by_user_text)
            stub->set_reply_for(text, reply);
        for (const auto& reply : config.stub.sequence) stub->push_reply(reply);
        return stub;
    }
    return std::make_unique<HttpLlmClient>(config.llm);
}

ordered_json cue_to_json(const std::optional<CueSpan>& cue) {
    if (!cue) return nullptr;
    return ordered_json{{"start", cue->start_char}, {"end", cue->end_char}};
}

// --- predictions.json ------------------------------------------------------

struct PredictionItem {
    std::string response_id;
    int fold = 0;
    std::string criterion_id;
    std::optional<ScoreLabel> gold;
    std::optional<ScoreLabel> pred;
    std::optional<CueSpan> gold_cue;
    std::optional<CueSpan> pred_cue;
    std::optional<std::string> cue_text;
    std::string error;
};

struct PredictionsFile {
    std::string question_id;
    std::string model;
    std::string fold_scheme;
    std::optional<int> shots;
    std::map<std::string, Category> categories;
    std::map<std::string, bool> degenerate;
    std::vector<PredictionItem> items;
    std::vector<std::string> failures;
};

ordered_json predictions_to_json(const PredictionsFile& p) {
    ordered_json doc;
    doc["question"] = p.question_id;
    doc["model"] = p.model;
    doc["fold_scheme"] = p.fold_scheme;
    doc["shots"] = p.shots ? ordered_json(*p.shots) : ordered_json(nullptr);
    ordered_json cats = ordered_json::object();
    for (const auto& [id, cat] : p.categories) {
        ordered_json entry;
        entry["category"] = std::string(1, static_cast<char>(cat));
        auto deg = p.degenerate.find(id);
        entry["degenerate"] = deg != p.degenerate.end() && deg->second;
        cats[id] = std::move(entry);
    }
    doc["criteria"] = std::move(cats);
    doc["items"] = ordered_json::array();
    for (const auto& item : p.items) {
        ordered_json ij;
        ij["response_id"] = item.response_id;
        ij["fold"] = item.fold;
        ij["criterion_id"] = item.criterion_id;
        ij["gold"] = item.gold ? ordered_json(label_value(*item.gold)) : ordered_json(nullptr);
        ij["pred"] = item.pred ? ordered_json(label_value(*item.pred)) : ordered_json(nullptr);
        if (item.gold && item.pred) ij["agree"] = *item.gold == *item.pred;
        ij["gold_cue"] = cue_to_json(item.gold_cue);
        ij["pred_cue"] = cue_to_json(item.pred_cue);
        if (item.cue_text) ij["cue_text"] = *item.cue_text;
        if (!item.error.empty()) ij["error"] = item.error;
        doc["items"].push_back(std::move(ij));
    }
    doc["failures"] = p.failures;
    return doc;
}

PredictionsFile predictions_from_json(const json& doc) {
    PredictionsFile p;
    p.question_id = doc.at("question").get<std::string>();
    p.model = doc.at("model").get<std::string>();
    p.fold_scheme = doc.at("fold_scheme").get<std::string>();
    if (!doc.at("shots").is_null()) p.shots = doc["shots"].get<int>();
    for (auto it = doc.at("criteria").begin(); it != doc.at("criteria").end(); ++it) {
        p.categories[it.key()] = category_from_string(it.value().at("category").get<std::string>());
        p.degenerate[it.key()] = it.value().value("degenerate", false);
    }
    for (const auto& ij : doc.at("items")) {
        PredictionItem item;
        item.response_id = ij.at("response_id").get<std::string>();
        item.fold = ij.at("fold").get<int>();
        item.criterion_id = ij.at("criterion_id").get<std::string>();
        if (!ij.at("gold").is_null()) item.gold = label_from_int(ij["gold"].get<int>());
        if (!ij.at("pred").is_null()) item.pred = label_from_int(ij["pred"].get<int>());
        if (ij.contains("error")) item.error = ij["error"].get<std::string>();
        p.items.push_back(std::move(item));
    }
    if (doc.contains("failures")) p.failures = doc["failures"].get<std::vector<std::string>>();
    return p;
}

// Per-criterion F1 over the items carrying both a gold and a parsed
// prediction; unparsed items are excluded from metrics.
std::vector<CriterionEval> evals_from_predictions(const PredictionsFile& p) {
    std::map<std::string, std::pair<std::vector<ScoreLabel>, std::vector<ScoreLabel>>> by_criterion;
    for (const auto& item : p.items) {
        if (!item.gold || !item.pred) continue;
        by_criterion[item.criterion_id].first.push_back(*item.gold);
        by_criterion[item.criterion_id].second.push_back(*item.pred);
    }
    std::vector<CriterionEval> evals;
    for (const auto& [cid, cat] : p.categories) {
        auto it = by_criterion.find(cid);
        if (it == by_criterion.end()) continue;
        CriterionEval e;
        e.criterion_id = cid;
        e.category = cat;
        e.num_items = it->second.first.size();
        e.f1 = per_criterion_f1(it->second.first, it->second.second);
        auto deg = p.degenerate.find(cid);
        e.degenerate = deg != p.degenerate.end() && deg->second;
        evals.push_back(std::move(e));
    }
    return evals;
}

EvalReport report_for_predictions(const PredictionsFile& p) {
    return aggregate_report(evals_from_predictions(p), p.model, p.question_id, p.fold_scheme,
                            p.shots);
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void write_json_file(const fs::path& path, const ordered_json& doc) {
    write_text_file(path, doc.dump(2) + "\n");
}

std::string fold_scheme_name(int k) { return std::to_string(k) + "-fold 3:1:1"; }

// --- train ------------------------------------------------------------------

EvalReport run_train_question(const RunConfig& config, const Dataset& dataset,
                              const std::string& question_id, const std::string& run_dir) {
    const Question& question = require_question(dataset, question_id);
    std::vector<Response> responses;
    for (const auto& r : dataset.responses)
        if (r.question_id == question_id) responses.push_back(r);

    const FoldAssignment folds = make_folds(question, responses, config.folds,
                                            mix_seed(config.seed, "folds"),
                                            config.allow_duplicate_leakage);
    const CriterionFilterResult filter =
        filter_criteria(question, responses, config.min_incorrect_ratio);
    for (const auto& [id, reason] : filter.excluded)
        std::cerr << "note: " << question_id << "/" << id << " excluded: " << reason << "\n";
    if (filter.kept.empty())
        throw std::runtime_error("no criterion of " + question_id + " passes the filter");

    TrainingConfig tc = config.training;
    tc.seed = mix_seed(config.seed, "train");
    const TrainedModel model = train_question_model(question, responses, folds, filter.kept, tc);
    const auto tests = evaluate_on_tests(model, question, responses, folds);

    PredictionsFile pfile;
    pfile.question_id = question_id;
    pfile.model = tc.attention_supervision ? "bilstm-attn" : "bilstm-attn-noatt";
    pfile.fold_scheme = fold_scheme_name(config.folds);
    for (const auto& cid : filter.kept) {
        pfile.categories[cid] = question.rubric.find(cid)->category;
        bool degenerate = false;
        for (const auto& fm : model.folds)
            degenerate = degenerate || fm.criteria.at(cid).degenerate;
        pfile.degenerate[cid] = degenerate;
    }
    for (const auto& t : tests) {
        PredictionItem item;
        item.response_id = t.response_id;
        item.fold = t.fold;
        item.criterion_id = t.criterion_id;
        item.gold = t.gold;
        item.pred = t.pred;
        item.gold_cue = t.gold_cue;
        item.pred_cue = t.predicted_cue;
        pfile.items.push_back(std::move(item));
    }

    const fs::path qdir = fs::path(run_dir) / question_id;
    fs::create_directories(qdir);
    write_json_file(qdir / "predictions.json", predictions_to_json(pfile));
    write_json_file(qdir / "training.json", training_manifest(model));
    save_checkpoints(model, run_dir);

    const EvalReport report = report_for_predictions(pfile);
    write_json_file(qdir / "report.json", report_to_json(report));
    write_text_file(qdir / "report.txt", render_report_text(report));
    return report;
}

// --- grade-llm ----------------------------------------------------------------

EvalReport run_grade_question(const RunConfig& config, const Dataset& dataset,
                              const std::string& question_id, int shots,
                              const std::string& run_dir, std::size_t* request_count) {
    const Question& question = require_question(dataset, question_id);
    std::vector<Response> responses;
    for (const auto& r : dataset.responses)
        if (r.question_id == question_id) responses.push_back(r);

    const FoldAssignment folds = make_folds(question, responses, config.folds,
                                            mix_seed(config.seed, "folds"),
                                            config.allow_duplicate_leakage);
    const CriterionFilterResult filter =
        filter_criteria(question, responses, config.min_incorrect_ratio);
    if (filter.kept.empty())
        throw std::runtime_error("no criterion of " + question_id + " passes the filter");

    auto client = make_client(config);
    LlmGradeOptions options;
    options.n_per_label = shots;
    options.seed = mix_seed(config.seed, "shots");
    options.transcripts_dir = (fs::path(run_dir) / question_id / "transcripts").string();

    const LlmRunResult run = grade_with_llm(*client, question, filter.kept, responses, folds, options);
    print_warnings(run.warnings);
    if (request_count) *request_count = run.request_count;

    PredictionsFile pfile;
    pfile.question_id = question_id;
    pfile.model = "llm:" + config.llm.model + (config.llm_stub ? " (stub)" : "");
    pfile.fold_scheme = fold_scheme_name(config.folds);
    pfile.shots = shots;
    for (const auto& cid : filter.kept)
        pfile.categories[cid] = question.rubric.find(cid)->category;
    for (const auto& it : run.items) {
        PredictionItem item;
        item.response_id = it.response_id;
        item.fold = it.fold;
        item.criterion_id = it.criterion_id;
        item.gold = it.gold;
        item.pred = it.pred;
        item.pred_cue = it.cue_span;
        item.cue_text = it.cue_text;
        item.error = it.error;
        pfile.items.push_back(std::move(item));
    }
    pfile.failures = run.failures;

    const fs::path qdir = fs::path(run_dir) / question_id;
    fs::create_directories(qdir);
    write_json_file(qdir / "predictions.json", predictions_to_json(pfile));
    const EvalReport report = report_for_predictions(pfile);
    write_json_file(qdir / "report.json", report_to_json(report));
    write_text_file(qdir / "report.txt", render_report_text(report));
    return report;
}

// --- subcommand bodies -----------------------------------------------------------

int cmd_validate(const std::string& dataset_path) {
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(dataset_path, &warnings);
    print_warnings(warnings);
    std::cout << "OK: " << dataset.questions.size() << " question(s), "
              << dataset.responses.size() << " response(s)\n";
    return 0;
}

int cmd_stats(const std::string& dataset_path) {
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(dataset_path, &warnings);
    print_warnings(warnings);
    const auto stats = dataset_stats(dataset);
    std::cout << std::left << std::setw(10) << "Question" << std::right << std::setw(8) << "#Ans"
              << std::setw(10) << "#Distinct" << std::setw(11) << "#Criteria" << std::setw(8)
              << "2" << std::setw(8) << "1" << std::setw(8) << "0" << "\n";
    for (const auto& s : stats) {
        std::cout << std::left << std::setw(10) << s.question_id << std::right << std::setw(8)
                  << s.num_responses << std::setw(10) << s.num_distinct << std::setw(11)
                  << s.num_criteria << std::setw(8) << s.label_counts[2] << std::setw(8)
                  << s.label_counts[1] << std::setw(8) << s.label_counts[0] << "\n";
    }
    return 0;
}

int cmd_split(const std::vector<std::string>& argv, const std::string& dataset_path,
              const std::string& question_id, int k, std::uint64_t seed, bool allow_leakage,
              const std::string& out_dir) {
    const Dataset dataset = load_dataset(dataset_path);
    const Question& question = require_question(dataset, question_id);
    std::vector<Response> responses;
    for (const auto& r : dataset.responses)
        if (r.question_id == question_id) responses.push_back(r);
    const FoldAssignment folds = make_folds(question, responses, k, seed, allow_leakage);
    for (std::size_t i = 0; i < folds.folds.size(); ++i) {
        const auto& f = folds.folds[i];
        std::cout << "fold " << i << ": train " << f.train_ids.size() << "  dev "
                  << f.dev_ids.size() << "  test " << f.test_ids.size() << "\n";
    }
    if (!out_dir.empty()) {
        const std::string run_dir = create_run_dir(out_dir, "runs", "split");
        ordered_json doc;
        doc["question"] = question_id;
        doc["k"] = k;
        doc["seed"] = seed;
        doc["folds"] = ordered_json::array();
        for (const auto& f : folds.folds)
            doc["folds"].push_back(ordered_json{
                {"train", f.train_ids}, {"dev", f.dev_ids}, {"test", f.test_ids}});
        write_json_file(fs::path(run_dir) / "folds.json", doc);
        ordered_json cfg;
        cfg["dataset"] = dataset_path;
        cfg["question"] = question_id;
        cfg["k"] = k;
        cfg["seed"] = seed;
        cfg["allow_duplicate_leakage"] = allow_leakage;
        write_manifest(run_dir, "split", argv, cfg);
        std::cout << "written: " << run_dir << "\n";
    }
    return 0;
}

int cmd_filter(const std::string& dataset_path, const std::vector<std::string>& questions,
               double min_ratio) {
    const Dataset dataset = load_dataset(dataset_path);
    for (const auto& qid : question_ids(dataset, questions)) {
        const Question& question = require_question(dataset, qid);
        std::vector<Response> responses;
        for (const auto& r : dataset.responses)
            if (r.question_id == qid) responses.push_back(r);
        const auto result = filter_criteria(question, responses, min_ratio);
        std::cout << qid << ": kept";
        for (const auto& id : result.kept) std::cout << " " << id;
        std::cout << "\n";
        for (const auto& [id, reason] : result.excluded)
            std::cout << qid << ": excluded " << id << " (" << reason << ")\n";
    }
    return 0;
}

int cmd_train(const std::vector<std::string>& argv, const std::string& config_path,
              const std::vector<std::string>& questions, const std::string& out_dir,
              bool no_attention, bool per_criterion) {
    RunConfig config = load_run_config(config_path);
    if (no_attention) config.training.attention_supervision = false;
    if (per_criterion) config.training.per_criterion_models = true;
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(config.dataset, &warnings);
    print_warnings(warnings);

    const std::string run_dir = create_run_dir(out_dir, config.output_dir, "train");
    RunConfig snapshot = config;
    if (!questions.empty()) snapshot.questions = questions;
    write_manifest(run_dir, "train", argv, run_config_to_json(snapshot));

    for (const auto& qid : question_ids(dataset, snapshot.questions)) {
        const EvalReport report = run_train_question(config, dataset, qid, run_dir);
        std::cout << render_report_text(report);
    }
    std::cout << "run: " << run_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& run_dir) {
    bool found = false;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
        if (!entry.is_directory()) continue;
        const fs::path pred_path = entry.path() / "predictions.json";
        if (!fs::exists(pred_path)) continue;
        found = true;
        std::ifstream in(pred_path);
        const PredictionsFile pfile = predictions_from_json(json::parse(in));
        const EvalReport report = report_for_predictions(pfile);
        write_json_file(entry.path() / "report.json", report_to_json(report));
        write_text_file(entry.path() / "report.txt", render_report_text(report));
        std::cout << render_report_text(report);
        if (!pfile.failures.empty())
            std::cout << "failures: " << pfile.failures.size() << " (excluded from metrics)\n";
    }
    if (!found) throw std::runtime_error("no predictions.json found under " + run_dir);
    return 0;
}

int cmd_prompt(const std::string& dataset_path, const std::string& question_id,
               const std::string& criterion_id, const std::string& response_id,
               const std::string& response_text, int shots, std::uint64_t seed) {
    const Dataset dataset = load_dataset(dataset_path);
    const Question& question = require_question(dataset, question_id);
    const AnalyticCriterion* criterion = question.rubric.find(criterion_id);
    if (!criterion)
        throw std::invalid_argument("question has no criterion \"" + criterion_id + "\"");

    std::string text = response_text;
    std::vector<const Response*> pool;
    for (const auto& r : dataset.responses) {
        if (r.question_id != question_id) continue;
        if (!response_id.empty() && r.id == response_id) text = r.text;
        else pool.push_back(&r);
    }
    if (text.empty())
        throw std::invalid_argument("give --response-id or --response-text");

    const ShotSet shot_set = sample_shots(pool, *criterion, shots, seed);
    print_warnings(shot_set.warnings);
    const PromptSpec prompt = build_prompt(question, *criterion, shot_set, text);
    std::cout << "--- system ---\n" << prompt.system_text << "--- user ---\n"
              << prompt.user_text << "\n";
    return 0;
}

int cmd_grade_llm(const std::vector<std::string>& argv, const std::string& config_path,
                  const std::vector<std::string>& questions, int shots_override,
                  const std::string& out_dir) {
    RunConfig config = load_run_config(config_path);
    const int shots = shots_override > 0 ? shots_override : config.shots;
    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(config.dataset, &warnings);
    print_warnings(warnings);

    const std::string run_dir = create_run_dir(out_dir, config.output_dir, "grade-llm");
    RunConfig snapshot = config;
    if (!questions.empty()) snapshot.questions = questions;
    snapshot.shots = shots;
    write_manifest(run_dir, "grade-llm", argv, run_config_to_json(snapshot));

    for (const auto& qid : question_ids(dataset, snapshot.questions)) {
        std::size_t requests = 0;
        const EvalReport report = run_grade_question(config, dataset, qid, shots, run_dir, &requests);
        std::cout << render_report_text(report);
        std::cout << "requests: " << requests << "\n";
    }
    std::cout << "run: " << run_dir << "\n";
    return 0;
}

int cmd_sweep(const std::vector<std::string>& argv, const std::string& config_path,
              const std::vector<std::string>& questions, const std::string& shots_csv,
              const std::string& out_dir) {
    RunConfig config = load_run_config(config_path);
    std::vector<int> shot_counts;
    std::stringstream ss(shots_csv);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (part.empty()) continue;
        shot_counts.push_back(std::stoi(part));
    }
    if (shot_counts.empty()) throw std::invalid_argument("--shots needs a list like 1,2,5,10");

    std::vector<std::string> warnings;
    const Dataset dataset = load_dataset(config.dataset, &warnings);
    print_warnings(warnings);

    const std::string run_dir = create_run_dir(out_dir, config.output_dir, "sweep-shots");
    RunConfig snapshot = config;
    if (!questions.empty()) snapshot.questions = questions;
    write_manifest(run_dir, "sweep-shots", argv, run_config_to_json(snapshot));

    const auto qids = question_ids(dataset, snapshot.questions);
    ordered_json sweep;
    sweep["points"] = ordered_json::array();
    std::ostringstream table;
    table << std::left << std::setw(8) << "shots" << std::setw(12) << "Correct" << std::setw(18)
          << "Partial. Correct" << std::setw(12) << "Incorrect" << std::setw(10) << "requests"
          << "\n";
    for (const int n : shot_counts) {
        const std::string point_dir = (fs::path(run_dir) / ("shots-" + std::to_string(n))).string();
        fs::create_directories(point_dir);
        std::size_t total_requests = 0;
        std::array<std::vector<double>, 3> label_means;
        for (const auto& qid : qids) {
            std::size_t requests = 0;
            const EvalReport report =
                run_grade_question(config, dataset, qid, n, point_dir, &requests);
            total_requests += requests;
            for (int label = 0; label < 3; ++label) {
                const auto& cell = report.rows.back().cells[label];  // All row
                if (cell.mean) label_means[label].push_back(*cell.mean);
            }
        }
        auto mean_of = [](const std::vector<double>& v) -> ordered_json {
            if (v.empty()) return nullptr;
            double s = 0;
            for (const double x : v) s += x;
            return s / static_cast<double>(v.size());
        };
        ordered_json point;
        point["shots"] = n;
        point["f1"] = {{"2", mean_of(label_means[2])},
                       {"1", mean_of(label_means[1])},
                       {"0", mean_of(label_means[0])}};
        point["requests"] = total_requests;
        sweep["points"].push_back(point);

        auto fmt = [](const ordered_json& v) {
            if (v.is_null()) return std::string("nan");
            std::ostringstream os;
            os << std::fixed << std::setprecision(2) << v.get<double>();
            return os.str();
        };
        table << std::left << std::setw(8) << n << std::setw(12) << fmt(point["f1"]["2"])
              << std::setw(18) << fmt(point["f1"]["1"]) << std::setw(12) << fmt(point["f1"]["0"])
              << std::setw(10) << total_requests << "\n";
    }
    write_json_file(fs::path(run_dir) / "sweep.json", sweep);
    write_text_file(fs::path(run_dir) / "sweep.txt", table.str());
    std::cout << table.str();
    std::cout << "run: " << run_dir << "\n";
    return 0;
}

int cmd_synth(const std::vector<std::string>& argv, const std::string& dataset_path,
              const std::string& question_id, int n, std::uint64_t seed,
              const std::string& profile_path, const std::string& out_dir) {
    const Dataset dataset = load_dataset(dataset_path);
    const Question& question = require_question(dataset, question_id);
    ErrorProfile profile;
    if (!profile_path.empty()) profile = load_error_profile(profile_path);
    const std::uint64_t effective_seed = profile.seed && seed == 0 ? *profile.seed : seed;

    const auto responses =
        synthesize_responses(question, profile, static_cast<std::size_t>(n), effective_seed);

    Dataset out;
    out.questions.push_back(question);
    out.responses = responses;

    const std::string run_dir = create_run_dir(out_dir, "runs", "synth");
    save_dataset(out, (fs::path(run_dir) / "synthetic.json").string());
    ordered_json cfg;
    cfg["dataset"] = dataset_path;
    cfg["question"] = question_id;
    cfg["n"] = n;
    cfg["seed"] = effective_seed;
    cfg["profile"] = profile_path;
    write_manifest(run_dir, "synth", argv, cfg);
    std::cout << "written: " << (fs::path(run_dir) / "synthetic.json").string() << " (" << n
              << " responses)\n";
    return 0;
}

int cmd_agreement(const std::string& dataset_path, const std::string& second_path) {
    const Dataset primary = load_dataset(dataset_path);
    const Dataset secondary = load_dataset(second_path);
    const AgreementReport report = dataset_agreement(primary, secondary);
    std::cout << std::left << std::setw(12) << "Criterion" << std::right << std::setw(8) << "pairs"
              << std::setw(10) << "kappa" << "\n";
    for (const auto& c : report.per_criterion)
        std::cout << std::left << std::setw(12) << c.criterion_id << std::right << std::setw(8)
                  << c.num_pairs << std::setw(10) << std::fixed << std::setprecision(3) << c.kappa
                  << "\n";
    std::cout << "mean kappa: " << std::fixed << std::setprecision(3) << report.mean_kappa << "\n";
    std::cout << "cue F1: " << std::fixed << std::setprecision(3) << report.cue_f1 << " over "
              << report.cue_pairs << " pair(s)\n";
    return 0;
}

EvalReport load_report_from(const std::string& path) {
    fs::path p = path;
    if (fs::is_directory(p)) {
        // A run dir: take the first question subdirectory's report.
        for (const auto& entry : fs::directory_iterator(p))
            if (entry.is_directory() && fs::exists(entry.path() / "report.json")) {
                p = entry.path() / "report.json";
                break;
            }
    }
    if (fs::is_directory(p)) throw std::runtime_error("no report.json under " + path);
    std::ifstream in(p);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    return report_from_json(json::parse(in));
}

int cmd_compare(const std::string& a_path, const std::string& b_path) {
    const EvalReport a = load_report_from(a_path);
    const EvalReport b = load_report_from(b_path);
    std::cout << render_report_delta(a, b);
    return 0;
}

int cmd_replay(const std::string& run_dir, const std::string& out_dir) {
    const json manifest = read_manifest(run_dir);
    std::vector<std::string> argv = manifest.at("argv").get<std::vector<std::string>>();
    // Strip any recorded --out and substitute the new destination.
    std::vector<std::string> pruned;
    for (std::size_t i = 0; i < argv.size(); ++i) {
        if (argv[i] == "--out") {
            ++i;
            continue;
        }
        pruned.push_back(argv[i]);
    }
    if (!out_dir.empty()) {
        pruned.push_back("--out");
        pruned.push_back(out_dir);
    }
    return dispatch(pruned);
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
    CLI::App app{"STE grading toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    int exit_code = 0;
    const std::vector<std::string> argv = args;

    // validate
    std::string ds_path;
    auto* validate = app.add_subcommand("validate", "Load and validate a dataset file");
    validate->add_option("dataset", ds_path, "dataset file")->required();
    validate->callback([&]() { exit_code = cmd_validate(ds_path); });

    // stats
    std::string stats_path;
    auto* stats = app.add_subcommand("stats", "Per-question dataset statistics");
    stats->add_option("dataset", stats_path, "dataset file")->required();
    stats->callback([&]() { exit_code = cmd_stats(stats_path); });

    // split
    std::string split_path, split_question, split_out;
    int split_k = 5;
    std::uint64_t split_seed = 42;
    bool split_leak = false;
    auto* split = app.add_subcommand("split", "Make cross-validation folds");
    split->add_option("dataset", split_path)->required();
    split->add_option("--question", split_question)->required();
    split->add_option("--k", split_k);
    split->add_option("--seed", split_seed);
    split->add_flag("--allow-duplicate-leakage", split_leak,
                    "shuffle naively instead of grouping identical texts");
    split->add_option("--out", split_out, "run directory for folds.json");
    split->callback([&]() {
        exit_code = cmd_split(argv, split_path, split_question, split_k, split_seed, split_leak,
                              split_out);
    });

    // filter
    std::string filter_path;
    std::vector<std::string> filter_questions;
    double filter_ratio = 0.10;
    auto* filter = app.add_subcommand("filter", "Filter criteria by incorrect-instance ratio");
    filter->add_option("dataset", filter_path)->required();
    filter->add_option("--question", filter_questions);
    filter->add_option("--min-incorrect-ratio", filter_ratio);
    filter->callback([&]() { exit_code = cmd_filter(filter_path, filter_questions, filter_ratio); });

    // train
    std::string train_config, train_out;
    std::vector<std::string> train_questions;
    bool train_noatt = false, train_percrit = false;
    auto* train = app.add_subcommand("train", "Train the scoring model (5-fold protocol)");
    train->add_option("--config", train_config)->required();
    train->add_option("--question", train_questions);
    train->add_option("--out", train_out);
    train->add_flag("--no-attention-supervision", train_noatt);
    train->add_flag("--per-criterion-models", train_percrit);
    train->callback([&]() {
        exit_code = cmd_train(argv, train_config, train_questions, train_out, train_noatt,
                              train_percrit);
    });

    // eval
    std::string eval_run;
    auto* eval = app.add_subcommand("eval", "Recompute and print reports for a run");
    eval->add_option("--run", eval_run)->required();
    eval->callback([&]() { exit_code = cmd_eval(eval_run); });

    // prompt
    std::string prompt_dataset, prompt_question, prompt_criterion, prompt_rid, prompt_text;
    int prompt_shots = 2;
    std::uint64_t prompt_seed = 42;
    auto* prompt = app.add_subcommand("prompt", "Render the grading prompt for one criterion");
    prompt->add_option("--dataset", prompt_dataset)->required();
    prompt->add_option("--question", prompt_question)->required();
    prompt->add_option("--criterion", prompt_criterion)->required();
    prompt->add_option("--response-id", prompt_rid);
    prompt->add_option("--response-text", prompt_text);
    prompt->add_option("--shots", prompt_shots);
    prompt->add_option("--seed", prompt_seed);
    prompt->callback([&]() {
        exit_code = cmd_prompt(prompt_dataset, prompt_question, prompt_criterion, prompt_rid,
                               prompt_text, prompt_shots, prompt_seed);
    });

    // grade-llm
    std::string grade_config, grade_out;
    std::vector<std::string> grade_questions;
    int grade_shots = 0;
    auto* grade = app.add_subcommand("grade-llm", "Grade with the few-shot LLM harness");
    grade->add_option("--config", grade_config)->required();
    grade->add_option("--question", grade_questions);
    grade->add_option("--shots", grade_shots);
    grade->add_option("--out", grade_out);
    grade->callback([&]() {
        exit_code = cmd_grade_llm(argv, grade_config, grade_questions, grade_shots, grade_out);
    });

    // sweep-shots
    std::string sweep_config, sweep_shots_csv, sweep_out;
    std::vector<std::string> sweep_questions;
    auto* sweep = app.add_subcommand("sweep-shots", "Shot-count sweep over the LLM harness");
    sweep->add_option("--config", sweep_config)->required();
    sweep->add_option("--question", sweep_questions);
    sweep->add_option("--shots", sweep_shots_csv)->required();
    sweep->add_option("--out", sweep_out);
    sweep->callback([&]() {
        exit_code = cmd_sweep(argv, sweep_config, sweep_questions, sweep_shots_csv, sweep_out);
    });

    // synth
    std::string synth_dataset, synth_question, synth_profile, synth_out;
    int synth_n = 100;
    std::uint64_t synth_seed = 0;
    auto* synth = app.add_subcommand("synth", "Synthesize oracle-labeled responses");
    synth->add_option("--dataset", synth_dataset)->required();
    synth->add_option("--question", synth_question)->required();
    synth->add_option("--n", synth_n)->required();
    synth->add_option("--seed", synth_seed);
    synth->add_option("--profile", synth_profile);
    synth->add_option("--out", synth_out);
    synth->callback([&]() {
        exit_code = cmd_synth(argv, synth_dataset, synth_question, synth_n, synth_seed,
                              synth_profile, synth_out);
    });

    // agreement
    std::string agr_primary, agr_secondary;
    auto* agreement = app.add_subcommand("agreement", "Inter-annotator agreement");
    agreement->add_option("dataset", agr_primary)->required();
    agreement->add_option("second", agr_secondary)->required();
    agreement->callback([&]() { exit_code = cmd_agreement(agr_primary, agr_secondary); });

    // compare
    std::string cmp_a, cmp_b;
    auto* compare = app.add_subcommand("compare", "Per-cell report deltas");
    compare->add_option("runA", cmp_a)->required();
    compare->add_option("runB", cmp_b)->required();
    compare->callback([&]() { exit_code = cmd_compare(cmp_a, cmp_b); });

    // replay
    std::string replay_run, replay_out;
    auto* replay = app.add_subcommand("replay", "Re-execute a run from its manifest");
    replay->add_option("run", replay_run)->required();
    replay->add_option("--out", replay_out);
    replay->callback([&]() { exit_code = cmd_replay(replay_run, replay_out); });

    try {
        // CLI11's vector overload consumes a reversed argument list.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return exit_code;
}

}  // namespace ste::cli
