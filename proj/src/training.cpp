#include "ste/training.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "ste/errors.hpp"
#include "ste/evaluation.hpp"

namespace ste {

namespace fs = std::filesystem;

namespace {

struct PreparedInstance {
    const Response* response = nullptr;
    TokenizedText tokenized;
    Eigen::MatrixXd encoded;            // subtokens x encoder_dim, aggregate excluded
    std::vector<int> subtoken_to_word;
    // Per criterion: gold label and optional subtoken attention target.
    std::map<std::string, ScoreLabel> golds;
    std::map<std::string, std::optional<Eigen::VectorXd>> attention_targets;
};

PreparedInstance prepare_instance(const Response& response, const Encoder& encoder,
                                  const std::vector<std::string>& criterion_ids,
                                  bool attention_supervision) {
    PreparedInstance inst;
    inst.response = &response;
    inst.tokenized = tokenize(response.text);
    EncoderOutput enc = encoder.encode(inst.tokenized);
    // Row 0 is the aggregate position, excluded from the recurrent stack.
    inst.encoded = enc.hidden.bottomRows(enc.hidden.rows() - 1);
    inst.subtoken_to_word = enc.subtoken_to_word;
    for (const auto& cid : criterion_ids) {
        auto it = response.annotations.find(cid);
        if (it == response.annotations.end()) continue;
        inst.golds[cid] = it->second.score;
        std::optional<Eigen::VectorXd> target;
        if (attention_supervision) {
            auto word_target = gold_attention_target(inst.tokenized, it->second.cue);
            if (word_target)
                target = word_target_to_subtokens(*word_target, inst.subtoken_to_word);
        }
        inst.attention_targets[cid] = std::move(target);
    }
    return inst;
}

struct FoldTrainer {
    const TrainingConfig& config;
    std::vector<std::string> criterion_ids;
    BiLstmWeights lstm;
    std::map<std::string, CriterionHeadParams> heads;

    // Adam moments mirror the parameter layout.
    BiLstmGrads lstm_m, lstm_v;
    std::map<std::string, HeadGrads> head_m, head_v;

    FoldTrainer(const TrainingConfig& cfg, std::vector<std::string> ids, Rng& rng)
        : config(cfg), criterion_ids(std::move(ids)) {
        lstm = init_bilstm(cfg.encoder_dim, cfg.recurrent_hidden, rng);
        const int dim = 2 * cfg.recurrent_hidden;
        for (const auto& cid : criterion_ids) heads[cid] = init_head(dim, rng);
        lstm_m = zero_bilstm_grads(lstm);
        lstm_v = zero_bilstm_grads(lstm);
        for (const auto& cid : criterion_ids) {
            head_m[cid] = zero_head_grads(heads[cid]);
            head_v[cid] = zero_head_grads(heads[cid]);
        }
    }

    void train_batch(const std::vector<const PreparedInstance*>& batch, Adam& adam) {
        BiLstmGrads lstm_grads = zero_bilstm_grads(lstm);
        std::map<std::string, HeadGrads> head_grads;
        for (const auto& cid : criterion_ids) head_grads[cid] = zero_head_grads(heads[cid]);

        const double scale = 1.0 / static_cast<double>(batch.size());
        for (const auto* inst : batch) {
            if (inst->tokenized.tokens.empty()) continue;
            BiLstmCache cache;
            const Eigen::MatrixXd Hprime = bilstm_forward(lstm, inst->encoded, &cache);
            Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(Hprime.rows(), Hprime.cols());
            bool any = false;
            for (const auto& [cid, gold] : inst->golds) {
                const HeadCache head_cache = forward_head(heads[cid], Hprime);
                HeadGrads local = zero_head_grads(heads[cid]);
                dH += backward_head(heads[cid], Hprime, head_cache, gold,
                                    inst->attention_targets.at(cid), local);
                accumulate(head_grads[cid], local, scale);
                any = true;
            }
            if (!any) continue;
            BiLstmGrads local = zero_bilstm_grads(lstm);
            bilstm_backward(lstm, cache, dH, local);
            accumulate(lstm_grads, local, scale);
        }

        adam.begin_step();
        auto update_dir = [&](LstmDirWeights& w, const LstmDirWeights& g, LstmDirWeights& m,
                              LstmDirWeights& v) {
            adam.update(w.Wx, g.Wx, m.Wx, v.Wx);
            adam.update(w.Wh, g.Wh, m.Wh, v.Wh);
            adam.update(w.b, g.b, m.b, v.b);
        };
        update_dir(lstm.fwd, lstm_grads.fwd, lstm_m.fwd, lstm_v.fwd);
        update_dir(lstm.bwd, lstm_grads.bwd, lstm_m.bwd, lstm_v.bwd);
        for (const auto& cid : criterion_ids) {
            CriterionHeadParams& h = heads[cid];
            const HeadGrads& g = head_grads[cid];
            HeadGrads& m = head_m[cid];
            HeadGrads& v = head_v[cid];
            adam.update(h.M, g.dM, m.dM, v.dM);
            adam.update(h.V, g.dV, m.dV, v.dV);
            adam.update(h.W, g.dW, m.dW, v.dW);
            adam.update(h.b, g.db, m.db, v.db);
        }
    }

    // Per-criterion macro-F1 of the current parameters on the dev set.
    std::map<std::string, double> evaluate_dev(const std::vector<PreparedInstance>& dev) {
        std::map<std::string, std::vector<ScoreLabel>> golds, preds;
        for (const auto& inst : dev) {
            if (inst.tokenized.tokens.empty()) continue;
            const Eigen::MatrixXd Hprime = bilstm_forward(lstm, inst.encoded);
            for (const auto& [cid, gold] : inst.golds) {
                const HeadCache cache = forward_head(heads.at(cid), Hprime);
                golds[cid].push_back(gold);
                preds[cid].push_back(predicted_label(cache.probs));
            }
        }
        std::map<std::string, double> f1;
        for (const auto& cid : criterion_ids) {
            auto it = golds.find(cid);
            f1[cid] = it == golds.end() ? 0.0 : macro_f1(per_criterion_f1(it->second, preds[cid]));
        }
        return f1;
    }
};

FoldModel train_fold(const std::vector<const Response*>& train,
                     const std::vector<const Response*>& dev,
                     const std::vector<std::string>& criterion_ids,
                     const TrainingConfig& config, const Encoder& encoder,
                     std::uint64_t fold_seed) {
    std::vector<PreparedInstance> train_set, dev_set;
    for (const auto* r : train)
        train_set.push_back(prepare_instance(*r, encoder, criterion_ids,
                                             config.attention_supervision));
    for (const auto* r : dev)
        dev_set.push_back(prepare_instance(*r, encoder, criterion_ids, false));

    Rng init_rng(mix_seed(fold_seed, "init"));
    FoldTrainer trainer(config, criterion_ids, init_rng);
    Adam adam(config.learning_rate);

    FoldModel fold_model;
    for (const auto& cid : criterion_ids) {
        CriterionSnapshot snap;
        snap.best_dev_f1 = -1.0;
        std::set<int> labels;
        for (const auto& inst : train_set) {
            auto it = inst.golds.find(cid);
            if (it != inst.golds.end()) labels.insert(label_value(it->second));
        }
        snap.degenerate = labels.size() <= 1;
        fold_model.criteria[cid] = std::move(snap);
    }

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng epoch_rng(mix_seed(fold_seed, static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(order);

        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::vector<const PreparedInstance*> batch;
            const std::size_t end =
                std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
            trainer.train_batch(batch, adam);
        }

        const auto dev_f1 = trainer.evaluate_dev(dev_set);
        std::shared_ptr<const BiLstmWeights> lstm_snapshot;
        for (const auto& cid : criterion_ids) {
            CriterionSnapshot& snap = fold_model.criteria[cid];
            const double f1 = dev_f1.at(cid);
            snap.dev_f1.push_back(f1);
            if (f1 > snap.best_dev_f1) {
                snap.best_dev_f1 = f1;
                snap.best_epoch = epoch;
                snap.head = trainer.heads[cid];
                if (!lstm_snapshot)
                    lstm_snapshot = std::make_shared<const BiLstmWeights>(trainer.lstm);
                snap.lstm = lstm_snapshot;
            }
        }
    }
    return fold_model;
}

}  // namespace

int select_best_epoch(const std::vector<double>& dev_f1_history) {
    if (dev_f1_history.empty()) return 0;
    std::size_t best = 0;
    for (std::size_t i = 1; i < dev_f1_history.size(); ++i)
        if (dev_f1_history[i] > dev_f1_history[best]) best = i;
    return static_cast<int>(best) + 1;
}

TrainedModel train_question_model(const Question& question,
                                  const std::vector<Response>& responses,
                                  const FoldAssignment& folds,
                                  const std::vector<std::string>& criterion_ids,
                                  const TrainingConfig& config,
                                  std::shared_ptr<const Encoder> encoder) {
    for (const auto& cid : criterion_ids)
        if (!question.rubric.find(cid))
            throw std::invalid_argument("unknown criterion \"" + cid + "\"");

    TrainedModel model;
    model.question_id = question.id;
    model.config = config;
    model.criterion_ids = criterion_ids;
    model.encoder = encoder ? std::move(encoder)
                            : std::make_shared<ToyEncoder>(config.encoder_dim,
                                                           mix_seed(config.seed, "toy-encoder"));
    if (model.encoder->dim() != config.encoder_dim)
        throw std::invalid_argument("encoder width does not match config.encoder_dim");

    std::map<std::string, const Response*> by_id;
    for (const auto& r : responses) by_id[r.id] = &r;
    auto resolve = [&](const std::vector<std::string>& ids) {
        std::vector<const Response*> out;
        for (const auto& id : ids) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw std::invalid_argument("fold references unknown response \"" + id + "\"");
            out.push_back(it->second);
        }
        return out;
    };

    for (std::size_t fold = 0; fold < folds.folds.size(); ++fold) {
        const auto train = resolve(folds.folds[fold].train_ids);
        const auto dev = resolve(folds.folds[fold].dev_ids);
        const std::uint64_t fold_seed = mix_seed(config.seed, static_cast<std::uint64_t>(fold));

        if (config.per_criterion_models) {
            // Alternative reading: an isolated model per scoring item.
            FoldModel merged;
            for (const auto& cid : criterion_ids) {
                FoldModel one = train_fold(train, dev, {cid}, config, *model.encoder,
                                           mix_seed(fold_seed, cid));
                merged.criteria[cid] = std::move(one.criteria.at(cid));
            }
            model.folds.push_back(std::move(merged));
        } else {
            model.folds.push_back(train_fold(train, dev, criterion_ids, config,
                                             *model.encoder, fold_seed));
        }
    }
    return model;
}

namespace {

PredictionRecord record_from_head(const std::string& criterion_id, const HeadCache& cache,
                                  const std::vector<int>& subtoken_to_word,
                                  const TokenizedText& tokenized) {
    PredictionRecord rec;
    rec.criterion_id = criterion_id;
    rec.probabilities = cache.probs;
    rec.predicted = predicted_label(cache.probs);
    rec.attention =
        subtoken_attention_to_words(cache.alpha, subtoken_to_word, tokenized.tokens.size());
    rec.extracted_cue = extract_cue(rec.attention, tokenized);
    return rec;
}

}  // namespace

PredictionRecord forward_criterion(const Encoder& encoder, const BiLstmWeights& lstm,
                                   const CriterionHeadParams& head,
                                   const std::string& criterion_id,
                                   const std::string& response_text) {
    const TokenizedText tokenized = tokenize(response_text);
    if (tokenized.tokens.empty())
        throw std::invalid_argument("forward_criterion: response has no tokens");
    EncoderOutput enc = encoder.encode(tokenized);
    const Eigen::MatrixXd X = enc.hidden.bottomRows(enc.hidden.rows() - 1);
    const Eigen::MatrixXd Hprime = bilstm_forward(lstm, X);
    const HeadCache cache = forward_head(head, Hprime);
    return record_from_head(criterion_id, cache, enc.subtoken_to_word, tokenized);
}

std::vector<PredictionRecord> predict_response(const TrainedModel& model, int fold,
                                               const std::string& response_text) {
    const FoldModel& fm = model.folds.at(static_cast<std::size_t>(fold));
    const TokenizedText tokenized = tokenize(response_text);
    if (tokenized.tokens.empty())
        throw std::invalid_argument("predict_response: response has no tokens");
    EncoderOutput enc = model.encoder->encode(tokenized);
    const Eigen::MatrixXd X = enc.hidden.bottomRows(enc.hidden.rows() - 1);

    // Criteria sharing a recurrent snapshot share its forward pass.
    std::map<const BiLstmWeights*, Eigen::MatrixXd> hprime_by_lstm;
    std::vector<PredictionRecord> records;
    for (const auto& cid : model.criterion_ids) {
        const CriterionSnapshot& snap = fm.criteria.at(cid);
        auto it = hprime_by_lstm.find(snap.lstm.get());
        if (it == hprime_by_lstm.end())
            it = hprime_by_lstm.emplace(snap.lstm.get(), bilstm_forward(*snap.lstm, X)).first;
        const HeadCache cache = forward_head(snap.head, it->second);
        records.push_back(record_from_head(cid, cache, enc.subtoken_to_word, tokenized));
    }
    return records;
}

std::vector<TestPrediction> evaluate_on_tests(const TrainedModel& model,
                                              const Question& question,
                                              const std::vector<Response>& responses,
                                              const FoldAssignment& folds) {
    std::map<std::string, const Response*> by_id;
    for (const auto& r : responses) by_id[r.id] = &r;

    std::vector<TestPrediction> out;
    for (std::size_t fold = 0; fold < folds.folds.size(); ++fold) {
        for (const auto& rid : folds.folds[fold].test_ids) {
            const Response* r = by_id.at(rid);
            const auto records = predict_response(model, static_cast<int>(fold), r->text);
            for (const auto& rec : records) {
                auto it = r->annotations.find(rec.criterion_id);
                if (it == r->annotations.end()) continue;
                TestPrediction p;
                p.response_id = rid;
                p.fold = static_cast<int>(fold);
                p.criterion_id = rec.criterion_id;
                p.gold = it->second.score;
                p.pred = rec.predicted;
                p.predicted_cue = rec.extracted_cue;
                p.gold_cue = it->second.cue;
                p.attention = rec.attention;
                out.push_back(std::move(p));
            }
        }
    }
    return out;
}

double attention_mass_on_cue(const std::vector<double>& attention,
                             const TokenizedText& tokenized, const CueSpan& cue) {
    double mass = 0.0;
    for (const std::size_t t : tokens_overlapping(tokenized, cue)) mass += attention[t];
    return mass;
}

nlohmann::ordered_json training_manifest(const TrainedModel& model) {
    nlohmann::ordered_json doc;
    doc["question"] = model.question_id;
    doc["config"] = {
        {"epochs", model.config.epochs},
        {"learning_rate", model.config.learning_rate},
        {"recurrent_hidden", model.config.recurrent_hidden},
        {"batch_size", model.config.batch_size},
        {"encoder_dim", model.config.encoder_dim},
        {"seed", model.config.seed},
        {"attention_supervision", model.config.attention_supervision},
        {"per_criterion_models", model.config.per_criterion_models},
    };
    doc["criteria"] = model.criterion_ids;
    doc["folds"] = nlohmann::ordered_json::array();
    for (std::size_t fold = 0; fold < model.folds.size(); ++fold) {
        nlohmann::ordered_json fj;
        fj["fold"] = fold;
        fj["criteria"] = nlohmann::ordered_json::array();
        for (const auto& cid : model.criterion_ids) {
            const CriterionSnapshot& snap = model.folds[fold].criteria.at(cid);
            nlohmann::ordered_json cj;
            cj["id"] = cid;
            cj["best_epoch"] = snap.best_epoch;
            cj["best_dev_f1"] = snap.best_dev_f1;
            cj["dev_f1"] = snap.dev_f1;
            cj["degenerate"] = snap.degenerate;
            fj["criteria"].push_back(std::move(cj));
        }
        doc["folds"].push_back(std::move(fj));
    }
    return doc;
}

// --- checkpoints ----------------------------------------------------------

namespace {

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
    const std::int32_t rows = static_cast<std::int32_t>(m.rows());
    const std::int32_t cols = static_cast<std::int32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
    for (std::int32_t r = 0; r < rows; ++r)
        for (std::int32_t c = 0; c < cols; ++c) {
            const double v = m(r, c);
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
}

Eigen::MatrixXd read_matrix(std::ifstream& in) {
    std::int32_t rows = 0, cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
    if (!in || rows < 0 || cols < 0) throw std::runtime_error("corrupt checkpoint matrix header");
    Eigen::MatrixXd m(rows, cols);
    for (std::int32_t r = 0; r < rows; ++r)
        for (std::int32_t c = 0; c < cols; ++c) {
            double v = 0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m(r, c) = v;
        }
    if (!in) throw std::runtime_error("corrupt checkpoint matrix data");
    return m;
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
    write_matrix(out, Eigen::MatrixXd(v));
}

Eigen::VectorXd read_vector(std::ifstream& in) { return Eigen::VectorXd(read_matrix(in)); }

constexpr char kHeadMagic[8] = {'S', 'T', 'E', 'H', 'E', 'A', 'D', '1'};
constexpr char kLstmMagic[8] = {'S', 'T', 'E', 'L', 'S', 'T', 'M', '1'};

void save_lstm(const fs::path& path, const BiLstmWeights& w) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kLstmMagic, sizeof(kLstmMagic));
    const std::int32_t input = w.input, hidden = w.hidden;
    out.write(reinterpret_cast<const char*>(&input), sizeof(input));
    out.write(reinterpret_cast<const char*>(&hidden), sizeof(hidden));
    for (const auto* dir : {&w.fwd, &w.bwd}) {
        write_matrix(out, dir->Wx);
        write_matrix(out, dir->Wh);
        write_vector(out, dir->b);
    }
}

BiLstmWeights load_lstm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (std::memcmp(magic, kLstmMagic, sizeof(magic)) != 0)
        throw std::runtime_error("bad recurrent checkpoint magic in " + path.string());
    BiLstmWeights w;
    std::int32_t input = 0, hidden = 0;
    in.read(reinterpret_cast<char*>(&input), sizeof(input));
    in.read(reinterpret_cast<char*>(&hidden), sizeof(hidden));
    w.input = input;
    w.hidden = hidden;
    for (auto* dir : {&w.fwd, &w.bwd}) {
        dir->Wx = read_matrix(in);
        dir->Wh = read_matrix(in);
        dir->b = read_vector(in);
    }
    return w;
}

}  // namespace

void save_checkpoints(const TrainedModel& model, const std::string& run_dir) {
    const fs::path base = fs::path(run_dir) / model.question_id;
    for (std::size_t fold = 0; fold < model.folds.size(); ++fold) {
        const fs::path fold_dir = base / ("fold" + std::to_string(fold));
        fs::create_directories(fold_dir);
        // One recurrent snapshot file per distinct best epoch.
        std::set<int> epochs;
        for (const auto& [cid, snap] : model.folds[fold].criteria) {
            if (epochs.insert(snap.best_epoch).second)
                save_lstm(fold_dir / ("lstm-epoch" + std::to_string(snap.best_epoch) + ".ckpt"),
                          *snap.lstm);
        }
        for (const auto& cid : model.criterion_ids) {
            const CriterionSnapshot& snap = model.folds[fold].criteria.at(cid);
            const fs::path cdir = fold_dir / cid;
            fs::create_directories(cdir);
            std::ofstream out(cdir / "best.ckpt", std::ios::binary);
            if (!out) throw std::runtime_error("cannot write checkpoint for " + cid);
            out.write(kHeadMagic, sizeof(kHeadMagic));
            const std::int32_t epoch = snap.best_epoch;
            out.write(reinterpret_cast<const char*>(&epoch), sizeof(epoch));
            write_matrix(out, snap.head.M);
            write_vector(out, snap.head.V);
            write_matrix(out, snap.head.W);
            write_vector(out, snap.head.b);
        }
    }
}

TrainedModel load_checkpoints(const std::string& run_dir, const std::string& question_id) {
    const fs::path base = fs::path(run_dir) / question_id;
    if (!fs::exists(base)) throw std::runtime_error("no checkpoints under " + base.string());

    TrainedModel model;
    model.question_id = question_id;
    for (int fold = 0;; ++fold) {
        const fs::path fold_dir = base / ("fold" + std::to_string(fold));
        if (!fs::exists(fold_dir)) break;
        FoldModel fm;
        std::map<int, std::shared_ptr<const BiLstmWeights>> lstm_by_epoch;
        for (const auto& entry : fs::directory_iterator(fold_dir)) {
            if (!entry.is_directory()) continue;
            const std::string cid = entry.path().filename().string();
            std::ifstream in(entry.path() / "best.ckpt", std::ios::binary);
            if (!in) throw std::runtime_error("missing best.ckpt for " + cid);
            char magic[8];
            in.read(magic, sizeof(magic));
            if (std::memcmp(magic, kHeadMagic, sizeof(magic)) != 0)
                throw std::runtime_error("bad head checkpoint magic for " + cid);
            CriterionSnapshot snap;
            std::int32_t epoch = 0;
            in.read(reinterpret_cast<char*>(&epoch), sizeof(epoch));
            snap.best_epoch = epoch;
            snap.head.M = read_matrix(in);
            snap.head.V = read_vector(in);
            snap.head.W = read_matrix(in);
            snap.head.b = read_vector(in);
            auto lit = lstm_by_epoch.find(epoch);
            if (lit == lstm_by_epoch.end()) {
                auto lstm = std::make_shared<const BiLstmWeights>(load_lstm(
                    fold_dir / ("lstm-epoch" + std::to_string(epoch) + ".ckpt")));
                lit = lstm_by_epoch.emplace(epoch, std::move(lstm)).first;
            }
            snap.lstm = lit->second;
            fm.criteria[cid] = std::move(snap);
        }
        model.folds.push_back(std::move(fm));
    }
    if (!model.folds.empty())
        for (const auto& [cid, snap] : model.folds[0].criteria)
            model.criterion_ids.push_back(cid);
    return model;
}

}  // namespace ste
