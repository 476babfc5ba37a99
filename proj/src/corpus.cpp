#include "ste/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "ste/errors.hpp"
#include "ste/rng.hpp"
#include <nlohmann/json.hpp>

namespace ste {

using nlohmann::json;
using nlohmann::ordered_json;

ScoreLabel label_from_int(int v) {
    if (v < 0 || v > 2) throw SchemaError("score label must be 0, 1 or 2, got " + std::to_string(v));
    return static_cast<ScoreLabel>(v);
}

Category category_from_string(const std::string& s) {
    if (s == "E") return Category::E;
    if (s == "O") return Category::O;
    if (s == "G") return Category::G;
    throw SchemaError("category must be one of E, O, G, got \"" + s + "\"");
}

const char* order_relation_name(OrderRelation r) {
    switch (r) {
        case OrderRelation::immediately_before: return "immediately_before";
        case OrderRelation::immediately_after: return "immediately_after";
        case OrderRelation::anywhere_before: return "anywhere_before";
        case OrderRelation::anywhere_after: return "anywhere_after";
    }
    return "?";
}

std::optional<OrderRelation> order_relation_from_name(const std::string& name) {
    if (name == "immediately_before") return OrderRelation::immediately_before;
    if (name == "immediately_after") return OrderRelation::immediately_after;
    if (name == "anywhere_before") return OrderRelation::anywhere_before;
    if (name == "anywhere_after") return OrderRelation::anywhere_after;
    return std::nullopt;
}

const AnalyticCriterion* Rubric::find(const std::string& id) const {
    for (const auto& c : criteria)
        if (c.id == id) return &c;
    return nullptr;
}

const Question* Dataset::question_by_id(const std::string& id) const {
    for (const auto& q : questions)
        if (q.id == id) return &q;
    return nullptr;
}

std::vector<const Response*> Dataset::responses_for(const std::string& question_id) const {
    std::vector<const Response*> out;
    for (const auto& r : responses)
        if (r.question_id == question_id) out.push_back(&r);
    return out;
}

// --- JSON helpers ----------------------------------------------------------

namespace {

const json& req(const json& obj, const char* key, const std::string& ctx) {
    if (!obj.is_object())
        throw SchemaError(ctx + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end())
        throw SchemaError(ctx + ": missing required field \"" + key + "\"");
    return *it;
}

std::string req_str(const json& obj, const char* key, const std::string& ctx) {
    const json& v = req(obj, key, ctx);
    if (!v.is_string())
        throw SchemaError(ctx + ": field \"" + key + "\" must be a string");
    return v.get<std::string>();
}

int req_int(const json& obj, const char* key, const std::string& ctx) {
    const json& v = req(obj, key, ctx);
    if (!v.is_number_integer())
        throw SchemaError(ctx + ": field \"" + key + "\" must be an integer");
    return v.get<int>();
}

bool req_bool(const json& obj, const char* key, const std::string& ctx) {
    const json& v = req(obj, key, ctx);
    if (!v.is_boolean())
        throw SchemaError(ctx + ": field \"" + key + "\" must be a boolean");
    return v.get<bool>();
}

std::vector<TokenSeq> parse_token_seqs(const json& v, const std::string& ctx) {
    if (!v.is_array()) throw SchemaError(ctx + ": expected an array of token sequences");
    std::vector<TokenSeq> out;
    for (const auto& seq : v) {
        if (!seq.is_array()) throw SchemaError(ctx + ": each alternative must be an array of tokens");
        TokenSeq tokens;
        for (const auto& t : seq) {
            if (!t.is_string()) throw SchemaError(ctx + ": tokens must be strings");
            tokens.push_back(t.get<std::string>());
        }
        out.push_back(std::move(tokens));
    }
    return out;
}

std::vector<TokenSeq> opt_token_seqs(const json& obj, const char* key, const std::string& ctx) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    return parse_token_seqs(*it, ctx + "." + key);
}

TokenPattern parse_pattern(const json& v, const std::string& ctx) {
    TokenPattern p;
    if (!v.is_object()) throw SchemaError(ctx + ": pattern must be an object");
    if (v.contains("chunk")) {
        if (!v["chunk"].is_number_integer())
            throw SchemaError(ctx + ": \"chunk\" must be an integer");
        p.chunk = v["chunk"].get<int>();
    } else if (v.contains("tokens")) {
        p.alternatives = parse_token_seqs(v["tokens"], ctx + ".tokens");
    } else {
        throw SchemaError(ctx + ": pattern needs \"tokens\" or \"chunk\"");
    }
    return p;
}

RubricRule parse_rule(const json& v, const std::string& ctx) {
    const std::string type = req_str(v, "type", ctx);
    if (type == "expression") {
        ExpressionRule r;
        r.correct_alternatives = parse_token_seqs(req(v, "correct", ctx), ctx + ".correct");
        r.partial_alternatives = opt_token_seqs(v, "partial", ctx);
        r.incorrect_markers = opt_token_seqs(v, "incorrect_markers", ctx);
        r.inject_incorrect = opt_token_seqs(v, "inject_incorrect", ctx);
        r.inject_partial = opt_token_seqs(v, "inject_partial", ctx);
        return r;
    }
    if (type == "order") {
        OrderRule r;
        r.anchor = parse_pattern(req(v, "anchor", ctx), ctx + ".anchor");
        r.subject = parse_pattern(req(v, "subject", ctx), ctx + ".subject");
        const std::string rel = req_str(v, "relation", ctx);
        auto parsed = order_relation_from_name(rel);
        if (!parsed) throw SchemaError(ctx + ": unknown relation \"" + rel + "\"");
        r.relation = *parsed;
        return r;
    }
    if (type == "grammar") {
        GrammarRule r;
        const json& required = req(v, "required", ctx);
        if (!required.is_array()) throw SchemaError(ctx + ".required: must be an array of tokens");
        for (const auto& t : required) {
            if (!t.is_string()) throw SchemaError(ctx + ".required: tokens must be strings");
            r.required_form.push_back(t.get<std::string>());
        }
        r.forbidden_forms = opt_token_seqs(v, "forbidden", ctx);
        r.inject_incorrect = opt_token_seqs(v, "inject_incorrect", ctx);
        return r;
    }
    throw SchemaError(ctx + ": unknown machine_rule type \"" + type + "\"");
}

ordered_json token_seqs_to_json(const std::vector<TokenSeq>& seqs) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : seqs) arr.push_back(s);
    return arr;
}

ordered_json pattern_to_json(const TokenPattern& p) {
    ordered_json o;
    if (p.chunk)
        o["chunk"] = *p.chunk;
    else
        o["tokens"] = token_seqs_to_json(p.alternatives);
    return o;
}

ordered_json rule_to_json(const RubricRule& rule) {
    ordered_json o;
    if (const auto* e = std::get_if<ExpressionRule>(&rule)) {
        o["type"] = "expression";
        o["correct"] = token_seqs_to_json(e->correct_alternatives);
        if (!e->partial_alternatives.empty()) o["partial"] = token_seqs_to_json(e->partial_alternatives);
        if (!e->incorrect_markers.empty()) o["incorrect_markers"] = token_seqs_to_json(e->incorrect_markers);
        if (!e->inject_incorrect.empty()) o["inject_incorrect"] = token_seqs_to_json(e->inject_incorrect);
        if (!e->inject_partial.empty()) o["inject_partial"] = token_seqs_to_json(e->inject_partial);
    } else if (const auto* w = std::get_if<OrderRule>(&rule)) {
        o["type"] = "order";
        o["anchor"] = pattern_to_json(w->anchor);
        o["relation"] = order_relation_name(w->relation);
        o["subject"] = pattern_to_json(w->subject);
    } else if (const auto* g = std::get_if<GrammarRule>(&rule)) {
        o["type"] = "grammar";
        o["required"] = g->required_form;
        if (!g->forbidden_forms.empty()) o["forbidden"] = token_seqs_to_json(g->forbidden_forms);
        if (!g->inject_incorrect.empty()) o["inject_incorrect"] = token_seqs_to_json(g->inject_incorrect);
    }
    return o;
}

Question parse_question(const json& q, std::size_t index) {
    const std::string ctx = "questions[" + std::to_string(index) + "]";
    Question out;
    out.id = req_str(q, "id", ctx);
    out.l1_text = req_str(q, "l1_text", ctx);
    out.reference_answer = req_str(q, "reference_answer", ctx);

    const json& chunks = req(q, "chunks", ctx);
    if (!chunks.is_array()) throw SchemaError(ctx + ".chunks: must be an array");
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        const std::string cctx = ctx + ".chunks[" + std::to_string(i) + "]";
        Chunk c;
        c.index = req_int(chunks[i], "index", cctx);
        c.l1_text = req_str(chunks[i], "l1_text", cctx);
        c.gloss = req_str(chunks[i], "gloss", cctx);
        out.chunks.push_back(std::move(c));
    }

    const json& criteria = req(q, "criteria", ctx);
    if (!criteria.is_array()) throw SchemaError(ctx + ".criteria: must be an array");
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const std::string cctx = ctx + ".criteria[" + std::to_string(i) + "]";
        const json& cj = criteria[i];
        AnalyticCriterion c;
        c.id = req_str(cj, "id", cctx);
        c.chunk_index = req_int(cj, "chunk_index", cctx);
        c.category = category_from_string(req_str(cj, "category", cctx));
        c.allows_partial = req_bool(cj, "allows_partial", cctx);
        const json& ld = req(cj, "label_descriptions", cctx);
        if (!ld.is_object()) throw SchemaError(cctx + ".label_descriptions: must be an object");
        for (auto it = ld.begin(); it != ld.end(); ++it) {
            if (it.key() != "0" && it.key() != "1" && it.key() != "2")
                throw SchemaError(cctx + ".label_descriptions: unknown label key \"" + it.key() + "\"");
            if (!it.value().is_string())
                throw SchemaError(cctx + ".label_descriptions: values must be strings");
            c.label_descriptions[std::stoi(it.key())] = it.value().get<std::string>();
        }
        if (cj.contains("machine_rule"))
            c.machine_rule = parse_rule(cj["machine_rule"], cctx + ".machine_rule");
        out.rubric.criteria.push_back(std::move(c));
    }
    return out;
}

Response parse_response(const json& r, std::size_t index) {
    const std::string ctx = "responses[" + std::to_string(index) + "]";
    Response out;
    out.id = req_str(r, "id", ctx);
    out.question_id = req_str(r, "question_id", ctx);
    out.text = req_str(r, "text", ctx);
    auto it = r.find("annotations");
    if (it != r.end()) {
        if (!it->is_object()) throw SchemaError(ctx + ".annotations: must be an object");
        for (auto a = it->begin(); a != it->end(); ++a) {
            const std::string actx = ctx + ".annotations[\"" + a.key() + "\"]";
            const json& aj = a.value();
            Annotation ann;
            ann.score = label_from_int(req_int(aj, "score", actx));
            ann.annotator_id = req_str(aj, "annotator_id", actx);
            if (aj.contains("cue")) {
                const json& cj = aj["cue"];
                CueSpan span;
                span.start_char = req_int(cj, "start", actx + ".cue");
                span.end_char = req_int(cj, "end", actx + ".cue");
                ann.cue = span;
            }
            out.annotations[a.key()] = std::move(ann);
        }
    }
    return out;
}

// Strips separator code points (whitespace, slashes and Japanese
// punctuation) before comparing chunk fragments against the full sentence.
std::u32string strip_separators(const std::string& text) {
    Utf8View view(text);
    std::u32string out;
    for (std::size_t i = 0; i < view.size(); ++i) {
        const char32_t c = view.at(i);
        switch (c) {
            case U' ': case U'\t': case U'\n': case U'\r':
            case U'　': case U'/': case U'・':
            case U'、': case U'。': case U'，': case U'．':
                continue;
            default:
                out.push_back(c);
        }
    }
    return out;
}

}  // namespace

// --- validation -------------------------------------------------------------

std::vector<std::string> validate_dataset(const Dataset& dataset) {
    std::vector<std::string> breaches;
    auto breach = [&](std::string msg) { breaches.push_back(std::move(msg)); };

    std::set<std::string> question_ids;
    for (const auto& q : dataset.questions) {
        if (!question_ids.insert(q.id).second)
            breach("duplicate question id \"" + q.id + "\"");

        const std::string ctx = "question \"" + q.id + "\"";
        if (q.reference_answer.empty()) breach(ctx + ": reference_answer is empty");
        for (std::size_t i = 0; i < q.chunks.size(); ++i) {
            if (q.chunks[i].index != static_cast<int>(i)) {
                breach(ctx + ": chunk indices must be contiguous from 0 (chunk " +
                       std::to_string(i) + " has index " + std::to_string(q.chunks[i].index) + ")");
                break;
            }
        }
        std::string concat;
        for (const auto& c : q.chunks) concat += c.l1_text;
        if (strip_separators(concat) != strip_separators(q.l1_text))
            breach(ctx + ": chunk texts do not concatenate to l1_text");

        if (q.rubric.criteria.empty()) breach(ctx + ": rubric has no criteria");
        std::set<std::string> criterion_ids;
        std::set<int> chunks_with_e;
        for (const auto& c : q.rubric.criteria) {
            const std::string cctx = ctx + ", criterion \"" + c.id + "\"";
            if (!criterion_ids.insert(c.id).second)
                breach(ctx + ": duplicate criterion id \"" + c.id + "\"");
            if (c.chunk_index < 0 || c.chunk_index >= static_cast<int>(q.chunks.size()))
                breach(cctx + ": chunk_index " + std::to_string(c.chunk_index) + " out of range");
            else if (c.category == Category::E)
                chunks_with_e.insert(c.chunk_index);
            if (!c.label_descriptions.count(2) || !c.label_descriptions.count(0))
                breach(cctx + ": label_descriptions must contain entries for 2 and 0");
            if (c.label_descriptions.count(1) != static_cast<std::size_t>(c.allows_partial))
                breach(cctx + ": label_descriptions entry for 1 must be present iff allows_partial");
            if (c.machine_rule) {
                auto check_pattern = [&](const TokenPattern& p, const char* name) {
                    if (p.chunk) {
                        if (*p.chunk < 0 || *p.chunk >= static_cast<int>(q.chunks.size()))
                            breach(cctx + ": machine_rule " + name + " references unknown chunk " +
                                   std::to_string(*p.chunk));
                    } else if (p.alternatives.empty()) {
                        breach(cctx + ": machine_rule " + name + " has no alternatives");
                    }
                };
                if (const auto* e = std::get_if<ExpressionRule>(&*c.machine_rule)) {
                    if (e->correct_alternatives.empty())
                        breach(cctx + ": expression rule needs at least one correct alternative");
                } else if (const auto* w = std::get_if<OrderRule>(&*c.machine_rule)) {
                    check_pattern(w->anchor, "anchor");
                    check_pattern(w->subject, "subject");
                } else if (const auto* g = std::get_if<GrammarRule>(&*c.machine_rule)) {
                    if (g->required_form.empty())
                        breach(cctx + ": grammar rule needs a required form");
                }
            }
        }
        for (const auto& c : q.chunks) {
            if (!chunks_with_e.count(c.index))
                breach(ctx + ": chunk " + std::to_string(c.index) +
                       " has no criterion of category E");
        }
    }

    std::set<std::string> response_ids;
    for (const auto& r : dataset.responses) {
        const std::string ctx = "response \"" + r.id + "\"";
        if (!response_ids.insert(r.id).second)
            breach("duplicate response id \"" + r.id + "\"");
        const Question* q = dataset.question_by_id(r.question_id);
        if (!q) {
            breach(ctx + ": unknown question_id \"" + r.question_id + "\"");
            continue;
        }
        const std::size_t text_len = Utf8View(r.text).size();
        for (const auto& [criterion_id, ann] : r.annotations) {
            const AnalyticCriterion* c = q->rubric.find(criterion_id);
            if (!c) {
                breach(ctx + ": annotation references unknown criterion \"" + criterion_id + "\"");
                continue;
            }
            if (ann.score == ScoreLabel::partial && !c->allows_partial)
                breach(ctx + ": score 1 on criterion \"" + criterion_id +
                       "\" which does not allow partial credit");
            if (ann.cue) {
                if (ann.cue->start_char < 0 || ann.cue->start_char >= ann.cue->end_char ||
                    ann.cue->end_char > static_cast<int>(text_len))
                    breach(ctx + ": cue span [" + std::to_string(ann.cue->start_char) + ", " +
                           std::to_string(ann.cue->end_char) + ") out of bounds for criterion \"" +
                           criterion_id + "\" (text length " + std::to_string(text_len) + ")");
            }
        }
    }
    return breaches;
}

// --- load/save ---------------------------------------------------------------

Dataset parse_dataset(const std::string& json_text, std::vector<std::string>* warnings) {
    // Duplicate keys inside one object are surplus entries; JSON parsing
    // keeps the last. Detect them with a parser callback so the load can
    // warn instead of silently dropping.
    std::vector<std::set<std::string>> key_stack;
    json::parser_callback_t cb = [&](int /*depth*/, json::parse_event_t event, json& parsed) {
        switch (event) {
            case json::parse_event_t::object_start:
                key_stack.emplace_back();
                break;
            case json::parse_event_t::object_end:
                key_stack.pop_back();
                break;
            case json::parse_event_t::key: {
                const std::string key = parsed.get<std::string>();
                if (!key_stack.empty() && !key_stack.back().insert(key).second && warnings)
                    warnings->push_back("surplus entry: duplicate key \"" + key +
                                        "\" in one object; keeping the last");
                break;
            }
            default:
                break;
        }
        return true;
    };

    json doc;
    try {
        doc = json::parse(json_text, cb);
    } catch (const json::parse_error& e) {
        std::size_t line = 1;
        const std::size_t limit = std::min(json_text.size(), e.byte);
        for (std::size_t i = 0; i < limit; ++i)
            if (json_text[i] == '\n') ++line;
        throw SchemaError("JSON parse error at line " + std::to_string(line) + ": " + e.what());
    }

    Dataset dataset;
    const json& questions = req(doc, "questions", "document");
    if (!questions.is_array()) throw SchemaError("\"questions\" must be an array");
    for (std::size_t i = 0; i < questions.size(); ++i)
        dataset.questions.push_back(parse_question(questions[i], i));

    const json& responses = req(doc, "responses", "document");
    if (!responses.is_array()) throw SchemaError("\"responses\" must be an array");
    for (std::size_t i = 0; i < responses.size(); ++i)
        dataset.responses.push_back(parse_response(responses[i], i));

    auto breaches = validate_dataset(dataset);
    if (!breaches.empty()) throw ValidationError(std::move(breaches));
    return dataset;
}

Dataset load_dataset(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open dataset file \"" + path + "\"");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_dataset(buffer.str(), warnings);
}

std::string serialize_dataset(const Dataset& dataset) {
    ordered_json doc;
    doc["questions"] = ordered_json::array();
    for (const auto& q : dataset.questions) {
        ordered_json qj;
        qj["id"] = q.id;
        qj["l1_text"] = q.l1_text;
        qj["chunks"] = ordered_json::array();
        for (const auto& c : q.chunks) {
            ordered_json cj;
            cj["index"] = c.index;
            cj["l1_text"] = c.l1_text;
            cj["gloss"] = c.gloss;
            qj["chunks"].push_back(std::move(cj));
        }
        qj["reference_answer"] = q.reference_answer;
        qj["criteria"] = ordered_json::array();
        for (const auto& c : q.rubric.criteria) {
            ordered_json cj;
            cj["id"] = c.id;
            cj["chunk_index"] = c.chunk_index;
            cj["category"] = std::string(1, static_cast<char>(c.category));
            cj["allows_partial"] = c.allows_partial;
            ordered_json ld;
            for (const int label : {2, 1, 0}) {
                auto it = c.label_descriptions.find(label);
                if (it != c.label_descriptions.end()) ld[std::to_string(label)] = it->second;
            }
            cj["label_descriptions"] = std::move(ld);
            if (c.machine_rule) cj["machine_rule"] = rule_to_json(*c.machine_rule);
            qj["criteria"].push_back(std::move(cj));
        }
        doc["questions"].push_back(std::move(qj));
    }
    doc["responses"] = ordered_json::array();
    for (const auto& r : dataset.responses) {
        ordered_json rj;
        rj["id"] = r.id;
        rj["question_id"] = r.question_id;
        rj["text"] = r.text;
        ordered_json anns = ordered_json::object();
        for (const auto& [cid, ann] : r.annotations) {
            ordered_json aj;
            aj["score"] = label_value(ann.score);
            if (ann.cue) {
                aj["cue"] = ordered_json{{"start", ann.cue->start_char}, {"end", ann.cue->end_char}};
            }
            aj["annotator_id"] = ann.annotator_id;
            anns[cid] = std::move(aj);
        }
        rj["annotations"] = std::move(anns);
        doc["responses"].push_back(std::move(rj));
    }
    return doc.dump(2) + "\n";
}

void save_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file \"" + path + "\"");
    out << serialize_dataset(dataset);
}

// --- statistics ---------------------------------------------------------------

std::vector<QuestionStats> dataset_stats(const Dataset& dataset) {
    std::vector<QuestionStats> out;
    for (const auto& q : dataset.questions) {
        QuestionStats s;
        s.question_id = q.id;
        s.num_criteria = q.rubric.criteria.size();
        std::set<std::string> distinct;
        for (const auto& r : dataset.responses) {
            if (r.question_id != q.id) continue;
            ++s.num_responses;
            distinct.insert(r.text);
            for (const auto& [cid, ann] : r.annotations)
                ++s.label_counts[label_value(ann.score)];
        }
        s.num_distinct = distinct.size();
        out.push_back(std::move(s));
    }
    return out;
}

// --- folds ---------------------------------------------------------------------

FoldAssignment make_folds(const Question& question,
                          const std::vector<Response>& responses, int k,
                          std::uint64_t seed, bool allow_duplicate_leakage) {
    if (k < 1) throw std::invalid_argument("make_folds: k must be positive");
    std::vector<const Response*> rs;
    for (const auto& r : responses) {
        if (r.question_id != question.id)
            throw std::invalid_argument("make_folds: response \"" + r.id +
                                        "\" does not belong to question \"" + question.id + "\"");
        rs.push_back(&r);
    }
    const std::size_t n = rs.size();
    if (n < static_cast<std::size_t>(k))
        throw std::invalid_argument("make_folds: need at least " + std::to_string(k) +
                                    " responses, got " + std::to_string(n));

    // Groups of response ids that must share a split. With duplicate
    // grouping enabled, identical texts form one group.
    std::vector<std::vector<std::string>> groups;
    if (allow_duplicate_leakage) {
        for (const auto* r : rs) groups.push_back({r->id});
    } else {
        std::map<std::string, std::vector<std::string>> by_text;
        for (const auto* r : rs) by_text[r->text].push_back(r->id);
        for (auto& [text, ids] : by_text) groups.push_back(std::move(ids));
    }

    Rng rng(mix_seed(seed, "fold-groups"));
    rng.shuffle(groups);

    // Assign groups to k test blocks, always to the currently smallest
    // block; with unique texts this yields sizes floor(n/k) with the
    // remainder spread one per block.
    std::vector<std::vector<std::size_t>> block_members(k);
    std::vector<std::size_t> block_sizes(k, 0);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::size_t best = 0;
        for (std::size_t b = 1; b < static_cast<std::size_t>(k); ++b)
            if (block_sizes[b] < block_sizes[best]) best = b;
        block_members[best].push_back(g);
        block_sizes[best] += groups[g].size();
    }

    const std::size_t dev_target = n / 5;
    FoldAssignment assignment;
    for (int fold = 0; fold < k; ++fold) {
        FoldSplit split;
        std::vector<std::size_t> remaining;
        for (std::size_t g = 0; g < groups.size(); ++g) remaining.push_back(g);
        for (const std::size_t g : block_members[fold]) {
            remaining.erase(std::find(remaining.begin(), remaining.end(), g));
            for (const auto& id : groups[g]) split.test_ids.push_back(id);
        }
        Rng dev_rng(mix_seed(mix_seed(seed, "fold-dev"), static_cast<std::uint64_t>(fold)));
        dev_rng.shuffle(remaining);
        std::size_t dev_count = 0;
        std::size_t cursor = 0;
        while (cursor < remaining.size() && dev_count < dev_target) {
            const std::size_t g = remaining[cursor++];
            for (const auto& id : groups[g]) split.dev_ids.push_back(id);
            dev_count += groups[g].size();
        }
        for (; cursor < remaining.size(); ++cursor)
            for (const auto& id : groups[remaining[cursor]]) split.train_ids.push_back(id);
        assignment.folds.push_back(std::move(split));
    }
    return assignment;
}

// --- criterion filtering --------------------------------------------------------

CriterionFilterResult filter_criteria(const Question& question,
                                      const std::vector<Response>& responses,
                                      double min_incorrect_ratio) {
    CriterionFilterResult result;
    for (const auto& c : question.rubric.criteria) {
        std::size_t present = 0;
        std::size_t incorrect = 0;
        for (const auto& r : responses) {
            if (r.question_id != question.id) continue;
            auto it = r.annotations.find(c.id);
            if (it == r.annotations.end()) continue;
            ++present;
            if (it->second.score == ScoreLabel::incorrect) ++incorrect;
        }
        if (present == 0) {
            result.excluded.emplace_back(c.id, "no annotations");
            continue;
        }
        const double ratio = static_cast<double>(incorrect) / static_cast<double>(present);
        if (ratio >= min_incorrect_ratio) {
            result.kept.push_back(c.id);
        } else {
            std::ostringstream reason;
            reason << "incorrect ratio " << incorrect << "/" << present << " below threshold";
            result.excluded.emplace_back(c.id, reason.str());
        }
    }
    return result;
}

}  // namespace ste
