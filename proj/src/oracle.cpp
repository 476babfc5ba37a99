#include "ste/oracle.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "ste/errors.hpp"
#include "ste/rng.hpp"
#include <nlohmann/json.hpp>

namespace ste {

namespace {

struct Occurrence {
    std::size_t first_token = 0;
    std::size_t last_token = 0;  // inclusive
};

bool matches_at(const TokenizedText& tokenized, std::size_t pos, const TokenSeq& seq) {
    if (seq.empty() || pos + seq.size() > tokenized.tokens.size()) return false;
    for (std::size_t i = 0; i < seq.size(); ++i)
        if (tokenized.tokens[pos + i].surface != seq[i]) return false;
    return true;
}

// First occurrence of any alternative: smallest start position wins, ties
// broken by list order.
std::optional<Occurrence> find_first(const TokenizedText& tokenized,
                                     const std::vector<TokenSeq>& alternatives) {
    for (std::size_t pos = 0; pos < tokenized.tokens.size(); ++pos)
        for (const auto& alt : alternatives)
            if (matches_at(tokenized, pos, alt))
                return Occurrence{pos, pos + alt.size() - 1};
    return std::nullopt;
}

const ExpressionRule* chunk_expression_rule(const Question& question, int chunk_index) {
    for (const auto& c : question.rubric.criteria) {
        if (c.chunk_index != chunk_index || c.category != Category::E || !c.machine_rule)
            continue;
        if (const auto* e = std::get_if<ExpressionRule>(&*c.machine_rule)) return e;
    }
    return nullptr;
}

// Chunk references resolve through the chunk's expression criterion: the
// chunk is realized wherever one of its correct (or partial) alternatives
// occurs.
std::optional<Occurrence> resolve_pattern(const TokenPattern& pattern,
                                          const Question& question,
                                          const TokenizedText& tokenized) {
    if (pattern.is_chunk_ref()) {
        const ExpressionRule* rule = chunk_expression_rule(question, *pattern.chunk);
        if (!rule) return std::nullopt;
        std::vector<TokenSeq> alts = rule->correct_alternatives;
        alts.insert(alts.end(), rule->partial_alternatives.begin(),
                    rule->partial_alternatives.end());
        return find_first(tokenized, alts);
    }
    return find_first(tokenized, pattern.alternatives);
}

CueSpan occurrence_span(const TokenizedText& tokenized, const Occurrence& occ) {
    return span_for_tokens(tokenized, occ.first_token, occ.last_token);
}

bool relation_holds(OrderRelation rel, const Occurrence& anchor, const Occurrence& subject) {
    switch (rel) {
        case OrderRelation::immediately_before:
            return anchor.last_token + 1 == subject.first_token;
        case OrderRelation::immediately_after:
            return subject.last_token + 1 == anchor.first_token;
        case OrderRelation::anywhere_before:
            return anchor.last_token < subject.first_token;
        case OrderRelation::anywhere_after:
            return subject.last_token < anchor.first_token;
    }
    return false;
}

}  // namespace

RuleVerdict apply_rule(const RubricRule& rule, const Question& question,
                       const TokenizedText& tokenized) {
    RuleVerdict verdict;
    if (const auto* e = std::get_if<ExpressionRule>(&rule)) {
        if (auto occ = find_first(tokenized, e->correct_alternatives)) {
            verdict.label = ScoreLabel::correct;
            verdict.cue = occurrence_span(tokenized, *occ);
            return verdict;
        }
        if (auto occ = find_first(tokenized, e->partial_alternatives)) {
            verdict.label = ScoreLabel::partial;
            verdict.cue = occurrence_span(tokenized, *occ);
            return verdict;
        }
        verdict.label = ScoreLabel::incorrect;
        if (auto occ = find_first(tokenized, e->incorrect_markers))
            verdict.cue = occurrence_span(tokenized, *occ);
        return verdict;
    }
    if (const auto* w = std::get_if<OrderRule>(&rule)) {
        const auto anchor = resolve_pattern(w->anchor, question, tokenized);
        const auto subject = resolve_pattern(w->subject, question, tokenized);
        if (!anchor || !subject) {
            verdict.label = ScoreLabel::incorrect;
            return verdict;
        }
        verdict.label = relation_holds(w->relation, *anchor, *subject)
                            ? ScoreLabel::correct
                            : ScoreLabel::incorrect;
        // Cue covers both participants: the word-order evidence.
        const std::size_t first = std::min(anchor->first_token, subject->first_token);
        const std::size_t last = std::max(anchor->last_token, subject->last_token);
        verdict.cue = span_for_tokens(tokenized, first, last);
        return verdict;
    }
    const auto& g = std::get<GrammarRule>(rule);
    const auto required = find_first(tokenized, {g.required_form});
    const auto forbidden = find_first(tokenized, g.forbidden_forms);
    if (required && !forbidden) {
        verdict.label = ScoreLabel::correct;
        verdict.cue = occurrence_span(tokenized, *required);
    } else {
        verdict.label = ScoreLabel::incorrect;
        if (forbidden) verdict.cue = occurrence_span(tokenized, *forbidden);
    }
    return verdict;
}

OracleGrading grade_response_oracle(const Question& question, const std::string& response_text) {
    OracleGrading grading;
    const TokenizedText tokenized = tokenize(response_text);
    for (const auto& c : question.rubric.criteria) {
        if (!c.machine_rule) {
            grading.skipped.push_back(c.id);
            continue;
        }
        const RuleVerdict verdict = apply_rule(*c.machine_rule, question, tokenized);
        Annotation ann;
        ann.score = verdict.label;
        ann.cue = verdict.cue;
        ann.annotator_id = "oracle";
        grading.annotations[c.id] = std::move(ann);
    }
    return grading;
}

// --- error profile -----------------------------------------------------------

ErrorProfile load_error_profile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open profile file \"" + path + "\"");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("profile parse error: ") + e.what());
    }
    ErrorProfile profile;
    if (doc.contains("seed")) profile.seed = doc["seed"].get<std::uint64_t>();
    if (!doc.contains("rates") || !doc["rates"].is_object())
        throw SchemaError("profile needs a \"rates\" object");
    for (auto it = doc["rates"].begin(); it != doc["rates"].end(); ++it) {
        CriterionErrorRate rate;
        const auto& v = it.value();
        if (v.is_number()) {
            rate.incorrect = v.get<double>();
        } else if (v.is_object()) {
            if (v.contains("incorrect")) rate.incorrect = v["incorrect"].get<double>();
            if (v.contains("partial")) rate.partial = v["partial"].get<double>();
        } else {
            throw SchemaError("profile rate for \"" + it.key() + "\" must be a number or object");
        }
        if (rate.incorrect < 0 || rate.incorrect > 1 || rate.partial < 0 || rate.partial > 1)
            throw SchemaError("profile rates for \"" + it.key() + "\" must lie in [0, 1]");
        profile.rates[it.key()] = rate;
    }
    return profile;
}

std::string serialize_error_profile(const ErrorProfile& profile) {
    nlohmann::ordered_json doc;
    if (profile.seed) doc["seed"] = *profile.seed;
    nlohmann::ordered_json rates = nlohmann::ordered_json::object();
    for (const auto& [id, rate] : profile.rates)
        rates[id] = {{"incorrect", rate.incorrect}, {"partial", rate.partial}};
    doc["rates"] = std::move(rates);
    return doc.dump(2) + "\n";
}

// --- synthesis ----------------------------------------------------------------

namespace {

std::string compose_text(const std::vector<int>& order,
                         const std::map<int, TokenSeq>& realizations) {
    std::string text;
    for (const int chunk : order) {
        for (const auto& token : realizations.at(chunk)) {
            if (!text.empty()) text += ' ';
            text += token;
        }
    }
    if (!text.empty()) text += ' ';
    text += '.';
    return text;
}

ScoreLabel grade_one(const AnalyticCriterion& criterion, const Question& question,
                     const std::string& text) {
    return apply_rule(*criterion.machine_rule, question, tokenize(text)).label;
}

}  // namespace

std::vector<Response> synthesize_responses(const Question& question,
                                           const ErrorProfile& profile,
                                           std::size_t n, std::uint64_t seed) {
    for (const auto& [id, rate] : profile.rates) {
        const AnalyticCriterion* c = question.rubric.find(id);
        if (!c)
            throw std::invalid_argument("error profile names unknown criterion \"" + id + "\"");
        if (rate.partial > 0 && !c->allows_partial)
            throw std::invalid_argument("criterion \"" + id +
                                        "\" does not allow partial credit but the profile "
                                        "injects partial errors");
    }

    auto rate_for = [&](const std::string& id) {
        auto it = profile.rates.find(id);
        return it == profile.rates.end() ? CriterionErrorRate{} : it->second;
    };

    // Injection surface pools per criterion.
    std::map<std::string, std::vector<TokenSeq>> incorrect_pool;
    std::map<std::string, std::vector<TokenSeq>> partial_pool;
    for (const auto& c : question.rubric.criteria) {
        const CriterionErrorRate rate = rate_for(c.id);
        if (rate.incorrect <= 0 && rate.partial <= 0) continue;
        if (!c.machine_rule)
            throw std::invalid_argument("criterion \"" + c.id +
                                        "\" has no machine_rule; cannot synthesize errors for it");
        if (const auto* e = std::get_if<ExpressionRule>(&*c.machine_rule)) {
            incorrect_pool[c.id] =
                e->inject_incorrect.empty() ? e->incorrect_markers : e->inject_incorrect;
            partial_pool[c.id] =
                e->inject_partial.empty() ? e->partial_alternatives : e->inject_partial;
        } else if (const auto* g = std::get_if<GrammarRule>(&*c.machine_rule)) {
            incorrect_pool[c.id] =
                g->inject_incorrect.empty() ? g->forbidden_forms : g->inject_incorrect;
        }
        const bool is_order = std::holds_alternative<OrderRule>(*c.machine_rule);
        if (rate.incorrect > 0 && !is_order && incorrect_pool[c.id].empty())
            throw std::invalid_argument("criterion \"" + c.id +
                                        "\" has no incorrect surface realization to inject");
        if (rate.partial > 0 && partial_pool[c.id].empty())
            throw std::invalid_argument("criterion \"" + c.id +
                                        "\" has no partial surface realization to inject");
    }

    // Canonical chunk order: the order the reference answer realizes them.
    const TokenizedText reference = tokenize(question.reference_answer);
    std::vector<std::pair<std::size_t, int>> positions;
    for (const auto& chunk : question.chunks) {
        const ExpressionRule* rule = chunk_expression_rule(question, chunk.index);
        if (!rule)
            throw std::invalid_argument("chunk " + std::to_string(chunk.index) +
                                        " has no expression criterion with a machine rule");
        const auto occ = find_first(reference, rule->correct_alternatives);
        if (!occ)
            throw std::invalid_argument("reference answer does not realize chunk " +
                                        std::to_string(chunk.index));
        positions.emplace_back(occ->first_token, chunk.index);
    }
    std::sort(positions.begin(), positions.end());
    std::vector<int> canonical_order;
    for (const auto& [pos, chunk] : positions) canonical_order.push_back(chunk);

    std::vector<Response> out;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(seed, i));

        std::map<int, TokenSeq> realizations;
        for (const auto& chunk : question.chunks) {
            const ExpressionRule* rule = chunk_expression_rule(question, chunk.index);
            const auto& alts = rule->correct_alternatives;
            realizations[chunk.index] = alts[rng.below(alts.size())];
        }

        std::vector<int> order = canonical_order;
        std::vector<const AnalyticCriterion*> displaced;

        for (const auto& c : question.rubric.criteria) {
            const CriterionErrorRate rate = rate_for(c.id);
            const bool inject_incorrect = rate.incorrect > 0 && rng.bernoulli(rate.incorrect);
            const bool inject_partial =
                !inject_incorrect && rate.partial > 0 && rng.bernoulli(rate.partial);
            if (!inject_incorrect && !inject_partial) continue;

            if (std::holds_alternative<OrderRule>(*c.machine_rule)) {
                displaced.push_back(&c);
                continue;
            }

            // Try pool surfaces in seeded random order until the criterion
            // actually lands on the intended label in the composed text.
            const auto& pool = inject_incorrect ? incorrect_pool[c.id] : partial_pool[c.id];
            const ScoreLabel wanted = inject_incorrect ? ScoreLabel::incorrect : ScoreLabel::partial;
            const TokenSeq saved = realizations[c.chunk_index];
            bool done = false;
            for (const std::size_t pick : rng.sample_indices(pool.size(), pool.size())) {
                realizations[c.chunk_index] = pool[pick];
                if (grade_one(c, question, compose_text(order, realizations)) == wanted) {
                    done = true;
                    break;
                }
            }
            if (!done) {
                realizations[c.chunk_index] = saved;
                throw std::runtime_error("criterion \"" + c.id +
                                         "\": no injection surface flips the label to " +
                                         std::to_string(label_value(wanted)));
            }
        }

        // Word-order violations are injected by moving the chunk; candidate
        // positions are tried until the oracle confirms the violation.
        for (const auto* c : displaced) {
            auto at = std::find(order.begin(), order.end(), c->chunk_index);
            const std::size_t current = static_cast<std::size_t>(at - order.begin());
            std::vector<int> base = order;
            base.erase(base.begin() + static_cast<std::ptrdiff_t>(current));
            bool done = false;
            for (const std::size_t pos : rng.sample_indices(base.size() + 1, base.size() + 1)) {
                if (pos == current) continue;
                std::vector<int> candidate = base;
                candidate.insert(candidate.begin() + static_cast<std::ptrdiff_t>(pos),
                                 c->chunk_index);
                if (grade_one(*c, question, compose_text(candidate, realizations)) ==
                    ScoreLabel::incorrect) {
                    order = candidate;
                    done = true;
                    break;
                }
            }
            if (!done)
                throw std::runtime_error("criterion \"" + c->id +
                                         "\": no chunk position violates the word-order rule");
        }

        Response r;
        std::ostringstream id;
        id << question.id << "-S" << std::setw(4) << std::setfill('0') << i;
        r.id = id.str();
        r.question_id = question.id;
        r.text = compose_text(order, realizations);
        r.annotations = grade_response_oracle(question, r.text).annotations;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace ste
