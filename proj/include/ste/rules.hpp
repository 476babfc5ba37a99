#ifndef STE_RULES_HPP
#define STE_RULES_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ste {

using TokenSeq = std::vector<std::string>;

// Literal token-sequence alternatives, or a reference to a chunk whose
// realization is resolved through that chunk's expression criterion.
struct TokenPattern {
    std::vector<TokenSeq> alternatives;
    std::optional<int> chunk;

    bool is_chunk_ref() const { return chunk.has_value(); }
};

// "Expressed as X / Y / ..." cells. Matching is over contiguous token
// subsequences, case-sensitive. inject_incorrect / inject_partial are the
// surface realizations the synthesizer substitutes; they default to
// incorrect_markers / partial_alternatives when empty.
struct ExpressionRule {
    std::vector<TokenSeq> correct_alternatives;
    std::vector<TokenSeq> partial_alternatives;
    std::vector<TokenSeq> incorrect_markers;
    std::vector<TokenSeq> inject_incorrect;
    std::vector<TokenSeq> inject_partial;
};

enum class OrderRelation {
    immediately_before,
    immediately_after,
    anywhere_before,
    anywhere_after,
};

// "Word order is ..." cells: the relation holds between the first occurrence
// of the anchor and the first occurrence of the subject, anchor relative to
// subject.
struct OrderRule {
    TokenPattern anchor;
    OrderRelation relation = OrderRelation::immediately_before;
    TokenPattern subject;
};

// "Form X is used" cells: correct iff the required form occurs and no
// forbidden form occurs.
struct GrammarRule {
    TokenSeq required_form;
    std::vector<TokenSeq> forbidden_forms;
    std::vector<TokenSeq> inject_incorrect;
};

using RubricRule = std::variant<ExpressionRule, OrderRule, GrammarRule>;

const char* order_relation_name(OrderRelation r);
std::optional<OrderRelation> order_relation_from_name(const std::string& name);

}  // namespace ste

#endif  // STE_RULES_HPP
