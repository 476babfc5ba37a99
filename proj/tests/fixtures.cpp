#include "fixtures.hpp"

#include <sstream>

namespace ste::fixtures {

std::string data_dir() { return STE_DATA_DIR; }

std::string data_path(const std::string& name) { return data_dir() + "/" + name; }

Dataset load_q11() { return load_dataset(data_path("q11.json")); }

namespace {

AnalyticCriterion make_criterion(std::string id, int chunk, Category category,
                                 RubricRule rule, bool allows_partial = false) {
    AnalyticCriterion c;
    c.id = std::move(id);
    c.chunk_index = chunk;
    c.category = category;
    c.allows_partial = allows_partial;
    c.label_descriptions[2] = "Correct realization";
    c.label_descriptions[0] = "Otherwise";
    if (allows_partial) c.label_descriptions[1] = "Close but imprecise realization";
    c.machine_rule = std::move(rule);
    return c;
}

TokenPattern tokens(std::vector<TokenSeq> alternatives) {
    TokenPattern p;
    p.alternatives = std::move(alternatives);
    return p;
}

TokenPattern chunk_ref(int index) {
    TokenPattern p;
    p.chunk = index;
    return p;
}

}  // namespace

Question synthetic_question() {
    Question q;
    q.id = "SQ1";
    q.l1_text = "kare wa kinou toshokan de hon wo yonda";
    q.chunks = {
        {0, "kare wa", "he"},
        {1, "kinou", "yesterday"},
        {2, "toshokan de", "at the library"},
        {3, "hon wo", "a book"},
        {4, "yonda", "read"},
    };
    q.reference_answer = "He read a book at the library yesterday .";

    ExpressionRule e1;
    e1.correct_alternatives = {{"He"}};
    e1.incorrect_markers = {{"Him"}, {"She"}};
    q.rubric.criteria.push_back(make_criterion("E1", 0, Category::E, e1));

    ExpressionRule e2;
    e2.correct_alternatives = {{"yesterday"}};
    e2.incorrect_markers = {{"tomorrow"}, {"yesterdays"}};
    q.rubric.criteria.push_back(make_criterion("E2", 1, Category::E, e2));

    ExpressionRule e3;
    e3.correct_alternatives = {{"at", "the", "library"}};
    e3.incorrect_markers = {{"in", "the", "library"}, {"at", "library"}};
    q.rubric.criteria.push_back(make_criterion("E3", 2, Category::E, e3));

    ExpressionRule e4;
    e4.correct_alternatives = {{"a", "book"}};
    e4.incorrect_markers = {{"the", "book"}, {"some", "book"}};
    q.rubric.criteria.push_back(make_criterion("E4", 3, Category::E, e4));

    ExpressionRule e5;
    e5.correct_alternatives = {{"read"}};
    e5.incorrect_markers = {{"readed"}, {"red"}};
    q.rubric.criteria.push_back(make_criterion("E5", 4, Category::E, e5));

    OrderRule o1;
    o1.anchor = tokens({{"He"}});
    o1.relation = OrderRelation::anywhere_before;
    o1.subject = tokens({{"read"}});
    q.rubric.criteria.push_back(make_criterion("O1", 0, Category::O, o1));

    OrderRule o2;
    o2.anchor = chunk_ref(2);
    o2.relation = OrderRelation::anywhere_after;
    o2.subject = tokens({{"read"}});
    q.rubric.criteria.push_back(make_criterion("O2", 2, Category::O, o2));

    OrderRule o3;
    o3.anchor = chunk_ref(3);
    o3.relation = OrderRelation::immediately_after;
    o3.subject = tokens({{"read"}});
    q.rubric.criteria.push_back(make_criterion("O3", 3, Category::O, o3));

    GrammarRule g1;
    g1.required_form = {"read"};
    g1.forbidden_forms = {{"has", "read"}, {"have", "read"}};
    q.rubric.criteria.push_back(make_criterion("G1", 4, Category::G, g1));

    GrammarRule g2;
    g2.required_form = {"a"};
    g2.forbidden_forms = {{"an", "book"}, {"one", "book"}};
    q.rubric.criteria.push_back(make_criterion("G2", 3, Category::G, g2));

    return q;
}

ErrorProfile synthetic_profile() {
    ErrorProfile profile;
    profile.rates["E1"] = {0.30, 0.0};
    profile.rates["E2"] = {0.25, 0.0};
    profile.rates["E3"] = {0.30, 0.0};
    profile.rates["E4"] = {0.20, 0.0};
    profile.rates["E5"] = {0.25, 0.0};
    profile.rates["O1"] = {0.30, 0.0};
    profile.rates["O2"] = {0.35, 0.0};
    profile.rates["O3"] = {0.30, 0.0};
    profile.rates["G1"] = {0.40, 0.0};
    profile.rates["G2"] = {0.20, 0.0};
    return profile;
}

Question partial_question() {
    Question q;
    q.id = "SQ2";
    q.l1_text = "watashi wa ringo wo tabeta";
    q.chunks = {
        {0, "watashi wa", "I"},
        {1, "ringo wo", "an apple"},
        {2, "tabeta", "ate"},
    };
    q.reference_answer = "I ate an apple .";

    ExpressionRule e1;
    e1.correct_alternatives = {{"I"}};
    e1.incorrect_markers = {{"Me"}};
    q.rubric.criteria.push_back(make_criterion("E1", 0, Category::E, e1));

    ExpressionRule p1;
    p1.correct_alternatives = {{"an", "apple"}};
    p1.partial_alternatives = {{"the", "apple"}, {"apples"}};
    p1.incorrect_markers = {{"a", "apple"}, {"banana"}};
    q.rubric.criteria.push_back(make_criterion("P1", 1, Category::E, p1, true));

    ExpressionRule e2;
    e2.correct_alternatives = {{"ate"}};
    e2.incorrect_markers = {{"eat"}, {"eated"}};
    q.rubric.criteria.push_back(make_criterion("E2", 2, Category::E, e2));

    return q;
}

ErrorProfile partial_profile() {
    ErrorProfile profile;
    profile.rates["E1"] = {0.25, 0.0};
    profile.rates["P1"] = {0.25, 0.25};
    profile.rates["E2"] = {0.30, 0.0};
    return profile;
}

Dataset q1_stats_dataset() {
    Question q;
    q.id = "Q1";
    q.l1_text = "alpha beta gamma";
    q.chunks = {{0, "alpha", "alpha"}, {1, "beta", "beta"}, {2, "gamma", "gamma"}};
    q.reference_answer = "alpha beta gamma .";
    for (int i = 0; i < 9; ++i) {
        AnalyticCriterion c;
        c.id = "C" + std::to_string(i + 1);
        c.chunk_index = i % 3;
        c.category = i % 3 == 0 ? Category::E : (i % 3 == 1 ? Category::O : Category::G);
        c.allows_partial = true;
        c.label_descriptions[2] = "correct";
        c.label_descriptions[1] = "partial";
        c.label_descriptions[0] = "incorrect";
        q.rubric.criteria.push_back(std::move(c));
    }
    // Chunks need an E criterion each; C1/C4/C7 cover chunks 0/1/2? C1->0,
    // C4->0, C7->0 by i%3; fix categories so each chunk gets one E.
    q.rubric.criteria[0].category = Category::E;  // chunk 0
    q.rubric.criteria[1].category = Category::E;  // chunk 1
    q.rubric.criteria[2].category = Category::E;  // chunk 2

    Dataset dataset;
    // 923 label-2, 114 label-1, 235 label-0 annotations; remaining slots
    // left unannotated.
    std::size_t slot = 0;
    for (int r = 0; r < 159; ++r) {
        Response resp;
        resp.id = "Q1-R" + std::to_string(r);
        resp.question_id = "Q1";
        resp.text = "response text " + std::to_string(r);
        for (int c = 0; c < 9; ++c, ++slot) {
            int label;
            if (slot < 923)
                label = 2;
            else if (slot < 923 + 114)
                label = 1;
            else if (slot < 923 + 114 + 235)
                label = 0;
            else
                continue;
            Annotation ann;
            ann.score = label_from_int(label);
            ann.annotator_id = "a1";
            resp.annotations[q.rubric.criteria[static_cast<std::size_t>(c)].id] = ann;
        }
        dataset.responses.push_back(std::move(resp));
    }
    dataset.questions.push_back(std::move(q));
    return dataset;
}

TrainingConfig tiny_training_config() {
    TrainingConfig config;
    config.epochs = 6;
    config.learning_rate = 5e-3;
    config.recurrent_hidden = 12;
    config.batch_size = 5;
    config.encoder_dim = 12;
    config.seed = 7;
    return config;
}

}  // namespace ste::fixtures
