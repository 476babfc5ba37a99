#include "ste/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace ste {

PerLabelF1 per_criterion_f1(const std::vector<ScoreLabel>& golds,
                            const std::vector<ScoreLabel>& preds) {
    if (golds.size() != preds.size())
        throw std::invalid_argument("per_criterion_f1: golds and preds differ in length (" +
                                    std::to_string(golds.size()) + " vs " +
                                    std::to_string(preds.size()) + ")");
    PerLabelF1 out;
    for (int label = 0; label < 3; ++label) {
        std::size_t tp = 0, fp = 0, fn = 0;
        bool seen = false;
        for (std::size_t i = 0; i < golds.size(); ++i) {
            const bool g = label_value(golds[i]) == label;
            const bool p = label_value(preds[i]) == label;
            seen = seen || g || p;
            if (g && p) ++tp;
            if (!g && p) ++fp;
            if (g && !p) ++fn;
        }
        if (!seen) continue;  // label occurs nowhere: cell undefined
        const double denom = static_cast<double>(2 * tp + fp + fn);
        out[label] = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    }
    return out;
}

double macro_f1(const PerLabelF1& f1) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& cell : f1) {
        if (!cell) continue;
        sum += *cell;
        ++count;
    }
    return count ? sum / static_cast<double>(count) : 0.0;
}

namespace {

ReportCell aggregate_cells(const std::vector<double>& values, bool population_std) {
    ReportCell cell;
    cell.count = values.size();
    if (values.empty()) return cell;
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    cell.mean = mean;
    double sq = 0.0;
    for (const double v : values) sq += (v - mean) * (v - mean);
    if (population_std) {
        cell.stddev = std::sqrt(sq / static_cast<double>(values.size()));
    } else {
        cell.stddev = values.size() > 1
                          ? std::sqrt(sq / static_cast<double>(values.size() - 1))
                          : 0.0;
    }
    return cell;
}

}  // namespace

EvalReport aggregate_report(const std::vector<CriterionEval>& criteria,
                            const std::string& model, const std::string& question_id,
                            const std::string& fold_scheme, std::optional<int> shots,
                            bool population_std) {
    EvalReport report;
    report.model = model;
    report.question_id = question_id;
    report.fold_scheme = fold_scheme;
    report.shots = shots;
    report.population_std = population_std;
    report.criteria = criteria;

    const std::array<Category, 3> cats = {Category::E, Category::O, Category::G};
    for (const Category cat : cats) {
        CategoryRow row;
        row.name = std::string(1, static_cast<char>(cat));
        for (int label = 0; label < 3; ++label) {
            std::vector<double> values;
            for (const auto& c : criteria) {
                if (c.category != cat || !c.f1[label]) continue;
                values.push_back(*c.f1[label]);
            }
            row.cells[label] = aggregate_cells(values, population_std);
        }
        for (const auto& c : criteria)
            if (c.category == cat) ++row.num_criteria;
        report.rows.push_back(std::move(row));
    }

    CategoryRow all;
    all.name = "All";
    all.num_criteria = criteria.size();
    for (int label = 0; label < 3; ++label) {
        std::vector<double> values;
        for (const auto& c : criteria)
            if (c.f1[label]) values.push_back(*c.f1[label]);
        all.cells[label] = aggregate_cells(values, population_std);
    }
    report.rows.push_back(std::move(all));
    return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["model"] = report.model;
    doc["question"] = report.question_id;
    doc["fold_scheme"] = report.fold_scheme;
    if (report.shots) doc["shots"] = *report.shots;
    doc["std"] = report.population_std ? "population" : "sample";
    doc["criteria"] = nlohmann::ordered_json::array();
    for (const auto& c : report.criteria) {
        nlohmann::ordered_json cj;
        cj["id"] = c.criterion_id;
        cj["category"] = std::string(1, static_cast<char>(c.category));
        cj["items"] = c.num_items;
        for (const int label : {2, 1, 0}) {
            if (c.f1[label])
                cj["f1"][std::to_string(label)] = *c.f1[label];
            else
                cj["f1"][std::to_string(label)] = nullptr;
        }
        if (c.degenerate) cj["degenerate"] = true;
        doc["criteria"].push_back(std::move(cj));
    }
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : report.rows) {
        nlohmann::ordered_json rj;
        rj["category"] = row.name;
        rj["criteria"] = row.num_criteria;
        for (const int label : {2, 1, 0}) {
            nlohmann::ordered_json cell;
            const auto& c = row.cells[label];
            if (c.mean) {
                cell["mean"] = *c.mean;
                cell["std"] = *c.stddev;
                cell["n"] = c.count;
            } else {
                cell = nullptr;
            }
            rj["labels"][std::to_string(label)] = std::move(cell);
        }
        doc["rows"].push_back(std::move(rj));
    }
    return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
    EvalReport report;
    report.model = doc.at("model").get<std::string>();
    report.question_id = doc.at("question").get<std::string>();
    report.fold_scheme = doc.at("fold_scheme").get<std::string>();
    if (doc.contains("shots")) report.shots = doc["shots"].get<int>();
    report.population_std = doc.value("std", "population") == std::string("population");
    for (const auto& cj : doc.at("criteria")) {
        CriterionEval c;
        c.criterion_id = cj.at("id").get<std::string>();
        c.category = category_from_string(cj.at("category").get<std::string>());
        c.num_items = cj.at("items").get<std::size_t>();
        for (const int label : {2, 1, 0}) {
            const auto& cell = cj.at("f1").at(std::to_string(label));
            if (!cell.is_null()) c.f1[label] = cell.get<double>();
        }
        c.degenerate = cj.value("degenerate", false);
        report.criteria.push_back(std::move(c));
    }
    for (const auto& rj : doc.at("rows")) {
        CategoryRow row;
        row.name = rj.at("category").get<std::string>();
        row.num_criteria = rj.at("criteria").get<std::size_t>();
        for (const int label : {2, 1, 0}) {
            const auto& cell = rj.at("labels").at(std::to_string(label));
            if (cell.is_null()) continue;
            row.cells[label].mean = cell.at("mean").get<double>();
            row.cells[label].stddev = cell.at("std").get<double>();
            row.cells[label].count = cell.at("n").get<std::size_t>();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

namespace {

std::string format_cell(const ReportCell& cell, bool with_std) {
    if (!cell.mean) return "nan";
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << *cell.mean;
    if (with_std) os << " +-" << std::fixed << std::setprecision(2) << *cell.stddev;
    return os.str();
}

}  // namespace

std::string render_report_text(const EvalReport& report) {
    std::ostringstream os;
    os << "model: " << report.model << "  question: " << report.question_id;
    if (report.shots) os << "  shots: " << *report.shots;
    os << "  (" << report.fold_scheme << ")\n";
    os << std::left << std::setw(18) << "Category (#crit)" << std::setw(14) << "Correct"
       << std::setw(18) << "Partial. Correct" << std::setw(14) << "Incorrect" << "\n";
    for (const auto& row : report.rows) {
        const bool with_std = row.name != "All";
        std::ostringstream name;
        name << row.name << " (" << row.num_criteria << ")";
        os << std::left << std::setw(18) << name.str() << std::setw(14)
           << format_cell(row.cells[2], with_std) << std::setw(18)
           << format_cell(row.cells[1], with_std) << std::setw(14)
           << format_cell(row.cells[0], with_std) << "\n";
    }
    return os.str();
}

std::string render_report_delta(const EvalReport& a, const EvalReport& b) {
    std::ostringstream os;
    os << "delta (B - A)  A: " << a.model << "  B: " << b.model << "\n";
    os << std::left << std::setw(18) << "Category" << std::setw(14) << "Correct"
       << std::setw(18) << "Partial. Correct" << std::setw(14) << "Incorrect" << "\n";
    for (const auto& row_a : a.rows) {
        const CategoryRow* row_b = nullptr;
        for (const auto& r : b.rows)
            if (r.name == row_a.name) row_b = &r;
        if (!row_b) continue;
        os << std::left << std::setw(18) << row_a.name;
        for (const int label : {2, 1, 0}) {
            std::ostringstream cell;
            if (row_a.cells[label].mean && row_b->cells[label].mean) {
                const double d = *row_b->cells[label].mean - *row_a.cells[label].mean;
                cell << std::showpos << std::fixed << std::setprecision(3) << d;
            } else {
                cell << "nan";
            }
            os << std::setw(label == 1 ? 18 : 14) << cell.str();
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace ste
