#ifndef STE_ERRORS_HPP
#define STE_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace ste {

// Malformed input file: wrong JSON, missing/mistyped field. Carries the
// location context that was being parsed.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally valid file whose content breaks a data-model invariant.
// Collects every breach so a single load reports all problems at once.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> breaches)
        : std::runtime_error(join(breaches)), breaches_(std::move(breaches)) {}

    const std::vector<std::string>& breaches() const { return breaches_; }

private:
    static std::string join(const std::vector<std::string>& breaches) {
        std::string out = "dataset validation failed:";
        for (const auto& b : breaches) {
            out += "\n  - ";
            out += b;
        }
        return out;
    }

    std::vector<std::string> breaches_;
};

// An LLM reply that does not contain a usable label line.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& msg, std::string raw)
        : std::runtime_error(msg), raw_(std::move(raw)) {}

    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

// Network-level failure when talking to a live LLM endpoint.
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ste

#endif  // STE_ERRORS_HPP
