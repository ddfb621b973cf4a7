#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace selmut {

/// Arithmetic expression over named variables, compiled once and evaluated
/// with the variables bound positionally. Grammar: + - * / ^, unary minus,
/// parentheses, numbers, and sin cos tan exp log sqrt abs tanh min max pow.
class Expression {
public:
    Expression() = default;
    /// `variables` fixes the slot order for evaluate(); `constants` are
    /// substituted at compile time. Unknown names throw UsageError.
    Expression(const std::string& text, const std::vector<std::string>& variables,
               const std::map<std::string, double>& constants = {});

    double evaluate(std::span<const double> values) const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

}  // namespace selmut
