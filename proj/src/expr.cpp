#include "selmut/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "selmut/types.hpp"

namespace selmut {

struct Expression::Node {
    enum class Kind { number, variable, negate, binary, call } kind = Kind::number;
    double value = 0.0;
    std::size_t slot = 0;
    char op = 0;
    std::string function;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

const std::map<std::string, std::size_t>& function_arity() {
    static const std::map<std::string, std::size_t> arity = {
        {"sin", 1}, {"cos", 1},  {"tan", 1}, {"exp", 1}, {"log", 1}, {"sqrt", 1},
        {"abs", 1}, {"tanh", 1}, {"min", 2}, {"max", 2}, {"pow", 2}};
    return arity;
}

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars, const std::map<std::string, double>& consts)
        : s_(text), vars_(vars), consts_(consts) {}

    NodePtr parse() {
        NodePtr n = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        throw UsageError("expression '" + s_ + "': " + what + " at offset " + std::to_string(pos_));
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static NodePtr binary(char op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::binary;
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }
    NodePtr sum() {
        NodePtr n = product();
        while (true) {
            if (accept('+')) n = binary('+', n, product());
            else if (accept('-')) n = binary('-', n, product());
            else return n;
        }
    }
    NodePtr product() {
        NodePtr n = unary();
        while (true) {
            if (accept('*')) n = binary('*', n, unary());
            else if (accept('/')) n = binary('/', n, unary());
            else return n;
        }
    }
    NodePtr unary() {
        if (accept('-')) {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::negate;
            n->args = {unary()};
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = atom();
        if (accept('^')) return binary('^', base, unary());
        return base;
    }
    NodePtr atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        if (accept('(')) {
            NodePtr n = sum();
            if (!accept(')')) fail("missing ')'");
            return n;
        }
        const char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("bad number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<Node>();
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            if (accept('(')) return call(name);
            for (std::size_t k = 0; k < vars_.size(); ++k) {
                if (vars_[k] == name) {
                    auto n = std::make_shared<Node>();
                    n->kind = Node::Kind::variable;
                    n->slot = k;
                    return n;
                }
            }
            if (auto it = consts_.find(name); it != consts_.end()) {
                auto n = std::make_shared<Node>();
                n->value = it->second;
                return n;
            }
            fail("unknown name '" + name + "'");
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }
    NodePtr call(const std::string& name) {
        const auto it = function_arity().find(name);
        if (it == function_arity().end()) fail("unknown function '" + name + "'");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::call;
        n->function = name;
        n->args.push_back(sum());
        while (accept(',')) n->args.push_back(sum());
        if (!accept(')')) fail("missing ')' after arguments of " + name);
        if (n->args.size() != it->second) fail("wrong number of arguments to " + name);
        return n;
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    const std::map<std::string, double>& consts_;
    std::size_t pos_ = 0;
};

double eval(const Node& n, std::span<const double> v) {
    switch (n.kind) {
        case Node::Kind::number:
            return n.value;
        case Node::Kind::variable:
            return v[n.slot];
        case Node::Kind::negate:
            return -eval(*n.args[0], v);
        case Node::Kind::binary: {
            const double a = eval(*n.args[0], v), b = eval(*n.args[1], v);
            switch (n.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                case '/': return a / b;
                default: return std::pow(a, b);
            }
        }
        case Node::Kind::call: {
            const double a = eval(*n.args[0], v);
            const std::string& f = n.function;
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "tan") return std::tan(a);
            if (f == "exp") return std::exp(a);
            if (f == "log") return std::log(a);
            if (f == "sqrt") return std::sqrt(a);
            if (f == "abs") return std::abs(a);
            if (f == "tanh") return std::tanh(a);
            const double b = eval(*n.args[1], v);
            if (f == "min") return std::min(a, b);
            if (f == "max") return std::max(a, b);
            return std::pow(a, b);
        }
    }
    return 0.0;
}

}  // namespace

Expression::Expression(const std::string& text, const std::vector<std::string>& variables,
                       const std::map<std::string, double>& constants)
    : text_(text), root_(Parser(text, variables, constants).parse()) {}

double Expression::evaluate(std::span<const double> values) const {
    if (!root_) throw UsageError("evaluating an empty expression");
    return eval(*root_, values);
}

}  // namespace selmut
