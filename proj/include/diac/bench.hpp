#pragma once

// ISCAS `.bench` reader and writer.

#include <cctype>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "diac/circuit.hpp"
#include "diac/error.hpp"

namespace diac {

namespace detail {

class BenchLineScanner {
public:
    BenchLineScanner(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    [[nodiscard]] bool at_end() {
        skip_space();
        return pos_ >= text_.size();
    }

    [[nodiscard]] bool peek(char c) {
        skip_space();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void expect(char c) {
        skip_space();
        if (pos_ >= text_.size() || text_[pos_] != c)
            fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    std::string identifier() {
        skip_space();
        auto start = pos_;
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' || c == '=') break;
            ++pos_;
        }
        if (start == pos_) fail("expected identifier");
        return std::string(text_.substr(start, pos_ - start));
    }

    [[nodiscard]] std::size_t column() const { return pos_ + 1; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, pos_ + 1); }

private:
    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses ISCAS-89 `.bench` text. The result passes check_graph() and is levelized.
[[nodiscard]] inline CircuitGraph parse_bench(std::istream& in, std::string name = {}) {
    CircuitGraph g;
    g.name = std::move(name);
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line(raw);
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        detail::BenchLineScanner sc(line, lineno);
        if (sc.at_end()) continue;

        auto head = sc.identifier();
        std::string upper = head;
        for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        if ((upper == "INPUT" || upper == "OUTPUT") && sc.peek('(')) {
            sc.expect('(');
            auto sig = sc.identifier();
            sc.expect(')');
            if (!sc.at_end()) sc.fail("trailing text");
            (upper == "INPUT" ? g.primary_inputs : g.primary_outputs).push_back(std::move(sig));
            continue;
        }

        sc.expect('=');
        auto gate_col = sc.column();
        auto token = sc.identifier();
        auto kind = gate_kind_from_token(token);
        if (!kind || *kind == GateKind::Lut) throw ParseError("unknown gate type '" + token + "'", lineno, gate_col);
        sc.expect('(');
        GateNode node;
        node.name = head;
        node.kind = *kind;
        if (!sc.peek(')')) {
            node.inputs.push_back(sc.identifier());
            while (sc.peek(',')) {
                sc.expect(',');
                node.inputs.push_back(sc.identifier());
            }
        }
        sc.expect(')');
        if (!sc.at_end()) sc.fail("trailing text");
        if (!arity_ok(node.kind, node.inputs.size()))
            throw ParseError("gate '" + node.name + "' (" + std::string(to_string(node.kind)) +
                                 ") has invalid arity " + std::to_string(node.inputs.size()),
                             lineno, gate_col);
        g.nodes.push_back(std::move(node));
    }
    check_graph(g);
    return levelize(std::move(g));
}

[[nodiscard]] inline CircuitGraph parse_bench(std::string_view text, std::string name = {}) {
    std::istringstream in{std::string(text)};
    return parse_bench(in, std::move(name));
}

/// Writes `.bench` text. LUT nodes have no `.bench` spelling and are rejected.
[[nodiscard]] inline std::string emit_bench(const CircuitGraph& g) {
    std::ostringstream out;
    if (!g.name.empty()) out << "# " << g.name << "\n";
    for (const auto& n : g.nodes)
        if (n.kind == GateKind::Lut)
            throw GraphError("node '" + n.name + "' is a LUT and cannot be written as .bench");
    for (const auto& pi : g.primary_inputs) out << "INPUT(" << pi << ")\n";
    for (const auto& po : g.primary_outputs) out << "OUTPUT(" << po << ")\n";
    for (const auto& n : g.nodes) {
        out << n.name << " = " << to_string(n.kind) << "(";
        for (std::size_t i = 0; i < n.inputs.size(); ++i) out << (i ? ", " : "") << n.inputs[i];
        out << ")\n";
    }
    return out.str();
}

}  // namespace diac
