#pragma once

// Structural BLIF subset: .model .inputs .outputs .names .latch .end
// `.names` bodies are checked for shape only; the node becomes a LUT.

#include <algorithm>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "diac/circuit.hpp"
#include "diac/error.hpp"

namespace diac {

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        auto start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > start) out.emplace_back(s.substr(start, i - start));
    }
    return out;
}

inline bool is_cube_char(char c) { return c == '0' || c == '1' || c == '-'; }

}  // namespace detail

[[nodiscard]] inline CircuitGraph parse_blif_subset(std::istream& in) {
    CircuitGraph g;
    // Logical lines (backslash continuation joined) with their first physical line number.
    std::vector<std::pair<std::size_t, std::string>> lines;
    {
        std::string raw, pending;
        std::size_t lineno = 0, start = 0;
        while (std::getline(in, raw)) {
            ++lineno;
            if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
            if (pending.empty()) start = lineno;
            bool cont = false;
            auto last = raw.find_last_not_of(" \t\r");
            if (last != std::string::npos && raw[last] == '\\') {
                raw.resize(last);
                cont = true;
            }
            pending += raw + " ";
            if (!cont) {
                lines.emplace_back(start, std::move(pending));
                pending.clear();
            }
        }
        if (!pending.empty()) lines.emplace_back(start, std::move(pending));
    }

    std::optional<std::size_t> open_names;
    bool ended = false;
    std::vector<std::pair<std::string, std::size_t>> names_outputs;

    for (auto& [lineno, text] : lines) {
        auto tok = detail::split_ws(text);
        if (tok.empty()) continue;
        if (ended) throw ParseError("content after .end", lineno, 1);
        const auto& head = tok.front();
        if (head[0] != '.') {
            if (!open_names) throw ParseError("truth-table row outside .names", lineno, 1);
            const auto& cur = g.nodes[*open_names];
            const auto n_in = cur.inputs.size();
            bool ok = false;
            if (n_in == 0) {
                ok = tok.size() == 1 && (tok[0] == "0" || tok[0] == "1");
            } else if (tok.size() == 2 && tok[0].size() == n_in && (tok[1] == "0" || tok[1] == "1")) {
                ok = std::all_of(tok[0].begin(), tok[0].end(), detail::is_cube_char);
            }
            if (!ok) throw ParseError("malformed truth table row for '" + cur.name + "'", lineno, 1);
            continue;
        }
        open_names.reset();
        if (head == ".model") {
            if (tok.size() > 1) g.name = tok[1];
        } else if (head == ".inputs") {
            g.primary_inputs.insert(g.primary_inputs.end(), tok.begin() + 1, tok.end());
        } else if (head == ".outputs") {
            g.primary_outputs.insert(g.primary_outputs.end(), tok.begin() + 1, tok.end());
        } else if (head == ".names") {
            if (tok.size() < 2) throw ParseError(".names without output signal", lineno, 1);
            if (tok.size() == 2)
                throw ParseError("constant .names '" + tok[1] + "' is not supported", lineno, 1);
            GateNode n;
            n.kind = GateKind::Lut;
            n.name = tok.back();
            n.inputs.assign(tok.begin() + 1, tok.end() - 1);
            if (n.inputs.size() > kMaxGateArity)
                throw ParseError(".names '" + n.name + "' exceeds the arity limit", lineno, 1);
            g.nodes.push_back(std::move(n));
            open_names = g.nodes.size() - 1;
            names_outputs.emplace_back(g.nodes.back().name, lineno);
        } else if (head == ".latch") {
            if (tok.size() < 3 || tok.size() > 6) throw ParseError("malformed .latch", lineno, 1);
            GateNode n;
            n.kind = GateKind::Dff;
            n.name = tok[2];
            n.inputs = {tok[1]};
            g.nodes.push_back(std::move(n));
        } else if (head == ".end") {
            ended = true;
        } else {
            throw ParseError("unsupported directive '" + head + "'", lineno, 1);
        }
    }

    // A .names output nobody reads and that is not a primary output is dangling.
    std::set<std::string, std::less<>> used(g.primary_outputs.begin(), g.primary_outputs.end());
    for (const auto& n : g.nodes) used.insert(n.inputs.begin(), n.inputs.end());
    for (const auto& [sig, line] : names_outputs)
        if (!used.contains(sig)) throw ParseError("dangling .names output '" + sig + "'", line, 1);

    check_graph(g);
    return levelize(std::move(g));
}

[[nodiscard]] inline CircuitGraph parse_blif_subset(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_blif_subset(in);
}

}  // namespace diac
