#pragma once

// File loading helpers shared by the CLI and the evaluation harness.

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "diac/bench.hpp"
#include "diac/blif.hpp"
#include "diac/circuit.hpp"
#include "diac/error.hpp"
#include "diac/taskgraph.hpp"

namespace diac {

enum class CircuitFormat { Bench, Blif, Json };

[[nodiscard]] inline CircuitFormat circuit_format_from_string(std::string_view s) {
    if (s == "bench") return CircuitFormat::Bench;
    if (s == "blif") return CircuitFormat::Blif;
    if (s == "json") return CircuitFormat::Json;
    throw Error("unknown circuit format '" + std::string(s) + "'");
}

/// Format implied by the file extension, if it is one we read.
[[nodiscard]] inline std::optional<CircuitFormat> circuit_format_of(const std::filesystem::path& p) {
    auto ext = p.extension().string();
    if (ext == ".bench") return CircuitFormat::Bench;
    if (ext == ".blif") return CircuitFormat::Blif;
    if (ext == ".json") return CircuitFormat::Json;
    return std::nullopt;
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Parses a circuit file. The graph is named after the file stem unless the
/// file names itself.
[[nodiscard]] inline CircuitGraph load_circuit(const std::filesystem::path& p,
                                               std::optional<CircuitFormat> format = std::nullopt) {
    auto fmt = format ? format : circuit_format_of(p);
    if (!fmt) throw Error("cannot tell the format of '" + p.string() + "'; pass --format");
    auto text = read_file(p);
    CircuitGraph g;
    switch (*fmt) {
        case CircuitFormat::Bench: g = parse_bench(text, p.stem().string()); break;
        case CircuitFormat::Blif: g = parse_blif_subset(text); break;
        case CircuitFormat::Json: g = parse_taskgraph_json(text); break;
    }
    if (g.name.empty()) g.name = p.stem().string();
    return levelize(std::move(g));
}

}  // namespace diac
