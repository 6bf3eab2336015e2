#pragma once

// Piecewise-constant harvest power traces.
//
// File format: CSV rows `duration_ms,power_mW`. Blank lines and text after
// `#` are ignored. An optional first row of non-numeric fields is a header;
// a header field `repeat=true` makes the trace cyclic.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "diac/error.hpp"

namespace diac {

struct TraceSegment {
    double duration_ms = 0;
    double power_mW = 0;
};

struct HarvestTrace {
    std::vector<TraceSegment> segments;
    bool repeat = false;

    void check() const {
        if (segments.empty()) throw Error("trace: no segments");
        for (const auto& s : segments) {
            if (!(s.duration_ms > 0) || !std::isfinite(s.duration_ms))
                throw Error("trace: segment durations must be positive");
            if (!(s.power_mW >= 0) || !std::isfinite(s.power_mW))
                throw Error("trace: segment powers must be non-negative");
        }
    }

    [[nodiscard]] double period_ms() const {
        double t = 0;
        for (const auto& s : segments) t += s.duration_ms;
        return t;
    }

    [[nodiscard]] double mean_power_mW() const {
        double e = 0;
        for (const auto& s : segments) e += s.duration_ms * s.power_mW;
        return e / period_ms();
    }
};

/// Monotone reader: `power_at` must be called with non-decreasing times.
class TraceCursor {
public:
    explicit TraceCursor(const HarvestTrace& t) : trace_(&t), end_(t.segments.front().duration_ms) {}

    [[nodiscard]] double power_at(double t_ms) {
        const auto& segs = trace_->segments;
        while (t_ms >= end_) {
            if (idx_ + 1 < segs.size()) {
                ++idx_;
            } else if (trace_->repeat) {
                idx_ = 0;
            } else {
                return 0.0;
            }
            start_ = end_;
            end_ = start_ + segs[idx_].duration_ms;
        }
        return segs[idx_].power_mW;
    }

private:
    const HarvestTrace* trace_;
    std::size_t idx_ = 0;
    double start_ = 0;
    double end_;
};

namespace detail {

inline std::string trim(std::string s) {
    auto notspace = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
    s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
    return s;
}

inline bool parse_double(const std::string& tok, double& out) {
    auto t = trim(tok);
    if (t.empty()) return false;
    const char* b = t.data();
    const char* e = b + t.size();
    auto [p, ec] = std::from_chars(b, e, out);
    return ec == std::errc() && p == e;
}

}  // namespace detail

[[nodiscard]] inline HarvestTrace parse_trace(std::istream& in) {
    HarvestTrace tr;
    std::string line;
    std::size_t lineno = 0;
    bool seen_row = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        for (std::string f; std::getline(ss, f, ',');) fields.push_back(detail::trim(f));
        double d = 0, p = 0;
        bool numeric = fields.size() >= 2 && detail::parse_double(fields[0], d) && detail::parse_double(fields[1], p);
        if (!numeric) {
            if (seen_row) throw ParseError("trace: expected 'duration_ms,power_mW'", lineno);
            for (const auto& f : fields)
                if (f == "repeat=true") tr.repeat = true;
            seen_row = true;
            continue;
        }
        if (fields.size() != 2) throw ParseError("trace: expected two fields", lineno);
        if (!(d > 0)) throw ParseError("trace: duration must be positive", lineno);
        if (!(p >= 0)) throw ParseError("trace: power must be non-negative", lineno);
        tr.segments.push_back({d, p});
        seen_row = true;
    }
    if (tr.segments.empty()) throw Error("trace: zero-duration trace");
    return tr;
}

[[nodiscard]] inline HarvestTrace parse_trace_string(const std::string& text) {
    std::istringstream in(text);
    return parse_trace(in);
}

[[nodiscard]] inline HarvestTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open trace '" + path + "'");
    return parse_trace(in);
}

inline void write_trace(std::ostream& out, const HarvestTrace& tr) {
    out << "duration_ms,power_mW";
    if (tr.repeat) out << ",repeat=true";
    out << '\n';
    for (const auto& s : tr.segments) out << s.duration_ms << ',' << s.power_mW << '\n';
}

}  // namespace diac
