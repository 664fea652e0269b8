#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "liouville/matrix.hpp"
#include "liouville/meanfield.hpp"
#include "liouville/radial.hpp"

namespace liouville::io {

/// Fixed 17-significant-digit rendering so emitted files diff byte-exact and
/// round-trip through a parser without loss.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) return "0"; // canonicalize the sign of zero
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// format_double for JSON contexts, where non-finite values become null.
inline std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    return format_double(v);
}

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

inline std::string json_array(const std::vector<double>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += json_number(v[i]);
    }
    return out + "]";
}

inline std::string json_int_array(const std::vector<int>& v) {
    std::string out = "[";
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out + "]";
}

// ---- input parsing -------------------------------------------------------

/// {"n": int, "a": [[...]]} with optional "sym_tol".
inline CoefficientMatrix parse_matrix(const nlohmann::json& j) {
    const int n = j.at("n").get<int>();
    const auto rows = j.at("a").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != n)
        throw nlohmann::json::other_error::create(501, "field 'a' does not have n rows", &j);
    const double sym_tol = j.value("sym_tol", 1e-12);
    return build_matrix(rows, sym_tol);
}

inline RadialOptions parse_radial_options(const nlohmann::json& j) {
    RadialOptions o;
    o.r0 = j.value("r0", o.r0);
    o.r_max = j.value("r_max", o.r_max);
    o.atol = j.value("atol", o.atol);
    o.rtol = j.value("rtol", o.rtol);
    o.delta = j.value("delta", o.delta);
    o.h0 = j.value("h0", o.h0);
    return o;
}

/// {"const": c, "cos_terms": [{"kx": int, "ky": int, "amp": a}, ...]}
inline HarmonicProfile parse_h_profile(const nlohmann::json& j) {
    HarmonicProfile h;
    h.constant = j.value("const", 1.0);
    if (j.contains("cos_terms"))
        for (const auto& t : j.at("cos_terms"))
            h.cos_terms.push_back({t.at("kx").get<int>(), t.at("ky").get<int>(),
                                   t.at("amp").get<double>()});
    return h;
}

inline SurfaceSpec parse_surface(const nlohmann::json& j) {
    if (j.contains("genus")) return SurfaceSpec::closed_surface(j.at("genus").get<int>());
    if (j.contains("holes")) return SurfaceSpec::planar_domain(j.at("holes").get<int>());
    throw nlohmann::json::other_error::create(502, "surface needs 'genus' or 'holes'", &j);
}

} // namespace liouville::io
