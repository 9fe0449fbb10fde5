#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

#include <json.hpp>

namespace hopflab {

// nearest double to the 9-significant-digit decimal form of x
inline double round_sig(double x, int digits = 9) {
    if (!std::isfinite(x) || x == 0) return x;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

inline std::string fmt_sig(double x, int digits = 9) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

inline void round_floats(nlohmann::json& j, int digits = 9) {
    if (j.is_number_float()) {
        j = round_sig(j.get<double>(), digits);
    } else if (j.is_structured()) {
        for (auto& v : j) round_floats(v, digits);
    }
}

}  // namespace hopflab
