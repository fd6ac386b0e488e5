#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

namespace dcl::jsonio {

// Doubles are emitted with 17 significant digits so every value round-trips
// bit-exactly through parse.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Serializer for the artifact's text documents. Matches ordinary JSON except
// that floating-point numbers always carry 17 significant digits.
inline void dump(const nlohmann::ordered_json& j, std::ostream& os, int depth = 0) {
    using nlohmann::ordered_json;
    const std::string pad(static_cast<std::size_t>(depth) * 2, ' ');
    const std::string pad_in(static_cast<std::size_t>(depth + 1) * 2, ' ');
    switch (j.type()) {
        case ordered_json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                os << pad_in << '"' << it.key() << "\": ";
                dump(it.value(), os, depth + 1);
                if (i + 1 < j.size()) os << ',';
                os << '\n';
            }
            os << pad << '}';
            return;
        }
        case ordered_json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            // Arrays of scalars stay on one line; nested structures indent.
            bool scalars = true;
            for (const auto& e : j)
                if (e.is_structured()) scalars = false;
            if (scalars) {
                os << '[';
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ',';
                    dump(j[i], os, depth);
                }
                os << ']';
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << pad_in;
                dump(j[i], os, depth + 1);
                if (i + 1 < j.size()) os << ',';
                os << '\n';
            }
            os << pad << ']';
            return;
        }
        case ordered_json::value_t::number_float:
            os << fmt_double(j.get<double>());
            return;
        default:
            os << j.dump();
            return;
    }
}

} // namespace dcl::jsonio
