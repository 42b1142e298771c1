#include "hysterelax/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "hysterelax/error.hpp"

namespace hysterelax {

namespace {

void dump(const Json& v, int indent, std::string& out) {
    const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
    const std::string close(static_cast<std::size_t>(indent), ' ');
    switch (v.type()) {
        case Json::value_t::object: {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad + Json(it.key()).dump() + ": ";
                dump(it.value(), indent + 2, out);
            }
            out += "\n" + close + "}";
            return;
        }
        case Json::value_t::array: {
            if (v.empty()) {
                out += "[]";
                return;
            }
            // arrays of scalars stay on one line
            const bool flat = std::none_of(v.begin(), v.end(), [](const Json& e) { return e.is_structured(); });
            out += flat ? "[" : "[\n";
            bool first = true;
            for (const auto& e : v) {
                if (!first) out += flat ? ", " : ",\n";
                first = false;
                if (!flat) out += pad;
                dump(e, indent + 2, out);
            }
            out += flat ? "]" : "\n" + close + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_number(v.get<double>());
            return;
        default:
            out += v.dump();
    }
}

}  // namespace

std::string format_number(double value) {
    if (!std::isfinite(value)) return "null";
    return fmt::format("{:.17g}", value);
}

std::string dump_json(const Json& value) {
    std::string out;
    dump(value, 0, out);
    out += "\n";
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    os << text;
    if (!os) throw ConfigError(fmt::format("write to '{}' failed", path.string()));
}

}  // namespace hysterelax
