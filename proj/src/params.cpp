#include "modekit/params.hpp"

#include <charconv>
#include <sstream>

#include "modekit/error.hpp"

namespace modekit {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues KeyValues::parse(const std::string& text) {
    KeyValues kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw FormatError("line " + std::to_string(lineno) + ": empty key or value");
        }
        if (!kv.values_.emplace(key, value).second) {
            throw FormatError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        }
    }
    return kv;
}

double KeyValues::get_double(const std::string& key, double fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw FormatError("parameter '" + key + "' is not a number: " + it->second);
    }
}

int KeyValues::get_int(const std::string& key, int fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    int v = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw FormatError("parameter '" + key + "' is not an integer: " + s);
    }
    return v;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    used_.insert(key);
    return it->second;
}

void KeyValues::reject_unused() const {
    for (const auto& [key, value] : values_) {
        if (!used_.count(key)) throw FormatError("unknown parameter '" + key + "'");
    }
}

}  // namespace modekit
