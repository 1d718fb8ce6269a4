#pragma once

#include <map>
#include <set>
#include <string>

namespace modekit {

/// Flat "key = value" text with '#' comments, as used by the simulator parameter files.
class KeyValues {
public:
    static KeyValues parse(const std::string& text);

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    double get_double(const std::string& key, double fallback);
    int get_int(const std::string& key, int fallback);
    std::string get_string(const std::string& key, const std::string& fallback);

    /// Throws FormatError naming the first key that no getter asked for.
    void reject_unused() const;

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> used_;
};

}  // namespace modekit
