#include "vqlab/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vqlab {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void KeyValueConfig::declare(const std::string& key, const std::string& defaultValue,
                             const std::string& help) {
    if (values_.count(key)) throw ConfigError("duplicate key declaration: " + key);
    order_.push_back(key);
    values_[key] = defaultValue;
    decls_[key] = {help, defaultValue};
}

void KeyValueConfig::loadFile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path + ":" + std::to_string(lineNo) +
                              ": expected `key = value`, got `" + line + "`");
        set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    it->second = value;
}

const std::string& KeyValueConfig::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key: " + key);
    return it->second;
}

long long KeyValueConfig::integer(const std::string& key) const {
    const std::string& v = str(key);
    try {
        std::size_t pos = 0;
        const long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": `" + v + "` is not an integer");
    }
}

std::uint64_t KeyValueConfig::u64(const std::string& key) const {
    const std::string& v = str(key);
    try {
        std::size_t pos = 0;
        const unsigned long long r = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": `" + v + "` is not an unsigned integer");
    }
}

double KeyValueConfig::real(const std::string& key) const {
    const std::string& v = str(key);
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("key " + key + ": `" + v + "` is not a number");
    }
}

bool KeyValueConfig::flag(const std::string& key) const {
    std::string v = str(key);
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    throw ConfigError("key " + key + ": `" + str(key) + "` is not a boolean");
}

std::string KeyValueConfig::describe() const {
    std::ostringstream ss;
    for (const auto& key : order_) ss << key << " = " << values_.at(key) << "\n";
    return ss.str();
}

std::string KeyValueConfig::helpText() const {
    std::ostringstream ss;
    for (const auto& key : order_) {
        const auto& d = decls_.at(key);
        ss << "  " << key << " (default: "
           << (d.defaultValue.empty() ? "<empty>" : d.defaultValue) << ")";
        if (!d.help.empty()) ss << " — " << d.help;
        ss << "\n";
    }
    return ss.str();
}

}  // namespace vqlab
