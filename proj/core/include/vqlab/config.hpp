#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace vqlab {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Plain-text `key = value` configuration. Keys must be declared (with their
// defaults) before a file or override can set them; anything else is
// rejected so typos never pass silently.
class KeyValueConfig {
public:
    void declare(const std::string& key, const std::string& defaultValue,
                 const std::string& help = "");

    // `key = value` lines; '#' starts a comment, blank lines ignored
    void loadFile(const std::string& path);
    void set(const std::string& key, const std::string& value);  // CLI override

    bool known(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& str(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::uint64_t u64(const std::string& key) const;
    double real(const std::string& key) const;
    bool flag(const std::string& key) const;  // 0/1/true/false/yes/no

    // effective configuration, declaration order, `key = value` lines
    std::string describe() const;
    std::string helpText() const;  // keys with defaults and help strings

private:
    struct Decl {
        std::string help;
        std::string defaultValue;
    };
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
    std::map<std::string, Decl> decls_;
};

}  // namespace vqlab
