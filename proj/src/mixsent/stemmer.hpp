#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace mixsent::text {

class Stemmer {
public:
    virtual ~Stemmer() = default;
    virtual std::string stem(const std::string& token) const = 0;
    virtual std::string_view name() const = 0;
};

// Porter's suffix-stripping algorithm as originally published. Tokens that
// are not all lowercase ASCII letters are returned unchanged.
std::string stem_english(const std::string& token);

// "english" or "none"; any other plug-in name is a configuration error.
std::unique_ptr<Stemmer> make_stemmer(const std::string& name);

}  // namespace mixsent::text
