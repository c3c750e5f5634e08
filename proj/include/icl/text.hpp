#ifndef ICL_TEXT_HPP_
#define ICL_TEXT_HPP_

#include <string>
#include <string_view>
#include <vector>

namespace icl
{
    std::string_view trim(std::string_view s);
    std::string_view rtrim(std::string_view s);
    std::vector<std::string> split_whitespace(std::string_view s);
    // Lowercased alphanumeric words; punctuation acts as a delimiter.
    std::vector<std::string> word_tokens(std::string_view s);
    std::string join(const std::vector<std::string>& parts, std::string_view sep);
}  // namespace icl

#endif  // ICL_TEXT_HPP_
