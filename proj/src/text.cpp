#include "icl/text.hpp"

#include <cctype>

namespace icl
{
    namespace
    {
        bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
    }  // namespace

    std::string_view rtrim(std::string_view s)
    {
        while (!s.empty() && is_space(s.back()))
            s.remove_suffix(1);
        return s;
    }

    std::string_view trim(std::string_view s)
    {
        while (!s.empty() && is_space(s.front()))
            s.remove_prefix(1);
        return rtrim(s);
    }

    std::vector<std::string> split_whitespace(std::string_view s)
    {
        std::vector<std::string> out;
        std::size_t i = 0;
        while (i < s.size())
        {
            while (i < s.size() && is_space(s[i]))
                ++i;
            std::size_t j = i;
            while (j < s.size() && !is_space(s[j]))
                ++j;
            if (j > i)
                out.emplace_back(s.substr(i, j - i));
            i = j;
        }
        return out;
    }

    std::vector<std::string> word_tokens(std::string_view s)
    {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s)
        {
            auto u = static_cast<unsigned char>(c);
            if (std::isalnum(u) || c == '_' || u >= 0x80)
                cur.push_back(static_cast<char>(std::tolower(u)));
            else if (!cur.empty())
                out.push_back(std::move(cur)), cur.clear();
        }
        if (!cur.empty())
            out.push_back(std::move(cur));
        return out;
    }

    std::string join(const std::vector<std::string>& parts, std::string_view sep)
    {
        std::string out;
        for (std::size_t i = 0; i < parts.size(); ++i)
        {
            if (i)
                out.append(sep);
            out.append(parts[i]);
        }
        return out;
    }
}  // namespace icl
