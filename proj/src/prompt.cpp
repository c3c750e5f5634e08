#include "icl/prompt.hpp"

#include "icl/errors.hpp"
#include "icl/text.hpp"

namespace icl
{
    namespace
    {
        struct TemplateParts
        {
            std::string_view before_text;
            std::string_view between;
            std::string_view after_label;
        };

        TemplateParts split_template(const TaskSpec& task)
        {
            std::string_view t = task.template_;
            auto text_pos = t.find("{text}");
            auto label_pos = t.find("{label}");
            if (text_pos == std::string_view::npos || label_pos == std::string_view::npos || label_pos < text_pos)
                throw ConfigError("task '" + task.name + "': template needs {text} followed by {label}");
            return {t.substr(0, text_pos), t.substr(text_pos + 6, label_pos - text_pos - 6), t.substr(label_pos + 7)};
        }

        bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
        bool ends_with(std::string_view s, std::string_view p)
        {
            return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
        }
    }  // namespace

    std::string render_demonstration(const TaskSpec& task, std::string_view text, std::string_view label_name)
    {
        auto parts = split_template(task);
        std::string out;
        out.append(parts.before_text).append(text).append(parts.between).append(label_name).append(parts.after_label);
        return out;
    }

    std::string render_query(const TaskSpec& task, std::string_view text)
    {
        auto parts = split_template(task);
        std::string out;
        out.append(parts.before_text).append(text).append(parts.between);
        return std::string(rtrim(out));
    }

    std::string render_prompt(const DemonstrationSequence& seq, const TaskSpec& task, std::string_view test_text)
    {
        std::string out;
        for (const auto& e : seq.items)
        {
            if (!e.label || *e.label < 0 || *e.label >= static_cast<int>(task.label_count()))
                throw ContractViolation("demonstration '" + e.id + "' lacks a valid label");
            out += render_demonstration(task, e.text, task.label_names[static_cast<std::size_t>(*e.label)]);
            out += task.separator;
        }
        out += render_query(task, test_text);
        return out;
    }

    std::optional<ParsedPrompt> parse_prompt(std::string_view prompt, const TaskSpec& task)
    {
        auto parts = split_template(task);
        std::vector<std::string_view> blocks;
        std::size_t start = 0;
        for (auto pos = prompt.find(task.separator); pos != std::string_view::npos;
             pos = prompt.find(task.separator, start))
        {
            blocks.push_back(prompt.substr(start, pos - start));
            start = pos + task.separator.size();
        }
        blocks.push_back(prompt.substr(start));

        ParsedPrompt parsed;
        for (std::size_t b = 0; b + 1 < blocks.size(); ++b)
        {
            std::string_view block = blocks[b];
            if (!starts_with(block, parts.before_text) || !ends_with(block, parts.after_label))
                return std::nullopt;
            block.remove_prefix(parts.before_text.size());
            block.remove_suffix(parts.after_label.size());
            auto cut = block.rfind(parts.between);
            if (cut == std::string_view::npos)
                return std::nullopt;
            auto label = task.label_index(block.substr(cut + parts.between.size()));
            if (!label)
                return std::nullopt;
            parsed.demonstrations.push_back({std::string(block.substr(0, cut)), *label});
        }

        std::string_view query = blocks.back();
        if (!starts_with(query, parts.before_text))
            return std::nullopt;
        query.remove_prefix(parts.before_text.size());
        auto tail = rtrim(parts.between);
        if (!tail.empty())
        {
            if (!ends_with(query, tail))
                return std::nullopt;
            query.remove_suffix(tail.size());
        }
        parsed.query = std::string(query);
        return parsed;
    }
}  // namespace icl
