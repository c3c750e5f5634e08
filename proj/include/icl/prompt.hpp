#ifndef ICL_PROMPT_HPP_
#define ICL_PROMPT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icl/types.hpp"

namespace icl
{
    // One demonstration rendered through the task template.
    std::string render_demonstration(const TaskSpec& task, std::string_view text, std::string_view label_name);

    // The test stub: template truncated at {label}, trailing whitespace removed.
    std::string render_query(const TaskSpec& task, std::string_view text);

    // Demonstrations joined by the separator, followed by the query stub.
    std::string render_prompt(const DemonstrationSequence& seq, const TaskSpec& task, std::string_view test_text);

    struct LabeledText
    {
        std::string text;
        int label = 0;
    };

    struct ParsedPrompt
    {
        std::vector<LabeledText> demonstrations;
        std::string query;
    };

    // Inverse of render_prompt for texts that do not contain the separator.
    std::optional<ParsedPrompt> parse_prompt(std::string_view prompt, const TaskSpec& task);
}  // namespace icl

#endif  // ICL_PROMPT_HPP_
