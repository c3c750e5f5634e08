#ifndef ICL_TYPES_HPP_
#define ICL_TYPES_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace icl
{
    struct Example
    {
        std::string id;
        std::string text;
        std::optional<int> label;
    };

    // Orders ids numerically when both are non-negative integers, lexicographically otherwise.
    bool id_less(std::string_view a, std::string_view b);

    struct TaskSpec
    {
        std::string name;
        std::vector<std::string> label_names;
        std::vector<std::string> proxy_tokens;
        std::string template_ = "Input: {text}\nLabel: {label}";
        std::string separator = "\n\n";
        std::vector<std::string> content_free_inputs{"N/A"};

        std::size_t label_count() const { return label_names.size(); }

        // Throws ConfigError when any invariant is broken.
        void validate() const;

        // Label index whose name matches exactly, or nullopt.
        std::optional<int> label_index(std::string_view name) const;
    };

    TaskSpec task_spec_from_json(const nlohmann::json& j);
    nlohmann::json to_json(const TaskSpec& task);
    TaskSpec load_task_spec(const std::string& path);

    // Throws ConfigError when the example violates the task's invariants.
    void validate_example(const Example& example, const TaskSpec& task);

    struct DemonstrationSequence
    {
        std::vector<Example> items;

        std::size_t size() const { return items.size(); }
        bool empty() const { return items.empty(); }

        DemonstrationSequence appended(Example example) const;
        bool contains(std::string_view id) const;
        std::vector<std::string> ids() const;
        std::vector<int> labels() const;

        // Every item labeled and in range, ids pairwise distinct.
        void validate(const TaskSpec& task) const;
    };

    struct ClassProbabilities
    {
        std::vector<double> probs;

        std::size_t size() const { return probs.size(); }
        double operator[](std::size_t i) const { return probs[i]; }

        // Lowest index among maximal entries.
        int argmax() const;
        // Shannon entropy in nats.
        double entropy() const;

        static ClassProbabilities uniform(std::size_t n);
        // Softmax of arbitrary finite log-scores, shift-stabilized.
        static ClassProbabilities from_log_scores(const std::vector<double>& scores);
        // Divides by the sum; throws NumericError on zero, negative or non-finite entries.
        static ClassProbabilities normalized(std::vector<double> weights);
    };
}  // namespace icl

#endif  // ICL_TYPES_HPP_
