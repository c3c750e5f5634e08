#include "icl/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "icl/errors.hpp"
#include "icl/text.hpp"

namespace icl
{
    namespace
    {
        bool all_digits(std::string_view s)
        {
            return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
        }

        std::size_t count_occurrences(std::string_view haystack, std::string_view needle)
        {
            std::size_t n = 0;
            for (auto pos = haystack.find(needle); pos != std::string_view::npos; pos = haystack.find(needle, pos + needle.size()))
                ++n;
            return n;
        }
    }  // namespace

    bool id_less(std::string_view a, std::string_view b)
    {
        if (all_digits(a) && all_digits(b))
        {
            auto strip = [](std::string_view s) {
                auto p = s.find_first_not_of('0');
                return p == std::string_view::npos ? std::string_view{"0"} : s.substr(p);
            };
            auto sa = strip(a), sb = strip(b);
            if (sa.size() != sb.size())
                return sa.size() < sb.size();
            return sa < sb;
        }
        return a < b;
    }

    void TaskSpec::validate() const
    {
        if (label_names.size() < 2)
            throw ConfigError("task '" + name + "': at least two labels required");
        if (proxy_tokens.size() != label_names.size())
            throw ConfigError("task '" + name + "': proxy_tokens and label_names differ in length");
        std::set<std::string> distinct(proxy_tokens.begin(), proxy_tokens.end());
        if (distinct.size() != proxy_tokens.size())
            throw ConfigError("task '" + name + "': proxy tokens must be pairwise distinct");
        if (count_occurrences(template_, "{text}") != 1 || count_occurrences(template_, "{label}") != 1)
            throw ConfigError("task '" + name + "': template must contain {text} and {label} exactly once");
        if (template_.find("{text}") > template_.find("{label}"))
            throw ConfigError("task '" + name + "': {text} must precede {label} in the template");
        if (separator.empty())
            throw ConfigError("task '" + name + "': separator must be non-empty");
    }

    std::optional<int> TaskSpec::label_index(std::string_view label) const
    {
        for (std::size_t i = 0; i < label_names.size(); ++i)
            if (label_names[i] == label)
                return static_cast<int>(i);
        return std::nullopt;
    }

    TaskSpec task_spec_from_json(const nlohmann::json& j)
    {
        TaskSpec t;
        try
        {
            t.name = j.at("name").get<std::string>();
            t.label_names = j.at("label_names").get<std::vector<std::string>>();
            t.proxy_tokens = j.at("proxy_tokens").get<std::vector<std::string>>();
            if (j.contains("template"))
                t.template_ = j.at("template").get<std::string>();
            if (j.contains("separator"))
                t.separator = j.at("separator").get<std::string>();
            if (j.contains("content_free_inputs"))
                t.content_free_inputs = j.at("content_free_inputs").get<std::vector<std::string>>();
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("task spec: ") + e.what());
        }
        t.validate();
        return t;
    }

    nlohmann::json to_json(const TaskSpec& t)
    {
        return {{"name", t.name},
                {"label_names", t.label_names},
                {"proxy_tokens", t.proxy_tokens},
                {"template", t.template_},
                {"separator", t.separator},
                {"content_free_inputs", t.content_free_inputs}};
    }

    TaskSpec load_task_spec(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open task spec " + path);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError("task spec " + path + ": " + e.what());
        }
        return task_spec_from_json(j);
    }

    void validate_example(const Example& e, const TaskSpec& task)
    {
        if (trim(e.text).empty())
            throw ConfigError("example '" + e.id + "': empty text");
        if (e.label && (*e.label < 0 || *e.label >= static_cast<int>(task.label_count())))
            throw ConfigError("example '" + e.id + "': label " + std::to_string(*e.label) + " out of range for task '" +
                              task.name + "'");
    }

    DemonstrationSequence DemonstrationSequence::appended(Example example) const
    {
        DemonstrationSequence out = *this;
        out.items.push_back(std::move(example));
        return out;
    }

    bool DemonstrationSequence::contains(std::string_view id) const
    {
        return std::any_of(items.begin(), items.end(), [&](const Example& e) { return e.id == id; });
    }

    std::vector<std::string> DemonstrationSequence::ids() const
    {
        std::vector<std::string> out;
        out.reserve(items.size());
        for (const auto& e : items)
            out.push_back(e.id);
        return out;
    }

    std::vector<int> DemonstrationSequence::labels() const
    {
        std::vector<int> out;
        out.reserve(items.size());
        for (const auto& e : items)
            out.push_back(e.label.value_or(-1));
        return out;
    }

    void DemonstrationSequence::validate(const TaskSpec& task) const
    {
        std::set<std::string> seen;
        for (const auto& e : items)
        {
            if (!e.label)
                throw ContractViolation("demonstration '" + e.id + "' has no label");
            validate_example(e, task);
            if (!seen.insert(e.id).second)
                throw ContractViolation("demonstration id '" + e.id + "' repeated");
        }
    }

    int ClassProbabilities::argmax() const
    {
        return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
    }

    double ClassProbabilities::entropy() const
    {
        double h = 0.0;
        for (double p : probs)
            if (p > 0.0)
                h -= p * std::log(p);
        return h;
    }

    ClassProbabilities ClassProbabilities::uniform(std::size_t n)
    {
        return {std::vector<double>(n, 1.0 / static_cast<double>(n))};
    }

    ClassProbabilities ClassProbabilities::from_log_scores(const std::vector<double>& scores)
    {
        if (scores.empty())
            throw NumericError("softmax of an empty score vector");
        for (double s : scores)
            if (!std::isfinite(s))
                throw NumericError("non-finite log-score");
        double hi = *std::max_element(scores.begin(), scores.end());
        std::vector<double> w(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            w[i] = std::exp(scores[i] - hi);
        return normalized(std::move(w));
    }

    ClassProbabilities ClassProbabilities::normalized(std::vector<double> weights)
    {
        double total = 0.0;
        for (double w : weights)
        {
            if (!std::isfinite(w) || w < 0.0)
                throw NumericError("probability weight is negative or non-finite");
            total += w;
        }
        if (!(total > 0.0) || !std::isfinite(total))
            throw NumericError("probability weights sum to zero");
        for (double& w : weights)
            w /= total;
        return {std::move(weights)};
    }
}  // namespace icl
