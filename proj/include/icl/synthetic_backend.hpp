#ifndef ICL_SYNTHETIC_BACKEND_HPP_
#define ICL_SYNTHETIC_BACKEND_HPP_

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/backend.hpp"
#include "icl/prompt.hpp"
#include "icl/types.hpp"

namespace icl
{
    /// Parameters of the deterministic stand-in language model.
    ///
    /// For a query x and demonstrations (x_1, y_1) ... (x_m, y_m) the score of label y is
    ///
    ///     cue_weight * cues_y(x) + demo_weight * sum_i [y_i == y] * recency^(m - i) + label_bias_y
    ///
    /// where cues_y counts words of x found in the label's cue lexicon. Probabilities are the
    /// softmax of the scores. With recency < 1 later demonstrations weigh more, so order matters.
    struct SyntheticParams
    {
        std::vector<std::set<std::string>> cue_lexicon;
        double cue_weight = 2.0;
        double demo_weight = 0.7;
        double recency = 0.8;
        std::vector<double> label_bias;

        // recency in (0, 1], disjoint cue sets, bias sized to the label count (or empty).
        void validate(std::size_t label_count) const;
    };

    SyntheticParams synthetic_params_from_json(const nlohmann::json& j);
    nlohmann::json to_json(const SyntheticParams& params);

    std::vector<double> synthetic_log_scores(const SyntheticParams& params, std::span<const LabeledText> demos,
                                             std::string_view test_text, std::size_t label_count);

    ClassProbabilities synthetic_score(const SyntheticParams& params, std::span<const LabeledText> demos,
                                       std::string_view test_text, std::size_t label_count);

    // Parses the rendered prompt back through the task template, then applies synthetic_score.
    class SyntheticBackend : public Backend
    {
      public:
        SyntheticBackend(TaskSpec task, SyntheticParams params, std::string model_id = "synthetic");

        ScoreResponse score(const ScoreRequest& request) override;
        std::string model_id() const override { return model_id_; }

        const SyntheticParams& params() const { return params_; }
        const TaskSpec& task() const { return task_; }

      private:
        TaskSpec task_;
        SyntheticParams params_;
        std::string model_id_;
    };
}  // namespace icl

#endif  // ICL_SYNTHETIC_BACKEND_HPP_
