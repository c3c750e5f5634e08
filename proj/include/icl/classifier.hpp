#ifndef ICL_CLASSIFIER_HPP_
#define ICL_CLASSIFIER_HPP_

#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "icl/backend.hpp"
#include "icl/prompt.hpp"
#include "icl/types.hpp"

namespace icl
{
    inline constexpr double kMinPrior = 1e-12;

    // Softmax over the proxy-token log-scores, then calibration when a prior is given.
    ClassProbabilities predict(Backend& backend, const DemonstrationSequence& seq, const TaskSpec& task,
                               std::string_view test_text,
                               const std::optional<ClassProbabilities>& calibration_prior = std::nullopt);

    // Mean uncalibrated prediction over the task's content-free inputs, conditioned on seq.
    ClassProbabilities estimate_content_free_prior(Backend& backend, const DemonstrationSequence& seq,
                                                   const TaskSpec& task);

    // q_y proportional to p_y / prior_y.
    ClassProbabilities apply_calibration(const ClassProbabilities& p, const ClassProbabilities& prior);

    // Fraction of eval_set whose argmax prediction equals the gold label.
    double accuracy(Backend& backend, const DemonstrationSequence& seq, const TaskSpec& task,
                    std::span<const Example> eval_set, bool calibrated);

    // Records every demonstration id that reaches a rendered prompt.
    class PromptAudit
    {
      public:
        void record(const DemonstrationSequence& seq);
        std::set<std::string> ids() const;
        std::size_t prompt_count() const;

      private:
        mutable std::mutex mutex_;
        std::set<std::string> ids_;
        std::size_t prompts_ = 0;
    };

    // Backend + task bundle shared by the MDP, selectors and experiments.
    // Calibration, when enabled, re-estimates the content-free prior for each sequence.
    class Classifier
    {
      public:
        Classifier(Backend& backend, TaskSpec task, bool calibrate = false, PromptAudit* audit = nullptr);

        const TaskSpec& task() const { return task_; }
        Backend& backend() const { return *backend_; }
        bool calibrated() const { return calibrate_; }
        std::size_t label_count() const { return task_.label_count(); }

        ClassProbabilities predict(const DemonstrationSequence& seq, std::string_view text) const;
        // One prior estimate shared by all texts.
        std::vector<ClassProbabilities> predict_all(const DemonstrationSequence& seq,
                                                    std::span<const std::string> texts) const;
        double accuracy(const DemonstrationSequence& seq, std::span<const Example> eval_set) const;

      private:
        std::optional<ClassProbabilities> prior_for(const DemonstrationSequence& seq) const;

        Backend* backend_;
        TaskSpec task_;
        bool calibrate_;
        PromptAudit* audit_;
    };
}  // namespace icl

#endif  // ICL_CLASSIFIER_HPP_
