#ifndef ICL_EXPERIMENT_HPP_
#define ICL_EXPERIMENT_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/backend.hpp"
#include "icl/classifier.hpp"
#include "icl/cql.hpp"
#include "icl/dataset.hpp"
#include "icl/features.hpp"
#include "icl/selectors.hpp"

namespace icl
{
    enum class Setting
    {
        seen_examples,  // pick from the labeled training split
        new_examples,   // pick from an unseen unlabeled split of the same task
        new_task,       // train on every other task, pick from the held-out task's unlabeled split
    };

    enum class Method
    {
        random,
        max_entropy,
        reordering,
        best_of_n,
        greedy_oracle,
        learned,
    };

    enum class ProbeMode
    {
        unlabeled_slice,
        generated,  // requires an HTTP backend
    };

    const char* to_string(Setting s);
    const char* to_string(Method m);
    Setting setting_from_string(const std::string& s);
    Method method_from_string(const std::string& s);
    bool is_oracle(Method m);

    struct TaskResources
    {
        Dataset dataset;
        std::shared_ptr<Backend> backend;
    };

    struct ExperimentOptions
    {
        Setting setting = Setting::seen_examples;
        Method method = Method::random;
        std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
        std::size_t k = 4;
        SplitSizes sizes;
        bool calibrate = false;
        std::size_t target_task = 0;
        std::size_t episodes = 2000;  // total, divided across training tasks
        std::optional<FeatureMode> feature_mode;  // default: sorted_padded for new_task, raw_padded otherwise
        std::size_t l_max = 6;
        bool normalize_step = true;
        TrainingConfig train;
        std::optional<HyperparameterGrid> grid;
        std::optional<TrainedPolicy> policy;  // skip training and use this policy
        std::size_t best_of_n = 10;
        std::size_t probe_size = 20;
        ProbeMode probe_mode = ProbeMode::unlabeled_slice;
        int jobs = 1;

        FeatureConfig features() const;
    };

    nlohmann::json to_json(const ExperimentOptions& o);

    struct SeedOutcome
    {
        std::uint64_t seed = 0;
        double accuracy = 0.0;
        std::vector<std::string> ids;
        std::vector<int> labels;
        std::string terminal_reason = "budget";
        std::optional<double> validation;
        std::optional<TrainingConfig> chosen_config;
    };

    struct ExperimentReport
    {
        Setting setting = Setting::seen_examples;
        Method method = Method::random;
        std::string task;
        std::vector<SeedOutcome> runs;
        double mean = 0.0;
        std::optional<double> ci_half_width;
        double stddev = 0.0;
        std::string config_digest;
        bool audit_passed = false;
        std::size_t audited_prompts = 0;

        std::vector<double> accuracies() const;
    };

    nlohmann::json to_json(const ExperimentReport& r);
    std::string to_markdown(const ExperimentReport& r);

    // Splits and a classifier for one task under one seed.
    struct TaskSplit
    {
        const TaskResources* resources = nullptr;
        std::unique_ptr<Classifier> classifier;
        std::vector<Example> train, reward, unlabeled, test;
        std::set<std::string> test_ids;
    };

    // One TaskSplit per task. Classifiers record into audits[t] when audits is given.
    std::vector<TaskSplit> prepare_tasks(const std::vector<TaskResources>& tasks, const ExperimentOptions& options,
                                         std::uint64_t seed, std::vector<PromptAudit>* audits = nullptr);

    // The target task, or every other task in the new-task setting.
    std::vector<std::size_t> training_tasks(const ExperimentOptions& options, std::size_t task_count);

    // Behavior-policy episodes on the train/reward splits of the training tasks.
    std::vector<Transition> offline_dataset(const std::vector<TaskSplit>& splits,
                                            const std::vector<std::size_t>& training, const ExperimentOptions& options,
                                            std::uint64_t seed, int jobs = 1);

    // Swapped-set score averaged over the training tasks.
    double swapped_validation(const TrainedPolicy& policy, const std::vector<TaskSplit>& splits,
                              const std::vector<std::size_t>& training, std::size_t k);

    struct SeedRun
    {
        SeedOutcome outcome;
        SelectionResult selection;
        bool audit_passed = false;
        std::size_t audited_prompts = 0;
    };

    // Selection and test accuracy for a single seed, with its own leakage audit.
    SeedRun run_seed(const std::vector<TaskResources>& tasks, const ExperimentOptions& options, std::uint64_t seed);

    // Throws UsageError for an oracle in the new-task setting and Error when the leakage audit fails.
    ExperimentReport run_setting(const std::vector<TaskResources>& tasks, const ExperimentOptions& options);

    struct SweepRow
    {
        std::size_t size = 0;
        double mean = 0.0;
        std::optional<double> ci_half_width;
    };

    // New-task runs, one per unlabeled-split size.
    std::vector<SweepRow> unlabeled_size_sweep(const std::vector<std::size_t>& sizes,
                                               const std::vector<TaskResources>& tasks, ExperimentOptions options);
    std::string sweep_csv(const std::vector<SweepRow>& rows);
}  // namespace icl

#endif  // ICL_EXPERIMENT_HPP_
