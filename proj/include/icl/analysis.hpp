#ifndef ICL_ANALYSIS_HPP_
#define ICL_ANALYSIS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/classifier.hpp"
#include "icl/cql.hpp"
#include "icl/stats.hpp"
#include "icl/types.hpp"

namespace icl
{
    struct RunRecord
    {
        DemonstrationSequence sequence;
        double accuracy = 0.0;
    };

    struct BreakdownRow
    {
        std::size_t bucket = 0;
        std::size_t count = 0;
        std::optional<double> mean;    // absent for an empty bucket
        std::optional<double> stddev;  // sample standard deviation; absent below two runs
    };

    struct BreakdownTable
    {
        std::string key;  // column title for the bucket
        std::vector<BreakdownRow> rows;

        std::size_t total() const;
    };

    // Buckets 0..k by number of demonstrations labeled with class 1. Requires a binary task.
    BreakdownTable balance_breakdown(std::span<const RunRecord> runs, std::size_t label_count, std::size_t k);

    // Buckets 1..min(k, L) by number of distinct labels; empty buckets stay in the table.
    BreakdownTable coverage_breakdown(std::span<const RunRecord> runs, std::size_t label_count, std::size_t k);

    std::string breakdown_csv(const BreakdownTable& table);
    std::string breakdown_markdown(const BreakdownTable& table);

    // Whitespace-separated words of the rendered demonstrations, query excluded.
    std::size_t demonstration_word_count(const DemonstrationSequence& seq, const TaskSpec& task);

    // Correlation between demonstration length and accuracy.
    Correlation length_correlation(std::span<const RunRecord> runs, const TaskSpec& task);
    nlohmann::json to_json(const Correlation& c);

    // n random k-demo sequences drawn from a labeled pool and scored on eval_set.
    std::vector<RunRecord> random_sequence_study(const Classifier& clf, std::span<const Example> pool,
                                                 std::span<const Example> eval_set, std::size_t k, std::size_t n,
                                                 std::uint64_t seed);

    // "step", "prob_0".."prob_{l_max-1}", "entropy", "is_terminal".
    std::vector<std::string> feature_names(const FeatureConfig& features);

    struct Coefficient
    {
        std::string name;
        double mean = 0.0;
        double stddev = 0.0;
    };

    // Weights of single-layer policies, averaged feature by feature. Throws UsageError for an MLP
    // or for policies with mismatched features.
    std::vector<Coefficient> linear_coefficients(std::span<const TrainedPolicy> policies);
    std::string coefficients_csv(const std::vector<Coefficient>& coefficients);
}  // namespace icl

#endif  // ICL_ANALYSIS_HPP_
