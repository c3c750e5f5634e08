#ifndef ICL_SYNTHETIC_TASK_HPP_
#define ICL_SYNTHETIC_TASK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/dataset.hpp"
#include "icl/synthetic_backend.hpp"

namespace icl
{
    // Generator for desk-scale classification tasks whose texts carry cue words
    // understood by the synthetic backend.
    struct SyntheticTaskConfig
    {
        std::string name = "synthetic";
        std::vector<std::string> label_names{"negative", "positive"};
        std::size_t examples = 1000;
        std::size_t cues_per_label = 8;
        std::size_t filler_vocabulary = 200;
        std::vector<double> cue_count_weights{0.3, 0.5, 0.2};  // weights of 0, 1, 2, ... own-label cues
        double distractor_rate = 0.15;  // chance of one cue from another label
        std::size_t min_filler = 3;
        std::size_t max_filler = 14;
        std::vector<double> class_weights;  // empty: uniform
        double cue_weight = 2.0;
        double demo_weight = 0.7;
        double recency = 0.8;
        std::vector<double> label_bias;
        std::uint64_t seed = 0;
    };

    SyntheticTaskConfig synthetic_task_config_from_json(const nlohmann::json& j);
    nlohmann::json to_json(const SyntheticTaskConfig& c);

    struct SyntheticTask
    {
        TaskSpec task;
        SyntheticParams params;
        Dataset dataset;
    };

    SyntheticTask make_synthetic_task(const SyntheticTaskConfig& config);
}  // namespace icl

#endif  // ICL_SYNTHETIC_TASK_HPP_
