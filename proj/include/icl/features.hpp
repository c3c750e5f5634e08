#ifndef ICL_FEATURES_HPP_
#define ICL_FEATURES_HPP_

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/types.hpp"

namespace icl
{
    using FeatureVector = std::vector<double>;

    enum class FeatureMode
    {
        raw_padded,     // label order preserved
        sorted_padded,  // descending; label-agnostic, used across tasks
    };

    const char* to_string(FeatureMode mode);
    FeatureMode feature_mode_from_string(const std::string& s);

    struct FeatureConfig
    {
        FeatureMode mode = FeatureMode::raw_padded;
        std::size_t l_max = 6;
        std::size_t budget = 4;        // k, divides the step count when normalize_step is set
        bool normalize_step = true;

        std::size_t state_dim() const { return 1; }
        std::size_t action_dim() const { return l_max + 2; }
        std::size_t input_dim() const { return state_dim() + action_dim(); }
    };

    nlohmann::json to_json(const FeatureConfig& config);
    FeatureConfig feature_config_from_json(const nlohmann::json& j);
    bool operator==(const FeatureConfig& a, const FeatureConfig& b);

    FeatureVector featurize_state(std::size_t step_index, const FeatureConfig& config);

    // [probability slots (padded to l_max), entropy / ln L, is_terminal = 0].
    FeatureVector featurize_action(const ClassProbabilities& probs, FeatureMode mode, std::size_t l_max);

    // The end-of-prompt action: all zeros except is_terminal = 1.
    FeatureVector terminal_action_features(std::size_t l_max);

    FeatureVector concat(const FeatureVector& state, const FeatureVector& action);
}  // namespace icl

#endif  // ICL_FEATURES_HPP_
