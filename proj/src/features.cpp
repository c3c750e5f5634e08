#include "icl/features.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "icl/errors.hpp"

namespace icl
{
    const char* to_string(FeatureMode mode)
    {
        return mode == FeatureMode::raw_padded ? "raw_padded" : "sorted_padded";
    }

    FeatureMode feature_mode_from_string(const std::string& s)
    {
        if (s == "raw_padded")
            return FeatureMode::raw_padded;
        if (s == "sorted_padded")
            return FeatureMode::sorted_padded;
        throw ConfigError("unknown feature mode '" + s + "'");
    }

    nlohmann::json to_json(const FeatureConfig& c)
    {
        return {{"mode", to_string(c.mode)},
                {"l_max", c.l_max},
                {"budget", c.budget},
                {"normalize_step", c.normalize_step}};
    }

    FeatureConfig feature_config_from_json(const nlohmann::json& j)
    {
        FeatureConfig c;
        try
        {
            if (j.contains("mode"))
                c.mode = feature_mode_from_string(j.at("mode").get<std::string>());
            c.l_max = j.value("l_max", c.l_max);
            c.budget = j.value("budget", c.budget);
            c.normalize_step = j.value("normalize_step", c.normalize_step);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("feature config: ") + e.what());
        }
        if (c.budget == 0)
            throw ConfigError("feature config: budget must be positive");
        return c;
    }

    bool operator==(const FeatureConfig& a, const FeatureConfig& b)
    {
        return a.mode == b.mode && a.l_max == b.l_max && a.budget == b.budget && a.normalize_step == b.normalize_step;
    }

    FeatureVector featurize_state(std::size_t step_index, const FeatureConfig& config)
    {
        double m = static_cast<double>(step_index);
        return {config.normalize_step ? m / static_cast<double>(config.budget) : m};
    }

    FeatureVector featurize_action(const ClassProbabilities& probs, FeatureMode mode, std::size_t l_max)
    {
        const std::size_t L = probs.size();
        if (L > l_max)
            throw ConfigError("label count " + std::to_string(L) + " exceeds feature width " + std::to_string(l_max));
        if (L < 2)
            throw ConfigError("featurization needs at least two labels");
        FeatureVector out(l_max + 2, 0.0);
        std::copy(probs.probs.begin(), probs.probs.end(), out.begin());
        if (mode == FeatureMode::sorted_padded)
            std::sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(L), std::greater<>());
        double h = probs.entropy() / std::log(static_cast<double>(L));
        out[l_max] = std::clamp(h, 0.0, 1.0);
        out[l_max + 1] = 0.0;
        return out;
    }

    FeatureVector terminal_action_features(std::size_t l_max)
    {
        FeatureVector out(l_max + 2, 0.0);
        out[l_max + 1] = 1.0;
        return out;
    }

    FeatureVector concat(const FeatureVector& state, const FeatureVector& action)
    {
        FeatureVector out;
        out.reserve(state.size() + action.size());
        out.insert(out.end(), state.begin(), state.end());
        out.insert(out.end(), action.begin(), action.end());
        return out;
    }
}  // namespace icl
