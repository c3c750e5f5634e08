#ifndef ICL_DATASET_HPP_
#define ICL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/types.hpp"

namespace icl
{
    struct Dataset
    {
        TaskSpec task;
        std::vector<Example> examples;
        std::string digest;  // SHA-256 over the canonical example records

        const Example& by_id(const std::string& id) const;
        std::vector<Example> subset(const std::vector<std::string>& ids) const;
    };

    // Rows {"text": string, "label": int}; ids are row indices. Errors name the offending line.
    Dataset load_dataset(const std::filesystem::path& path, const TaskSpec& task);
    Dataset make_dataset(const TaskSpec& task, std::vector<Example> examples);
    void write_dataset(const std::filesystem::path& path, const Dataset& dataset);
    std::string dataset_digest(const std::vector<Example>& examples);

    struct SplitSizes
    {
        std::size_t train = 100;
        std::size_t reward = 100;
        std::size_t unlabeled = 100;
        std::size_t test = 500;

        std::size_t total() const { return train + reward + unlabeled + test; }
    };

    nlohmann::json to_json(const SplitSizes& s);
    SplitSizes split_sizes_from_json(const nlohmann::json& j, SplitSizes base = {});

    using SplitMap = std::map<std::string, std::vector<std::string>>;

    // Shuffle seeded by (dataset digest, seed), then carve train, reward, unlabeled, test in that order.
    SplitMap make_splits(const Dataset& dataset, const SplitSizes& sizes, std::uint64_t seed);
}  // namespace icl

#endif  // ICL_DATASET_HPP_
