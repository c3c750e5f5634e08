#ifndef ICL_SELECTORS_HPP_
#define ICL_SELECTORS_HPP_

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/classifier.hpp"
#include "icl/cql.hpp"
#include "icl/mdp.hpp"

namespace icl
{
    class HttpBackend;

    enum class TerminalReason
    {
        budget,
        early_stop,
    };

    struct StepLog
    {
        std::vector<std::string> candidate_ids;  // scored candidates; "<end>" for the terminal action
        std::vector<double> scores;
        std::string chosen_id;
    };

    struct SelectionResult
    {
        DemonstrationSequence sequence;
        std::vector<StepLog> steps;
        TerminalReason terminal_reason = TerminalReason::budget;
        // Reward-set accuracies of sampled sequences (best-of-n) and oracle evaluation counts.
        std::vector<double> sample_scores;
        std::size_t evaluations = 0;
    };

    inline constexpr const char* kEndOfPrompt = "<end>";

    nlohmann::json to_json(const SelectionResult& r);

    // Greedy in Q; candidate ties go to the lowest id, the end-of-prompt action wins only strictly.
    SelectionResult select_learned(const TrainedPolicy& policy, std::span<const Example> pool, const Labeler& labeler,
                                   const Classifier& clf, std::size_t k);

    SelectionResult select_random(std::span<const Example> pool, std::size_t k, std::mt19937_64& rng,
                                  const Labeler& labeler = gold_labeler());

    SelectionResult select_max_entropy(std::span<const Example> pool, const Classifier& clf, std::size_t k,
                                       const Labeler& labeler = gold_labeler());

    // Keeps the first of n random sequences with the highest reward-set accuracy.
    SelectionResult select_best_of_n(std::span<const Example> pool, std::span<const Example> reward_set,
                                     const Classifier& clf, std::size_t k, std::size_t n, std::mt19937_64& rng);

    SelectionResult select_greedy_oracle(std::span<const Example> pool, std::span<const Example> reward_set,
                                         const Classifier& clf, std::size_t k);

    struct ReorderResult
    {
        std::vector<std::size_t> permutation;  // new position -> original index
        double entropy = 0.0;
        std::vector<double> entropies;  // every permutation, lexicographic order
        DemonstrationSequence sequence;
    };

    // Entropy of the histogram of predicted labels over the probe texts.
    double global_entropy(const Classifier& clf, const DemonstrationSequence& seq,
                          std::span<const std::string> probe_texts);

    // Enumerates all orderings (up to 4 demonstrations); ties go to the lowest permutation index.
    ReorderResult reorder_global_entropy(const DemonstrationSequence& seq, std::span<const std::string> probe_texts,
                                         const Classifier& clf);

    // Probe texts sampled from the backend conditioned on the demonstrations.
    std::vector<std::string> generate_probe_texts(HttpBackend& backend, const DemonstrationSequence& seq,
                                                  const TaskSpec& task, std::size_t n, int max_tokens = 48);

    // Swapped-set validation: pick from the reward set, score on the training set.
    double validate_swapped(const TrainedPolicy& policy, const Classifier& clf, std::span<const Example> train_set,
                            std::span<const Example> reward_set, std::size_t k);
}  // namespace icl

#endif  // ICL_SELECTORS_HPP_
