#ifndef ICL_MDP_HPP_
#define ICL_MDP_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "icl/classifier.hpp"
#include "icl/features.hpp"
#include "icl/types.hpp"

namespace icl
{
    // Reveals the gold label of a chosen example.
    using Labeler = std::function<int(const Example&)>;

    // Reads Example::label; throws UsageError for unlabeled examples.
    Labeler gold_labeler();

    struct SelectionState
    {
        DemonstrationSequence chosen;
        std::size_t budget = 4;
        bool terminated = false;
        std::optional<double> cached_score;

        std::size_t step_index() const { return chosen.size(); }
        bool done() const { return terminated || chosen.size() >= budget; }
    };

    struct SelectionAction
    {
        std::optional<Example> candidate;

        static SelectionAction terminal() { return {}; }
        static SelectionAction pick(Example e) { return {std::move(e)}; }
        bool is_terminal() const { return !candidate.has_value(); }
    };

    struct StepResult
    {
        SelectionState next;
        std::optional<int> revealed_label;
    };

    // Throws ContractViolation for an illegal action.
    StepResult step(const SelectionState& state, const SelectionAction& action, std::span<const Example> pool,
                    const Labeler& labeler);

    inline double shaped_reward(double f_prev, double f_next) { return f_next - f_prev; }

    using ActionSet = std::shared_ptr<const std::vector<FeatureVector>>;

    // One MDP step. `actions` is the candidate set at the current state (end-of-prompt last)
    // and contains the taken action at `taken`; `next_actions` is the set at the next state.
    struct Transition
    {
        FeatureVector state;
        ActionSet actions;
        std::size_t taken = 0;
        double reward = 0.0;
        FeatureVector next_state;
        ActionSet next_actions;
        bool done = false;
        std::string task;

        const FeatureVector& action() const { return (*actions)[taken]; }
        std::size_t next_action_count() const { return next_actions ? next_actions->size() : 0; }
    };

    struct Trajectory
    {
        std::vector<Transition> transitions;
        std::vector<std::string> chosen_ids;
        double initial_score = 0.0;
        double final_score = 0.0;
    };

    // Candidate set at `seq`: every remaining pool example (pool order) plus the terminal action.
    std::vector<FeatureVector> candidate_action_features(const Classifier& clf, const DemonstrationSequence& seq,
                                                         std::span<const Example> remaining,
                                                         const FeatureConfig& features);

    struct EpisodeSpec
    {
        std::span<const Example> pool;        // labeled; picked uniformly without replacement
        std::span<const Example> reward_set;  // scored by accuracy
        const Classifier* classifier = nullptr;
        FeatureConfig features;
        std::size_t budget = 4;
        std::optional<double> zero_shot_score;  // f of the empty prompt, when already known
    };

    Trajectory generate_episode(const EpisodeSpec& spec, std::mt19937_64& rng);

    // Episode e uses the stream mix_seed(master_seed, e). Episodes may run on `jobs` threads.
    std::vector<Transition> generate_offline_dataset(std::size_t n_episodes, const EpisodeSpec& spec,
                                                     std::uint64_t master_seed, int jobs = 1);

    // JSONL: a header line, then one record per transition.
    inline constexpr int kTransitionSchemaVersion = 1;
    void write_transitions(const std::filesystem::path& path, const std::vector<Transition>& transitions,
                           const FeatureConfig& features);
    std::vector<Transition> read_transitions(const std::filesystem::path& path, FeatureConfig* features = nullptr);
    std::string transitions_digest(const std::vector<Transition>& transitions);

    class ReplayBuffer
    {
      public:
        explicit ReplayBuffer(std::size_t capacity = 50000, std::uint64_t seed = 0);

        // Evicts the oldest entry once full.
        void push(Transition t);
        // Uniform with replacement; requires size() >= batch_size.
        std::vector<const Transition*> sample(std::size_t batch_size = 16);

        std::size_t size() const { return items_.size(); }
        std::size_t capacity() const { return capacity_; }
        // Oldest first.
        const Transition& at(std::size_t i) const;

      private:
        std::size_t capacity_;
        std::vector<Transition> items_;
        std::size_t head_ = 0;
        std::mt19937_64 rng_;
    };
}  // namespace icl

#endif  // ICL_MDP_HPP_
