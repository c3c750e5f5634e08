#ifndef ICL_CQL_HPP_
#define ICL_CQL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icl/features.hpp"
#include "icl/mdp.hpp"
#include "icl/qnetwork.hpp"

namespace icl
{
    struct LossBreakdown
    {
        double loss = 0.0;
        double bellman_sq = 0.0;  // mean over the batch of squared Bellman errors
        double cql_term = 0.0;    // mean of logsumexp(Q over candidate set) - Q(s, a_taken)
        QNetworkParams grads;
    };

    /// Conservative Q-learning objective on one batch:
    ///
    ///     alpha * mean_i [ logsumexp_a Q(s_i, a) - Q(s_i, a_i) ] + 1/2 * mean_i BE_i^2
    ///     BE_i = r_i + gamma * max_a' Q_target(s'_i, a') - Q(s_i, a_i)     (no bootstrap when done)
    ///
    /// Gradients flow only into `params`. With train_mode set, each forward pass through `params`
    /// draws its own dropout mask from rng.
    LossBreakdown cql_loss(const QNetworkParams& params, const QNetworkParams& target,
                           std::span<const Transition* const> batch, double alpha, double gamma,
                           bool train_mode = false, std::mt19937_64* rng = nullptr);

    // The Bellman target r + gamma * max Q_target(s', .) of one transition.
    double bellman_target(const QNetworkParams& target, const Transition& t, double gamma);

    struct AdamState
    {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
        std::vector<double> m;
        std::vector<double> v;
        std::uint64_t t = 0;

        void step(QNetworkParams& params, const QNetworkParams& grads, double lr);
    };

    struct TrainingConfig
    {
        std::size_t train_steps = 8000;
        std::size_t batch_size = 16;
        std::size_t hidden_dim = 16;
        std::size_t hidden_layers = 2;  // 0 gives a linear policy
        std::size_t replay_capacity = 50000;
        double lr = 1e-4;
        double alpha = 0.0;
        std::size_t target_sync = 100;
        double dropout = 0.0;
        double gamma = 1.0;
        InitScheme init = InitScheme::uniform_fan_in;
        std::uint64_t seed = 0;
        std::size_t log_interval = 10;
    };

    nlohmann::json to_json(const TrainingConfig& c);
    TrainingConfig training_config_from_json(const nlohmann::json& j, TrainingConfig base = {});

    // Learning rate x alpha x target sync x dropout, in ascending order of each.
    struct HyperparameterGrid
    {
        std::vector<double> lr{1e-4, 3e-4, 5e-4};
        std::vector<double> alpha{0.0, 0.1, 0.2};
        std::vector<std::size_t> target_sync{100, 200, 400};
        std::vector<double> dropout{0.0, 0.25};

        std::size_t size() const { return lr.size() * alpha.size() * target_sync.size() * dropout.size(); }
        std::vector<TrainingConfig> enumerate(const TrainingConfig& base) const;
    };

    HyperparameterGrid table5_grid();
    HyperparameterGrid grid_from_json(const nlohmann::json& j);
    nlohmann::json to_json(const HyperparameterGrid& g);

    struct TrainedPolicy
    {
        QNetworkParams network;
        FeatureConfig features;
        std::vector<std::string> tasks;
        std::size_t max_label_count = 0;
        nlohmann::json provenance = nlohmann::json::object();

        double q_value(const FeatureVector& state, const FeatureVector& action) const;
    };

    nlohmann::json to_json(const TrainedPolicy& p);
    TrainedPolicy trained_policy_from_json(const nlohmann::json& j);
    void save_policy(const std::string& path, const TrainedPolicy& p);
    TrainedPolicy load_policy(const std::string& path);

    struct LossPoint
    {
        std::size_t step = 0;
        double loss = 0.0;
        double bellman = 0.0;  // root-mean-square Bellman error
        double cql_term = 0.0;
    };

    struct TrainResult
    {
        TrainedPolicy policy;
        std::vector<LossPoint> curve;
    };

    std::string loss_curve_csv(const std::vector<LossPoint>& curve);

    // Optional hook invoked after every optimizer step with (step, params, target).
    using StepObserver = std::function<void(std::size_t, const QNetworkParams&, const QNetworkParams&)>;

    // dataset_digest is computed from the transitions when left empty.
    TrainResult train(const TrainingConfig& config, const std::vector<Transition>& dataset,
                      const FeatureConfig& features, const StepObserver& observer = {},
                      std::string dataset_digest = {});

    struct GridEntry
    {
        TrainingConfig config;
        double validation = 0.0;
    };

    struct GridSearchResult
    {
        TrainingConfig best_config;
        TrainResult best;
        std::vector<GridEntry> entries;  // enumeration order
    };

    // Scores a trained policy; higher is better.
    using PolicyValidator = std::function<double(const TrainedPolicy&)>;

    // Ties on validation go to the earliest entry in ascending (lr, alpha, target_sync, dropout) order.
    GridSearchResult grid_search(const std::vector<TrainingConfig>& grid, const std::vector<Transition>& dataset,
                                 const FeatureConfig& features, const PolicyValidator& validate, int jobs = 1);
}  // namespace icl

#endif  // ICL_CQL_HPP_
