#include "icl/cql.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/parallel.hpp"

namespace icl
{
    double bellman_target(const QNetworkParams& target, const Transition& t, double gamma)
    {
        if (t.done)
            return t.reward;
        if (!t.next_actions || t.next_actions->empty())
            throw UsageError("non-terminal transition without next actions");
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : *t.next_actions)
            best = std::max(best, mlp_forward(target, concat(t.next_state, a)));
        return t.reward + gamma * best;
    }

    LossBreakdown cql_loss(const QNetworkParams& params, const QNetworkParams& target,
                           std::span<const Transition* const> batch, double alpha, double gamma, bool train_mode,
                           std::mt19937_64* rng)
    {
        if (batch.empty())
            throw UsageError("cql_loss on an empty batch");
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        LossBreakdown out;
        out.grads = params.zeros_like();

        double sq_sum = 0.0;
        double cql_sum = 0.0;
        std::vector<ForwardTrace> traces;
        std::vector<double> q;
        for (const Transition* t : batch)
        {
            if (!t->actions || t->actions->empty())
                throw UsageError("transition without a candidate action set");
            const double y = bellman_target(target, *t, gamma);

            // Only the taken action is needed when the regularizer is off.
            const bool need_all = alpha != 0.0;
            const std::size_t n = need_all ? t->actions->size() : 1;
            traces.resize(n);
            q.resize(n);
            std::size_t taken_slot = 0;
            if (need_all)
            {
                for (std::size_t a = 0; a < n; ++a)
                    q[a] = mlp_forward(params, concat(t->state, (*t->actions)[a]), train_mode, rng, &traces[a]);
                taken_slot = t->taken;
            }
            else
            {
                q[0] = mlp_forward(params, concat(t->state, t->action()), train_mode, rng, &traces[0]);
            }

            const double q_taken = q[taken_slot];
            const double be = y - q_taken;
            sq_sum += be * be;
            // d(1/2 mean BE^2)/dQ_taken = -BE / B
            std::vector<double> dq(n, 0.0);
            dq[taken_slot] -= be * inv_b;

            if (need_all)
            {
                double hi = *std::max_element(q.begin(), q.end());
                double z = 0.0;
                for (double v : q)
                    z += std::exp(v - hi);
                const double lse = hi + std::log(z);
                cql_sum += lse - q_taken;
                for (std::size_t a = 0; a < n; ++a)
                    dq[a] += alpha * inv_b * std::exp(q[a] - lse);
                dq[taken_slot] -= alpha * inv_b;
            }
            for (std::size_t a = 0; a < n; ++a)
                if (dq[a] != 0.0)
                    mlp_backward(params, traces[a], dq[a], out.grads);
        }

        out.bellman_sq = sq_sum * inv_b;
        out.cql_term = cql_sum * inv_b;
        out.loss = alpha * out.cql_term + 0.5 * out.bellman_sq;
        if (!std::isfinite(out.loss))
            throw NumericError("cql loss is not finite");
        return out;
    }

    void AdamState::step(QNetworkParams& params, const QNetworkParams& grads, double lr)
    {
        auto p = params.flatten();
        auto g = grads.flatten();
        if (m.empty())
        {
            m.assign(p.size(), 0.0);
            v.assign(p.size(), 0.0);
        }
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon);
        }
        params.assign(p);
    }

    nlohmann::json to_json(const TrainingConfig& c)
    {
        return {{"train_steps", c.train_steps},
                {"batch_size", c.batch_size},
                {"hidden_dim", c.hidden_dim},
                {"hidden_layers", c.hidden_layers},
                {"replay_capacity", c.replay_capacity},
                {"lr", c.lr},
                {"alpha", c.alpha},
                {"target_sync", c.target_sync},
                {"dropout", c.dropout},
                {"gamma", c.gamma},
                {"init", c.init == InitScheme::zeros ? "zeros" : "uniform_fan_in"},
                {"seed", c.seed},
                {"log_interval", c.log_interval}};
    }

    TrainingConfig training_config_from_json(const nlohmann::json& j, TrainingConfig c)
    {
        try
        {
            c.train_steps = j.value("train_steps", c.train_steps);
            c.batch_size = j.value("batch_size", c.batch_size);
            c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
            c.hidden_layers = j.value("hidden_layers", c.hidden_layers);
            c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
            c.lr = j.value("lr", c.lr);
            c.alpha = j.value("alpha", c.alpha);
            c.target_sync = j.value("target_sync", c.target_sync);
            c.dropout = j.value("dropout", c.dropout);
            c.gamma = j.value("gamma", c.gamma);
            if (j.contains("init"))
            {
                auto s = j.at("init").get<std::string>();
                if (s == "zeros")
                    c.init = InitScheme::zeros;
                else if (s == "uniform_fan_in")
                    c.init = InitScheme::uniform_fan_in;
                else
                    throw ConfigError("unknown init scheme '" + s + "'");
            }
            c.seed = j.value("seed", c.seed);
            c.log_interval = j.value("log_interval", c.log_interval);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("training config: ") + e.what());
        }
        if (c.batch_size == 0 || c.target_sync == 0 || c.replay_capacity == 0)
            throw ConfigError("training config: batch_size, target_sync and replay_capacity must be positive");
        return c;
    }

    std::vector<TrainingConfig> HyperparameterGrid::enumerate(const TrainingConfig& base) const
    {
        auto sorted = [](auto v) {
            std::sort(v.begin(), v.end());
            return v;
        };
        std::vector<TrainingConfig> out;
        for (double lr_v : sorted(lr))
            for (double a : sorted(alpha))
                for (std::size_t s : sorted(target_sync))
                    for (double d : sorted(dropout))
                    {
                        TrainingConfig c = base;
                        c.lr = lr_v;
                        c.alpha = a;
                        c.target_sync = s;
                        c.dropout = d;
                        out.push_back(c);
                    }
        return out;
    }

    HyperparameterGrid table5_grid() { return {}; }

    HyperparameterGrid grid_from_json(const nlohmann::json& j)
    {
        if (j.is_string())
        {
            if (j.get<std::string>() == "table5")
                return table5_grid();
            throw ConfigError("unknown grid name '" + j.get<std::string>() + "'");
        }
        HyperparameterGrid g;
        try
        {
            g.lr = j.value("lr", g.lr);
            g.alpha = j.value("alpha", g.alpha);
            g.target_sync = j.value("target_sync", g.target_sync);
            g.dropout = j.value("dropout", g.dropout);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw ConfigError(std::string("grid: ") + e.what());
        }
        if (g.size() == 0)
            throw ConfigError("grid must not be empty");
        return g;
    }

    nlohmann::json to_json(const HyperparameterGrid& g)
    {
        return {{"lr", g.lr}, {"alpha", g.alpha}, {"target_sync", g.target_sync}, {"dropout", g.dropout}};
    }

    double TrainedPolicy::q_value(const FeatureVector& state, const FeatureVector& action) const
    {
        return mlp_forward(network, concat(state, action));
    }

    nlohmann::json to_json(const TrainedPolicy& p)
    {
        return {{"schema", "icl-select/policy"},
                {"version", 1},
                {"network", to_json(p.network)},
                {"features", to_json(p.features)},
                {"tasks", p.tasks},
                {"max_label_count", p.max_label_count},
                {"provenance", p.provenance}};
    }

    TrainedPolicy trained_policy_from_json(const nlohmann::json& j)
    {
        TrainedPolicy p;
        try
        {
            if (j.value("schema", "") != "icl-select/policy")
                throw DataError("not a policy file");
            p.network = q_network_from_json(j.at("network"));
            p.features = feature_config_from_json(j.at("features"));
            p.tasks = j.value("tasks", std::vector<std::string>{});
            p.max_label_count = j.value("max_label_count", std::size_t{0});
            p.provenance = j.value("provenance", nlohmann::json::object());
        }
        catch (const nlohmann::json::exception& e)
        {
            throw DataError(std::string("policy: ") + e.what());
        }
        if (p.network.input_dim() != p.features.input_dim())
            throw DataError("policy network input does not match its featurization");
        return p;
    }

    void save_policy(const std::string& path, const TrainedPolicy& p)
    {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
            throw DataError("cannot write " + path);
        out << to_json(p).dump(1) << '\n';
    }

    TrainedPolicy load_policy(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw DataError("cannot read " + path);
        try
        {
            return trained_policy_from_json(nlohmann::json::parse(in));
        }
        catch (const nlohmann::json::parse_error& e)
        {
            throw DataError(path + ": " + e.what());
        }
    }

    std::string loss_curve_csv(const std::vector<LossPoint>& curve)
    {
        std::ostringstream out;
        out.precision(10);
        out << "step,loss,be,cql_term\n";
        for (const auto& p : curve)
            out << p.step << ',' << p.loss << ',' << p.bellman << ',' << p.cql_term << '\n';
        return out.str();
    }

    TrainResult train(const TrainingConfig& config, const std::vector<Transition>& dataset,
                      const FeatureConfig& features, const StepObserver& observer, std::string dataset_digest)
    {
        if (dataset.empty())
            throw UsageError("training requires a non-empty offline dataset");
        std::mt19937_64 init_rng(mix_seed(config.seed, 0));
        std::mt19937_64 dropout_rng(mix_seed(config.seed, 2));

        TrainResult result;
        auto& policy = result.policy;
        policy.features = features;
        policy.network = make_q_network(features.input_dim(), config.hidden_dim, config.hidden_layers, config.dropout,
                                         config.init, init_rng);
        std::vector<std::string> tasks;
        for (const auto& t : dataset)
            if (std::find(tasks.begin(), tasks.end(), t.task) == tasks.end())
                tasks.push_back(t.task);
        policy.tasks = tasks;
        policy.provenance = {{"config", to_json(config)},
                             {"seed", config.seed},
                             {"dataset_digest", dataset_digest.empty() ? transitions_digest(dataset) : dataset_digest},
                             {"transitions", dataset.size()}};

        if (config.train_steps == 0)
            return result;

        ReplayBuffer buffer(config.replay_capacity, mix_seed(config.seed, 1));
        for (const auto& t : dataset)
            buffer.push(t);
        if (buffer.size() < config.batch_size)
            throw UsageError("offline dataset smaller than one batch");

        QNetworkParams& net = policy.network;
        QNetworkParams target = net;
        AdamState adam;
        for (std::size_t step = 1; step <= config.train_steps; ++step)
        {
            auto batch = buffer.sample(config.batch_size);
            LossBreakdown lb;
            try
            {
                lb = cql_loss(net, target, batch, config.alpha, config.gamma, true, &dropout_rng);
            }
            catch (const NumericError& e)
            {
                throw NumericError(std::string(e.what()) + " at step " + std::to_string(step) + " (lr " +
                                   std::to_string(config.lr) + ", alpha " + std::to_string(config.alpha) + ")");
            }
            adam.step(net, lb.grads, config.lr);
            if (!net.all_finite())
                throw NumericError("q-network parameters diverged at step " + std::to_string(step));
            if (step % config.target_sync == 0)
                target = net;
            if (config.log_interval && (step % config.log_interval == 0 || step == 1))
                result.curve.push_back({step, lb.loss, std::sqrt(lb.bellman_sq), lb.cql_term});
            if (observer)
                observer(step, net, target);
        }
        return result;
    }

    GridSearchResult grid_search(const std::vector<TrainingConfig>& grid, const std::vector<Transition>& dataset,
                                 const FeatureConfig& features, const PolicyValidator& validate, int jobs)
    {
        if (grid.empty())
            throw UsageError("grid search over an empty grid");
        const std::string digest = transitions_digest(dataset);
        std::vector<TrainResult> results(grid.size());
        std::vector<double> scores(grid.size());
        parallel_for(grid.size(), jobs, [&](std::size_t i) {
            results[i] = train(grid[i], dataset, features, {}, digest);
            scores[i] = validate(results[i].policy);
        });

        // Rank by validation, then by (lr, alpha, target_sync, dropout) ascending.
        std::vector<std::size_t> order(grid.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        auto key = [&](std::size_t i) {
            const auto& c = grid[i];
            return std::make_tuple(-scores[i], c.lr, c.alpha, c.target_sync, c.dropout, i);
        };
        std::size_t best = *std::min_element(order.begin(), order.end(),
                                             [&](std::size_t a, std::size_t b) { return key(a) < key(b); });

        GridSearchResult out;
        for (std::size_t i = 0; i < grid.size(); ++i)
            out.entries.push_back({grid[i], scores[i]});
        out.best_config = grid[best];
        out.best = std::move(results[best]);
        out.best.policy.provenance["validation"] = scores[best];
        return out;
    }
}  // namespace icl
