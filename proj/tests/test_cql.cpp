#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "icl/cql.hpp"
#include "icl/digest.hpp"
#include "icl/errors.hpp"
#include "icl/qnetwork.hpp"

using namespace icl;
using namespace icl::testing;

namespace
{
    QNetworkParams zero_network(std::size_t input_dim, double out_bias = 0.0)
    {
        std::mt19937_64 rng(0);
        auto p = make_q_network(input_dim, 16, 2, 0.0, InitScheme::zeros, rng);
        p.layers.back().bias[0] = out_bias;
        return p;
    }

    Transition terminal_transition(double reward, std::size_t n_actions, std::size_t action_dim)
    {
        Transition t;
        t.state = {0.0};
        t.actions = std::make_shared<const std::vector<FeatureVector>>(n_actions, FeatureVector(action_dim, 0.5));
        t.taken = 0;
        t.reward = reward;
        t.next_state = {1.0};
        t.done = true;
        return t;
    }

    double loss_of(const QNetworkParams& p, const std::vector<Transition>& batch, double alpha)
    {
        std::vector<const Transition*> ptrs;
        for (const auto& t : batch)
            ptrs.push_back(&t);
        return cql_loss(p, p, ptrs, alpha, 1.0).loss;
    }

    std::vector<Transition> toy_dataset(std::size_t n, std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        return random_transitions(n, 8, rng);
    }
}  // namespace

TEST_CASE("mlp forward hand cases")
{
    auto flat = zero_network(3, 0.75);
    CHECK(mlp_forward(flat, std::vector<double>{0.1, -4.0, 9.0}) == 0.75);
    CHECK(mlp_forward(flat, std::vector<double>{0.0, 0.0, 0.0}) == 0.75);

    // Q = 2 relu(x) + 3 relu(-x) + 0.5
    QNetworkParams p;
    p.layers.emplace_back(1, 2);
    p.layers.emplace_back(2, 1);
    p.layers[0].w(0, 0) = 1.0;
    p.layers[0].w(1, 0) = -1.0;
    p.layers[1].w(0, 0) = 2.0;
    p.layers[1].w(0, 1) = 3.0;
    p.layers[1].bias[0] = 0.5;
    CHECK(mlp_forward(p, std::vector<double>{1.5}) == doctest::Approx(3.5).epsilon(1e-15));
    CHECK(mlp_forward(p, std::vector<double>{-2.0}) == doctest::Approx(6.5).epsilon(1e-15));
    CHECK(mlp_forward(p, std::vector<double>{0.0}) == 0.5);

    CHECK_THROWS(mlp_forward(p, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("mlp shapes, init and eval determinism")
{
    std::mt19937_64 rng(5);
    auto p = make_q_network(9, 16, 2, 0.25, InitScheme::uniform_fan_in, rng);
    REQUIRE(p.layers.size() == 3);
    CHECK(p.layers[0].in == 9);
    CHECK(p.layers[0].out == 16);
    CHECK(p.layers[1].in == 16);
    CHECK(p.layers[2].out == 1);
    CHECK(p.parameter_count() == 9 * 16 + 16 + 16 * 16 + 16 + 16 + 1);
    CHECK(p.hidden_layer_count() == 2);
    for (double w : p.layers[0].weights)
        CHECK(std::abs(w) <= 1.0 / 3.0);

    std::vector<double> x(9, 0.3);
    CHECK(mlp_forward(p, x) == mlp_forward(p, x));

    // Train mode with the same seed reproduces; a different seed changes the mask.
    std::mt19937_64 a(1), b(1), c(2);
    double qa = mlp_forward(p, x, true, &a);
    CHECK(qa == mlp_forward(p, x, true, &b));
    bool differs = false;
    for (int i = 0; i < 10 && !differs; ++i)
        differs = mlp_forward(p, x, true, &c) != qa;
    CHECK(differs);

    std::mt19937_64 r2(0);
    auto linear = make_q_network(9, 16, 0, 0.0, InitScheme::zeros, r2);
    CHECK(linear.layers.size() == 1);
    CHECK(linear.hidden_layer_count() == 0);
}

TEST_CASE("flatten and assign round trip, json round trip")
{
    std::mt19937_64 rng(7);
    auto p = make_q_network(5, 4, 2, 0.25, InitScheme::uniform_fan_in, rng);
    auto flat = p.flatten();
    auto z = p.zeros_like();
    z.assign(flat);
    CHECK(z.flatten() == flat);
    auto back = q_network_from_json(to_json(p));
    CHECK(back.flatten() == flat);
    CHECK(back.dropout == 0.25);
    CHECK_THROWS(z.assign(std::vector<double>(flat.size() + 1)));
}

TEST_CASE("cql loss hand oracles")
{
    const std::size_t action_dim = 8;
    auto p = zero_network(1 + action_dim);

    // Terminal transition, r = 0.1, Q = 0: BE = 0.1, loss = 0.005.
    std::vector<Transition> one{terminal_transition(0.1, 1, action_dim)};
    CHECK(loss_of(p, one, 0.0) == doctest::Approx(0.005).epsilon(1e-15));

    // Two candidate actions with Q = 0: logsumexp = ln 2.
    std::vector<Transition> two{terminal_transition(0.1, 2, action_dim)};
    CHECK(loss_of(p, two, 0.1) == doctest::Approx(0.005 + 0.1 * std::log(2.0)).epsilon(1e-15));
    CHECK(loss_of(p, two, 0.0) == doctest::Approx(0.005).epsilon(1e-15));
}

TEST_CASE("alpha zero gives exactly half the squared Bellman error")
{
    std::mt19937_64 rng(3);
    auto p = make_q_network(9, 16, 2, 0.0, InitScheme::uniform_fan_in, rng);
    auto target = make_q_network(9, 16, 2, 0.0, InitScheme::uniform_fan_in, rng);
    auto batch = toy_dataset(6, 1);
    std::vector<const Transition*> ptrs;
    for (const auto& t : batch)
        ptrs.push_back(&t);
    auto lb = cql_loss(p, target, ptrs, 0.0, 1.0);
    CHECK(lb.loss == 0.5 * lb.bellman_sq);

    // Independent recomputation of the squared errors.
    double sq = 0.0;
    for (const auto& t : batch)
    {
        double y = t.reward;
        if (!t.done)
        {
            double best = -std::numeric_limits<double>::infinity();
            for (const auto& a : *t.next_actions)
                best = std::max(best, mlp_forward(target, concat(t.next_state, a)));
            y += best;
        }
        double be = y - mlp_forward(p, concat(t.state, t.action()));
        sq += be * be;
    }
    CHECK(lb.bellman_sq == doctest::Approx(sq / 6.0).epsilon(1e-14));
}

TEST_CASE("cql term is non-negative")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial)
    {
        auto p = make_q_network(9, 16, 2, 0.0, InitScheme::uniform_fan_in, rng);
        auto batch = random_transitions(8, 8, rng);
        std::vector<const Transition*> ptrs;
        for (const auto& t : batch)
            ptrs.push_back(&t);
        CHECK(cql_loss(p, p, ptrs, 0.2, 1.0).cql_term >= 0.0);
    }
}

TEST_CASE("analytic gradients match finite differences")
{
    std::mt19937_64 rng(12);
    for (double alpha : {0.0, 0.1, 0.2})
        for (double dropout : {0.0, 0.25})
        {
            auto p = make_q_network(9, 16, 2, dropout, InitScheme::uniform_fan_in, rng);
            auto target = make_q_network(9, 16, 2, dropout, InitScheme::uniform_fan_in, rng);
            auto batch = random_transitions(4, 8, rng);
            auto r = check_gradients(p, target, batch, alpha, 1.0, dropout > 0.0, 99);
            CAPTURE(alpha);
            CAPTURE(dropout);
            CHECK(r.checked == p.parameter_count());
            CHECK(r.max_rel_error <= 1e-4);
        }
}

TEST_CASE("bellman target")
{
    auto p = zero_network(9, 0.25);
    auto t = terminal_transition(0.3, 1, 8);
    CHECK(bellman_target(p, t, 1.0) == 0.3);
    t.done = false;
    CHECK_THROWS_AS(bellman_target(p, t, 1.0), UsageError);
    t.next_actions = std::make_shared<const std::vector<FeatureVector>>(2, FeatureVector(8, 0.1));
    CHECK(bellman_target(p, t, 1.0) == doctest::Approx(0.55));
    CHECK(bellman_target(p, t, 0.5) == doctest::Approx(0.425));
}

TEST_CASE("adam first step")
{
    QNetworkParams p;
    p.layers.emplace_back(2, 1);
    p.layers[0].weights = {1.0, -1.0};
    auto g = p.zeros_like();
    g.layers[0].weights = {0.5, -2.0};
    AdamState adam;
    adam.step(p, g, 0.01);
    // m_hat = g and v_hat = g^2 on the first step.
    CHECK(p.layers[0].weights[0] == doctest::Approx(1.0 - 0.01 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(p.layers[0].weights[1] == doctest::Approx(-1.0 + 0.01 * 2.0 / (2.0 + 1e-8)).epsilon(1e-14));
    CHECK(p.layers[0].bias[0] == 0.0);
}

TEST_CASE("training config defaults and json")
{
    TrainingConfig c;
    CHECK(c.train_steps == 8000);
    CHECK(c.batch_size == 16);
    CHECK(c.hidden_dim == 16);
    CHECK(c.replay_capacity == 50000);
    CHECK(c.gamma == 1.0);
    c.lr = 5e-4;
    c.alpha = 0.2;
    c.init = InitScheme::zeros;
    auto back = training_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));
    CHECK_THROWS_AS(training_config_from_json({{"init", "gaussian"}}), ConfigError);
    CHECK_THROWS_AS(training_config_from_json({{"batch_size", 0}}), ConfigError);
}

TEST_CASE("hyperparameter grid")
{
    auto g = table5_grid();
    CHECK(g.size() == 54);
    CHECK(g.lr == std::vector<double>{1e-4, 3e-4, 5e-4});
    CHECK(g.alpha == std::vector<double>{0.0, 0.1, 0.2});
    CHECK(g.target_sync == std::vector<std::size_t>{100, 200, 400});
    CHECK(g.dropout == std::vector<double>{0.0, 0.25});
    auto all = g.enumerate(TrainingConfig{});
    REQUIRE(all.size() == 54);
    CHECK(all.front().lr == 1e-4);
    CHECK(all.front().dropout == 0.0);
    CHECK(all[1].dropout == 0.25);
    CHECK(all.back().lr == 5e-4);
    for (const auto& c : all)
        CHECK(c.train_steps == 8000);

    CHECK(grid_from_json("table5").size() == 54);
    auto custom = grid_from_json({{"lr", {3e-4, 1e-4}}, {"alpha", {0.0}}, {"target_sync", {100}}, {"dropout", {0.0}}});
    CHECK(custom.size() == 2);
    CHECK(custom.enumerate({}).front().lr == 1e-4);
    CHECK_THROWS_AS(grid_from_json("table6"), ConfigError);
    CHECK_THROWS_AS(grid_from_json({{"lr", std::vector<double>{}}}), ConfigError);
}

TEST_CASE("train with zero steps returns the initialization")
{
    auto data = toy_dataset(40, 2);
    FeatureConfig f;
    TrainingConfig c;
    c.train_steps = 0;
    c.seed = 77;
    auto r = train(c, data, f);
    std::mt19937_64 init_rng(mix_seed(77, 0));
    auto expected = make_q_network(f.input_dim(), 16, 2, 0.0, InitScheme::uniform_fan_in, init_rng);
    CHECK(r.policy.network.flatten() == expected.flatten());
    CHECK(r.curve.empty());
    CHECK(r.policy.provenance.at("dataset_digest") == transitions_digest(data));
    CHECK(r.policy.provenance.at("seed") == 77);
}

TEST_CASE("training is deterministic given the seed")
{
    auto data = toy_dataset(60, 3);
    FeatureConfig f;
    TrainingConfig c;
    c.train_steps = 150;
    c.alpha = 0.1;
    c.dropout = 0.25;
    c.seed = 5;
    auto a = train(c, data, f);
    auto b = train(c, data, f);
    CHECK(a.policy.network.flatten() == b.policy.network.flatten());
    CHECK(loss_curve_csv(a.curve) == loss_curve_csv(b.curve));
    c.seed = 6;
    CHECK(train(c, data, f).policy.network.flatten() != a.policy.network.flatten());
    CHECK(loss_curve_csv(a.curve).rfind("step,loss,be,cql_term\n", 0) == 0);
}

TEST_CASE("target network only changes at sync steps")
{
    auto data = toy_dataset(60, 4);
    FeatureConfig f;
    TrainingConfig c;
    c.train_steps = 35;
    c.target_sync = 10;
    std::vector<double> last_target;
    const Transition& probe = data.front();
    double last_y = 0.0;
    train(c, data, f, [&](std::size_t step, const QNetworkParams& net, const QNetworkParams& target) {
        auto flat = target.flatten();
        double y = bellman_target(target, probe, 1.0);
        if (step % 10 == 0)
            CHECK(flat == net.flatten());
        else if (!last_target.empty())
        {
            CHECK(flat == last_target);
            CHECK(y == last_y);
        }
        last_target = flat;
        last_y = y;
    });
}

TEST_CASE("training errors")
{
    FeatureConfig f;
    TrainingConfig c;
    CHECK_THROWS_AS(train(c, {}, f), UsageError);

    auto data = toy_dataset(4, 5);
    c.train_steps = 5;
    CHECK_THROWS_AS(train(c, data, f), UsageError);  // fewer transitions than one batch

    auto bad = toy_dataset(32, 6);
    for (auto& t : bad)
        t.reward = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(train(c, bad, f), NumericError);
}

TEST_CASE("larger alpha pushes the unobserved terminal action down")
{
    // Behavior data never takes the terminal action, which is last in every candidate set.
    std::mt19937_64 rng(8);
    auto data = random_transitions(200, 8, rng);
    for (auto& t : data)
    {
        auto actions = *t.actions;
        actions.push_back(terminal_action_features(6));
        t.actions = std::make_shared<const std::vector<FeatureVector>>(actions);
    }
    FeatureConfig f;
    auto gap = [&](double alpha) {
        TrainingConfig c;
        c.train_steps = 600;
        c.lr = 1e-3;
        c.alpha = alpha;
        c.seed = 1;
        auto p = train(c, data, f).policy;
        double g = 0.0;
        for (const auto& t : data)
            g += p.q_value(t.state, t.actions->back()) - p.q_value(t.state, t.action());
        return g / static_cast<double>(data.size());
    };
    double g0 = gap(0.0), g1 = gap(0.1), g2 = gap(0.2);
    CHECK(g1 <= g0);
    CHECK(g2 <= g1);
}

TEST_CASE("policy json round trip")
{
    std::mt19937_64 rng(9);
    TrainedPolicy p;
    p.features.mode = FeatureMode::sorted_padded;
    p.network = make_q_network(p.features.input_dim(), 16, 0, 0.0, InitScheme::uniform_fan_in, rng);
    p.network.layers[0].weights[3] = 0.1 + 0.2;  // not exactly representable in short decimal
    p.tasks = {"a", "b"};
    p.max_label_count = 4;
    p.provenance = {{"seed", 3}};
    TempDir dir;
    save_policy((dir / "p.json").string(), p);
    auto back = load_policy((dir / "p.json").string());
    CHECK(back.network.flatten() == p.network.flatten());
    CHECK(back.features == p.features);
    CHECK(back.tasks == p.tasks);
    CHECK(back.max_label_count == 4);
    CHECK(back.provenance == p.provenance);
    CHECK_THROWS_AS(load_policy((dir / "missing.json").string()), DataError);
}

TEST_CASE("grid search selection and tie-breaking")
{
    auto data = toy_dataset(40, 7);
    FeatureConfig f;
    TrainingConfig base;
    base.train_steps = 5;
    HyperparameterGrid g;
    g.lr = {3e-4, 1e-4};
    g.alpha = {0.1, 0.0};
    g.target_sync = {100};
    g.dropout = {0.0};

    auto constant = grid_search(g.enumerate(base), data, f, [](const TrainedPolicy&) { return 0.5; });
    CHECK(constant.entries.size() == 4);
    CHECK(constant.best_config.lr == 1e-4);
    CHECK(constant.best_config.alpha == 0.0);
    CHECK(constant.best.policy.provenance.at("validation") == 0.5);

    // Validation favors alpha = 0.1 at lr = 3e-4.
    auto favored = grid_search(g.enumerate(base), data, f, [](const TrainedPolicy& p) {
        const auto& c = p.provenance.at("config");
        return (c.at("lr") == 3e-4 && c.at("alpha") == 0.1) ? 0.9 : 0.1;
    });
    CHECK(favored.best_config.lr == 3e-4);
    CHECK(favored.best_config.alpha == 0.1);

    std::vector<TrainingConfig> single{base};
    CHECK(grid_search(single, data, f, [](const TrainedPolicy&) { return 0.0; }).entries.size() == 1);
    CHECK_THROWS_AS(grid_search({}, data, f, [](const TrainedPolicy&) { return 0.0; }), UsageError);

    auto threaded = grid_search(g.enumerate(base), data, f, [](const TrainedPolicy&) { return 0.5; }, 2);
    CHECK(threaded.best.policy.network.flatten() == constant.best.policy.network.flatten());
}
