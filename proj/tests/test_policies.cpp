#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "icl/classifier.hpp"
#include "icl/errors.hpp"
#include "icl/selectors.hpp"
#include "icl/synthetic_task.hpp"
#include "oracles.hpp"

using namespace icl;
using namespace icl::testing;

namespace
{
    // Linear policy input layout: [step, p_0..p_5, entropy, is_terminal].
    constexpr std::size_t kEntropyIndex = 7;
    constexpr std::size_t kTerminalIndex = 8;

    TrainedPolicy linear_policy(std::size_t k, FeatureMode mode = FeatureMode::raw_padded)
    {
        TrainedPolicy p;
        p.features.mode = mode;
        p.features.budget = k;
        std::mt19937_64 rng(0);
        p.network = make_q_network(p.features.input_dim(), 0, 0, 0.0, InitScheme::zeros, rng);
        return p;
    }

    struct World
    {
        SyntheticTask synth;
        std::shared_ptr<SyntheticBackend> backend;
        std::unique_ptr<Classifier> clf;
        std::vector<Example> pool, reward;

        World(std::size_t pool_size, std::size_t labels, std::uint64_t seed, double recency = 0.8)
        {
            SyntheticTaskConfig c;
            c.label_names.clear();
            for (std::size_t y = 0; y < labels; ++y)
                c.label_names.push_back("label" + std::to_string(y));
            c.examples = pool_size + 30;
            c.recency = recency;
            c.seed = seed;
            synth = make_synthetic_task(c);
            backend = std::make_shared<SyntheticBackend>(synth.task, synth.params);
            clf = std::make_unique<Classifier>(*backend, synth.task);
            const auto& xs = synth.dataset.examples;
            pool.assign(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(pool_size));
            reward.assign(xs.begin() + static_cast<std::ptrdiff_t>(pool_size), xs.end());
        }
    };
}  // namespace

TEST_CASE("zero-weight learned policy picks the lowest ids and never stops early")
{
    std::vector<Example> pool{ex("10", "x c0_1", 0), ex("2", "y", 1), ex("3", "z c1_0", 1), ex("7", "w", 0)};
    SyntheticBackend backend(binary_task(), cue_params(2));
    Classifier clf(backend, binary_task());
    auto r = select_learned(linear_policy(3), pool, gold_labeler(), clf, 3);
    CHECK(r.sequence.ids() == std::vector<std::string>{"2", "3", "7"});
    CHECK(r.terminal_reason == TerminalReason::budget);
    REQUIRE(r.steps.size() == 3);
    CHECK(r.steps[0].candidate_ids.back() == kEndOfPrompt);
    CHECK(r.steps[0].candidate_ids.size() == 5);
    CHECK(r.steps[1].candidate_ids.size() == 4);
}

TEST_CASE("learned policy stops only when the end action is strictly best")
{
    std::vector<Example> pool{ex("1", "a", 0), ex("2", "b", 1)};
    SyntheticBackend backend(binary_task(), cue_params(2));
    Classifier clf(backend, binary_task());

    auto stopper = linear_policy(2);
    stopper.network.layers[0].w(0, kTerminalIndex) = 1.0;
    auto r = select_learned(stopper, pool, gold_labeler(), clf, 2);
    CHECK(r.sequence.empty());
    CHECK(r.terminal_reason == TerminalReason::early_stop);
    REQUIRE(r.steps.size() == 1);
    CHECK(r.steps[0].chosen_id == kEndOfPrompt);

    // Negative weight: candidates always win.
    auto keeper = linear_policy(2);
    keeper.network.layers[0].w(0, kTerminalIndex) = -1.0;
    CHECK(select_learned(keeper, pool, gold_labeler(), clf, 2).sequence.size() == 2);

    // Labels are revealed through the labeler.
    Labeler flip = [](const Example& e) { return 1 - *e.label; };
    auto flipped = select_learned(keeper, pool, flip, clf, 2);
    CHECK(flipped.sequence.labels() == std::vector<int>{1, 0});
}

TEST_CASE("learned policy prefers uncertain candidates under an entropy weight")
{
    std::vector<Example> pool{ex("1", "c0_0 c0_1 c0_2", 0), ex("2", "plain words", 1), ex("3", "c1_0 c1_1", 1)};
    SyntheticBackend backend(binary_task(), cue_params(2));
    Classifier clf(backend, binary_task());
    auto p = linear_policy(1);
    p.network.layers[0].w(0, kEntropyIndex) = 1.0;
    CHECK(select_learned(p, pool, gold_labeler(), clf, 1).sequence.ids() == std::vector<std::string>{"2"});
}

TEST_CASE("learned policy errors")
{
    SyntheticBackend backend(binary_task(), cue_params(2));
    Classifier clf(backend, binary_task());
    auto p = linear_policy(2);
    CHECK_THROWS_AS(select_learned(p, std::vector<Example>{}, gold_labeler(), clf, 2), UsageError);
    std::vector<Example> dup{ex("1", "a", 0), ex("1", "b", 1)};
    CHECK_THROWS_AS(select_learned(p, dup, gold_labeler(), clf, 2), UsageError);

    auto narrow = p;
    narrow.features.l_max = 1;
    CHECK_THROWS_AS(select_learned(narrow, std::vector<Example>{ex("1", "a", 0)}, gold_labeler(), clf, 1), ConfigError);
}

TEST_CASE("learned selection is invariant to relabeling with sorted features")
{
    World w(12, 3, 5);
    std::mt19937_64 init(17);
    TrainedPolicy policy;
    policy.features.mode = FeatureMode::sorted_padded;
    policy.features.budget = 3;
    policy.network = make_q_network(policy.features.input_dim(), 8, 1, 0.0, InitScheme::uniform_fan_in, init);

    const std::vector<int> sigma{2, 0, 1};
    TaskSpec task = w.synth.task;
    SyntheticParams params = w.synth.params;
    for (std::size_t y = 0; y < 3; ++y)
    {
        task.label_names[sigma[y]] = w.synth.task.label_names[y];
        task.proxy_tokens[sigma[y]] = w.synth.task.proxy_tokens[y];
        params.cue_lexicon[sigma[y]] = w.synth.params.cue_lexicon[y];
    }
    std::vector<Example> pool = w.pool;
    for (auto& e : pool)
        e.label = sigma[static_cast<std::size_t>(*e.label)];
    SyntheticBackend permuted_backend(task, params);
    Classifier permuted(permuted_backend, task);

    auto a = select_learned(policy, w.pool, gold_labeler(), *w.clf, 3);
    auto b = select_learned(policy, pool, gold_labeler(), permuted, 3);
    CHECK(a.sequence.ids() == b.sequence.ids());
}

TEST_CASE("random selection")
{
    std::vector<Example> pool;
    for (int i = 0; i < 8; ++i)
        pool.push_back(ex(std::to_string(i), "t" + std::to_string(i), i % 2));
    std::mt19937_64 a(3), b(3);
    auto ra = select_random(pool, 5, a);
    auto rb = select_random(pool, 5, b);
    CHECK(ra.sequence.ids() == rb.sequence.ids());
    auto ids = ra.sequence.ids();
    CHECK(std::set<std::string>(ids.begin(), ids.end()).size() == 5);

    std::mt19937_64 full(4);
    auto all = select_random(pool, 8, full).sequence.ids();
    std::sort(all.begin(), all.end());
    CHECK(all == std::vector<std::string>{"0", "1", "2", "3", "4", "5", "6", "7"});

    std::mt19937_64 c(0);
    CHECK_THROWS_AS(select_random(pool, 9, c), UsageError);
    CHECK(select_random(pool, 0, c).sequence.empty());
}

TEST_CASE("max-entropy picks the most uncertain candidate at each step")
{
    World w(10, 3, 8);
    auto r = select_max_entropy(w.pool, *w.clf, 4);
    REQUIRE(r.sequence.size() == 4);
    DemonstrationSequence prefix;
    for (const auto& step : r.steps)
    {
        double best = -1.0;
        std::string best_id;
        for (std::size_t i = 0; i < step.candidate_ids.size(); ++i)
        {
            const auto& id = step.candidate_ids[i];
            double h = w.clf->predict(prefix, w.synth.dataset.by_id(id).text).entropy();
            CHECK(step.scores[i] == doctest::Approx(h).epsilon(1e-12));
            if (h > best || (h == best && numeric_id_less(id, best_id)))
            {
                best = h;
                best_id = id;
            }
        }
        CHECK(step.chosen_id == best_id);
        prefix.items.push_back(w.synth.dataset.by_id(step.chosen_id));
    }
    CHECK(prefix.ids() == r.sequence.ids());
}

TEST_CASE("best-of-n")
{
    World w(15, 2, 9);
    std::mt19937_64 a(21), b(21);
    auto one = select_best_of_n(w.pool, w.reward, *w.clf, 3, 1, a);
    auto plain = select_random(w.pool, 3, b);
    CHECK(one.sequence.ids() == plain.sequence.ids());
    CHECK(one.evaluations == 1);

    std::mt19937_64 c(22), d(22);
    auto ten = select_best_of_n(w.pool, w.reward, *w.clf, 3, 10, c);
    REQUIRE(ten.sample_scores.size() == 10);
    const double best = *std::max_element(ten.sample_scores.begin(), ten.sample_scores.end());
    CHECK(w.clf->accuracy(ten.sequence, w.reward) == best);
    CHECK(ten.evaluations == 10);

    // The first draw reaching the maximum is kept.
    std::size_t first = 0;
    while (ten.sample_scores[first] != best)
        ++first;
    std::vector<std::string> expected;
    for (std::size_t i = 0; i <= first; ++i)
        expected = select_random(w.pool, 3, d).sequence.ids();
    CHECK(ten.sequence.ids() == expected);

    std::mt19937_64 e(0);
    CHECK_THROWS_AS(select_best_of_n(w.pool, w.reward, *w.clf, 3, 0, e), UsageError);
}

TEST_CASE("greedy oracle matches an independent brute force")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        World w(9, 2 + seed % 3, 100 + seed);
        auto r = select_greedy_oracle(w.pool, w.reward, *w.clf, 3);
        auto expected = brute_force_greedy(w.synth.params, w.synth.task.label_count(), w.pool, w.reward, 3);
        CHECK(r.sequence.ids() == expected);
        CHECK(r.evaluations == 9 + 8 + 7);
        CHECK(w.clf->accuracy(r.sequence, w.reward) ==
              doctest::Approx(direct_accuracy(w.synth.params, w.synth.task.label_count(),
                                              r.sequence.items, w.reward)));
    }
}

TEST_CASE("greedy oracle breaks ties by lowest id and needs labels")
{
    // A constant backend makes every candidate tie.
    FunctionBackend flat([](const ScoreRequest&) {
        return std::map<std::string, double>{{" negative", -0.5}, {" positive", -0.9}};
    });
    Classifier clf(flat, binary_task());
    std::vector<Example> pool{ex("12", "a", 0), ex("4", "b", 1), ex("9", "c", 0)};
    std::vector<Example> reward{ex("100", "r", 0)};
    auto r = select_greedy_oracle(pool, reward, clf, 2);
    CHECK(r.sequence.ids() == std::vector<std::string>{"4", "9"});

    std::vector<Example> unlabeled{ex("1", "a", std::nullopt)};
    CHECK_THROWS_AS(select_greedy_oracle(unlabeled, reward, clf, 1), UsageError);
}

TEST_CASE("reordering matches brute-force enumeration")
{
    World w(4, 3, 31, 0.4);
    DemonstrationSequence seq;
    seq.items = w.pool;
    std::vector<std::string> probes;
    for (std::size_t i = 0; i < 15; ++i)
        probes.push_back(w.reward[i].text);

    auto r = reorder_global_entropy(seq, probes, *w.clf);
    auto perms = all_permutations(4);
    REQUIRE(r.entropies.size() == 24);
    std::size_t best = 0;
    std::vector<double> expected;
    for (std::size_t i = 0; i < perms.size(); ++i)
    {
        std::vector<Example> ordered;
        for (auto j : perms[i])
            ordered.push_back(seq.items[j]);
        expected.push_back(direct_histogram_entropy(w.synth.params, 3, ordered, probes));
        CHECK(r.entropies[i] == doctest::Approx(expected[i]).epsilon(1e-12));
        if (expected[i] > expected[best])
            best = i;
    }
    CHECK(r.permutation == perms[best]);
    CHECK(r.entropy == doctest::Approx(expected[best]).epsilon(1e-12));
    CHECK(r.entropy == doctest::Approx(global_entropy(*w.clf, r.sequence, probes)).epsilon(1e-12));
}

TEST_CASE("reordering edge cases")
{
    SyntheticBackend backend(binary_task(), cue_params(2));
    Classifier clf(backend, binary_task());
    DemonstrationSequence one;
    one.items = {ex("1", "a", 0)};
    std::vector<std::string> probes{"x", "y"};
    auto r = reorder_global_entropy(one, probes, clf);
    CHECK(r.permutation == std::vector<std::size_t>{0});
    CHECK(r.sequence.ids() == one.ids());

    // Every probe lands in one class: all entropies are zero and the identity wins.
    DemonstrationSequence three;
    three.items = {ex("1", "a", 0), ex("2", "b", 0), ex("3", "c", 0)};
    std::vector<std::string> negatives{"c0_0", "c0_1 c0_2"};
    auto flat = reorder_global_entropy(three, negatives, clf);
    CHECK(flat.entropy == 0.0);
    CHECK(flat.permutation == std::vector<std::size_t>{0, 1, 2});

    CHECK_THROWS_AS(reorder_global_entropy(three, std::vector<std::string>{}, clf), UsageError);
    DemonstrationSequence five;
    for (int i = 0; i < 5; ++i)
        five.items.push_back(ex(std::to_string(i), "t", 0));
    CHECK_THROWS_AS(reorder_global_entropy(five, probes, clf), UsageError);
}

TEST_CASE("swapped validation selects from the reward set and scores on training data")
{
    World w(10, 2, 41);
    auto p = linear_policy(3);
    p.network.layers[0].w(0, kEntropyIndex) = 1.0;
    p.network.layers[0].w(0, kTerminalIndex) = -5.0;
    double v = validate_swapped(p, *w.clf, w.pool, w.reward, 3);
    auto picked = select_learned(p, w.reward, gold_labeler(), *w.clf, 3);
    for (const auto& id : picked.sequence.ids())
        CHECK(std::any_of(w.reward.begin(), w.reward.end(), [&](const Example& e) { return e.id == id; }));
    CHECK(v == w.clf->accuracy(picked.sequence, w.pool));
}

TEST_CASE("selection result json")
{
    std::vector<Example> pool{ex("1", "a", 0), ex("2", "b", 1)};
    std::mt19937_64 rng(0);
    auto j = to_json(select_random(pool, 2, rng));
    CHECK(j.at("ids").size() == 2);
    CHECK(j.at("terminal_reason") == "budget");
    CHECK(j.at("evaluations") == 0);
}
