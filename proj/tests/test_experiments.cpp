#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "icl/errors.hpp"
#include "icl/experiment.hpp"
#include "icl/stats.hpp"
#include "icl/synthetic_task.hpp"
#include "oracles.hpp"

using namespace icl;
using namespace icl::testing;

namespace
{
    TaskResources synthetic_resources(const std::string& name, std::size_t labels, std::uint64_t seed,
                                      std::size_t examples = 160)
    {
        SyntheticTaskConfig c;
        c.name = name;
        c.label_names.clear();
        for (std::size_t y = 0; y < labels; ++y)
            c.label_names.push_back(name + std::to_string(y));
        c.examples = examples;
        c.seed = seed;
        auto synth = make_synthetic_task(c);
        return {synth.dataset, std::make_shared<SyntheticBackend>(synth.task, synth.params)};
    }

    ExperimentOptions small_options(Setting setting, Method method)
    {
        ExperimentOptions o;
        o.setting = setting;
        o.method = method;
        o.k = 3;
        o.sizes = {20, 20, 30, 60};
        o.episodes = 40;
        o.train.train_steps = 60;
        o.train.hidden_dim = 8;
        o.train.hidden_layers = 1;
        o.probe_size = 10;
        o.best_of_n = 4;
        return o;
    }

    std::set<std::string> ids_of(const std::vector<Example>& xs)
    {
        std::set<std::string> out;
        for (const auto& e : xs)
            out.insert(e.id);
        return out;
    }

    std::vector<double> as_vector(std::initializer_list<double> xs) { return xs; }
}  // namespace

TEST_CASE("load_dataset")
{
    TempDir dir;
    auto task = labeled_task(6);
    {
        std::ofstream out(dir / "ok.jsonl");
        out << R"({"text":"first","label":0})" << "\n"
            << R"({"text":"same","label":5})" << "\n"
            << R"({"text":"same","label":2})" << "\n";
    }
    auto d = load_dataset(dir / "ok.jsonl", task);
    REQUIRE(d.examples.size() == 3);
    CHECK(d.examples[0].id == "0");
    CHECK(d.examples[2].id == "2");
    CHECK(d.examples[1].text == d.examples[2].text);
    CHECK(*d.examples[1].label == 5);
    CHECK(d.digest.size() == 64);
    CHECK(d.by_id("1").text == "same");
    CHECK_THROWS_AS(d.by_id("3"), UsageError);

    {
        std::ofstream out(dir / "bad_label.jsonl");
        out << R"({"text":"a","label":0})" << "\n" << R"({"text":"b","label":7})" << "\n";
    }
    try
    {
        load_dataset(dir / "bad_label.jsonl", task);
        FAIL("expected DataError");
    }
    catch (const DataError& e)
    {
        CHECK(std::string(e.what()).find(":2") != std::string::npos);
    }

    {
        std::ofstream out(dir / "bad_row.jsonl");
        out << R"({"label":1})" << "\n";
    }
    CHECK_THROWS_AS(load_dataset(dir / "bad_row.jsonl", task), DataError);
    {
        std::ofstream out(dir / "unlabeled.jsonl");
        out << R"({"text":"a"})" << "\n";
    }
    CHECK_FALSE(load_dataset(dir / "unlabeled.jsonl", task).examples[0].label);
    CHECK_THROWS_AS(load_dataset(dir / "missing.jsonl", task), DataError);
}

TEST_CASE("dataset write and reload keeps the digest")
{
    TempDir dir;
    auto res = synthetic_resources("rt", 2, 3, 20);
    write_dataset(dir / "d.jsonl", res.dataset);
    auto back = load_dataset(dir / "d.jsonl", res.dataset.task);
    CHECK(back.digest == res.dataset.digest);
}

TEST_CASE("make_splits")
{
    auto task = labeled_task(2);
    std::vector<Example> xs;
    for (int i = 0; i < 10; ++i)
        xs.push_back(ex(std::to_string(i), "text " + std::to_string(i), i % 2));
    auto d = make_dataset(task, xs);
    SplitSizes sizes{2, 2, 2, 3};
    auto a = make_splits(d, sizes, 7);
    auto b = make_splits(d, sizes, 7);
    CHECK(a == b);
    std::set<std::string> all;
    std::size_t total = 0;
    for (const auto& [name, ids] : a)
    {
        total += ids.size();
        all.insert(ids.begin(), ids.end());
    }
    CHECK(total == 9);
    CHECK(all.size() == 9);
    CHECK(a.at("train").size() == 2);
    CHECK(a.at("test").size() == 3);

    bool differs = false;
    for (std::uint64_t s = 8; s < 12 && !differs; ++s)
        differs = make_splits(d, sizes, s) != a;
    CHECK(differs);

    CHECK_THROWS_AS(make_splits(d, SplitSizes{5, 5, 5, 5}, 0), UsageError);
}

TEST_CASE("confidence intervals")
{
    auto two = as_vector({0.0, 1.0});
    auto ci = confidence_interval(two);
    CHECK(ci.mean == doctest::Approx(0.5));
    REQUIRE(ci.half_width);
    CHECK(*ci.half_width == doctest::Approx(6.353).epsilon(1e-3));

    auto same = as_vector({0.7, 0.7, 0.7, 0.7, 0.7});
    CHECK(*confidence_interval(same).half_width == doctest::Approx(0.0).epsilon(1e-15));

    auto one = as_vector({0.42});
    auto single = confidence_interval(one);
    CHECK(single.mean == 0.42);
    CHECK_FALSE(single.half_width);

    CHECK(sample_stddev(two) == doctest::Approx(std::sqrt(0.5)));
    CHECK(sample_stddev(one) == 0.0);
    CHECK_THROWS_AS(mean(std::vector<double>{}), UsageError);
}

TEST_CASE("pearson correlation")
{
    auto x = as_vector({1, 2, 3});
    auto y = as_vector({2, 1, 3});
    auto c = pearson_r(x, y);
    CHECK(c.r == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(c.n == 3);
    CHECK(c.p_value > 0.0);
    CHECK(c.p_value <= 1.0);

    auto xs = as_vector({1, 2, 3, 4, 5});
    auto ys = as_vector({2, 4, 6, 8, 10});
    auto linear = pearson_r(xs, ys);
    CHECK(linear.r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(linear.p_value < 1e-6);

    auto flat = as_vector({1, 1, 1});
    CHECK_THROWS_AS(pearson_r(x, flat), NumericError);
    CHECK_THROWS_AS(pearson_r(as_vector({1, 2}), as_vector({1, 2})), UsageError);
    CHECK_THROWS_AS(pearson_r(x, xs), UsageError);
}

TEST_CASE("setting and method names")
{
    for (auto s : {Setting::seen_examples, Setting::new_examples, Setting::new_task})
        CHECK(setting_from_string(to_string(s)) == s);
    for (auto m : {Method::random, Method::max_entropy, Method::reordering, Method::best_of_n, Method::greedy_oracle,
                   Method::learned})
        CHECK(method_from_string(to_string(m)) == m);
    CHECK(method_from_string("best-of-10") == Method::best_of_n);
    CHECK(is_oracle(Method::greedy_oracle));
    CHECK(is_oracle(Method::best_of_n));
    CHECK_FALSE(is_oracle(Method::learned));
    CHECK_THROWS_AS(setting_from_string("other"), UsageError);
    CHECK_THROWS_AS(method_from_string("other"), UsageError);
}

TEST_CASE("run_setting produces one entry per seed and respects the pools")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1), synthetic_resources("b", 3, 2)};
    for (auto setting : {Setting::seen_examples, Setting::new_examples})
    {
        auto o = small_options(setting, Method::random);
        auto report = run_setting(tasks, o);
        REQUIRE(report.runs.size() == 5);
        CHECK(report.audit_passed);
        CHECK(report.audited_prompts > 0);
        CHECK(report.ci_half_width);
        CHECK(report.mean == doctest::Approx(mean(report.accuracies())));
        for (const auto& run : report.runs)
        {
            auto splits = prepare_tasks(tasks, o, run.seed);
            auto allowed = ids_of(setting == Setting::seen_examples ? splits[0].train : splits[0].unlabeled);
            CHECK(run.ids.size() == 3);
            for (const auto& id : run.ids)
                CHECK(allowed.count(id) == 1);
        }
    }
}

TEST_CASE("new-task learned run picks from the held-out unlabeled split")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1), synthetic_resources("b", 3, 2),
                                     synthetic_resources("c", 2, 3)};
    auto o = small_options(Setting::new_task, Method::learned);
    o.seeds = {0, 1};
    o.target_task = 1;
    CHECK(o.features().mode == FeatureMode::sorted_padded);
    CHECK(training_tasks(o, 3) == std::vector<std::size_t>{0, 2});
    auto report = run_setting(tasks, o);
    REQUIRE(report.runs.size() == 2);
    CHECK(report.audit_passed);
    CHECK(report.task == tasks[1].dataset.task.name);
    for (const auto& run : report.runs)
    {
        auto splits = prepare_tasks(tasks, o, run.seed);
        auto allowed = ids_of(splits[1].unlabeled);
        for (const auto& id : run.ids)
            CHECK(allowed.count(id) == 1);
    }

    auto solo = o;
    std::vector<TaskResources> one{tasks[0]};
    solo.target_task = 0;
    CHECK_THROWS_AS(run_setting(one, solo), UsageError);
}

TEST_CASE("oracles are rejected in the new-task setting")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1), synthetic_resources("b", 2, 2)};
    CHECK_THROWS_AS(run_setting(tasks, small_options(Setting::new_task, Method::greedy_oracle)), UsageError);
    CHECK_THROWS_AS(run_setting(tasks, small_options(Setting::new_task, Method::best_of_n)), UsageError);
    auto zero_k = small_options(Setting::seen_examples, Method::random);
    zero_k.k = 0;
    CHECK_THROWS_AS(run_setting(tasks, zero_k), UsageError);
}

TEST_CASE("seen-examples greedy oracle reproduces brute-force greedy per seed")
{
    SyntheticTaskConfig c;
    c.name = "g";
    c.examples = 120;
    c.seed = 5;
    auto synth = make_synthetic_task(c);
    std::vector<TaskResources> tasks{{synth.dataset, std::make_shared<SyntheticBackend>(synth.task, synth.params)}};
    auto o = small_options(Setting::seen_examples, Method::greedy_oracle);
    o.sizes = {8, 20, 10, 40};
    auto report = run_setting(tasks, o);
    for (const auto& run : report.runs)
    {
        auto splits = prepare_tasks(tasks, o, run.seed);
        auto expected = brute_force_greedy(synth.params, 2, splits[0].train, splits[0].reward, 3);
        CHECK(run.ids == expected);
    }
}

TEST_CASE("reports are bit-reproducible and differ across unlabeled sizes")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1), synthetic_resources("b", 3, 2)};
    for (auto method : {Method::max_entropy, Method::reordering, Method::best_of_n, Method::learned})
    {
        auto o = small_options(Setting::new_examples, method);
        o.seeds = {3, 4};
        auto a = to_json(run_setting(tasks, o));
        auto b = to_json(run_setting(tasks, o));
        CHECK_MESSAGE(a.dump() == b.dump(), to_string(method));
        o.jobs = 2;
        CHECK_MESSAGE(to_json(run_setting(tasks, o)).dump() == a.dump(), to_string(method));
    }

    auto small = small_options(Setting::new_examples, Method::random);
    auto large = small;
    large.sizes.unlabeled = 60;
    CHECK(to_json(small).at("sizes") != to_json(large).at("sizes"));
    CHECK(run_setting(tasks, small).config_digest != run_setting(tasks, large).config_digest);
}

TEST_CASE("report json and markdown")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1)};
    auto o = small_options(Setting::seen_examples, Method::random);
    o.seeds = {0};
    auto r = run_setting(tasks, o);
    auto j = to_json(r);
    CHECK(j.at("accuracies").size() == 1);
    CHECK(j.at("ci95_half_width").is_null());
    CHECK(j.at("audit").at("passed") == true);
    auto md = to_markdown(r);
    CHECK(md.find("random") != std::string::npos);
}

TEST_CASE("unlabeled size sweep")
{
    std::vector<TaskResources> tasks{synthetic_resources("a", 2, 1), synthetic_resources("b", 2, 2)};
    auto o = small_options(Setting::seen_examples, Method::random);
    o.seeds = {0, 1};
    auto rows = unlabeled_size_sweep({10, 30}, tasks, o);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].size == 10);
    CHECK(rows[1].size == 30);
    auto csv = sweep_csv(rows);
    CHECK(csv.rfind("size,mean,ci\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(unlabeled_size_sweep({50}, tasks, o).size() == 1);
    CHECK_THROWS_AS(unlabeled_size_sweep({}, tasks, o), UsageError);
}

TEST_CASE("synthetic task generator")
{
    SyntheticTaskConfig c;
    c.label_names = {"x", "y", "z"};
    c.examples = 300;
    c.seed = 9;
    auto a = make_synthetic_task(c);
    auto b = make_synthetic_task(c);
    CHECK(a.dataset.digest == b.dataset.digest);
    REQUIRE(a.dataset.examples.size() == 300);
    CHECK(a.params.cue_lexicon.size() == 3);
    std::vector<int> counts(3, 0);
    for (const auto& e : a.dataset.examples)
    {
        REQUIRE(e.label);
        ++counts[static_cast<std::size_t>(*e.label)];
    }
    for (int n : counts)
        CHECK(n > 50);

    c.seed = 10;
    CHECK(make_synthetic_task(c).dataset.digest != a.dataset.digest);
    CHECK(synthetic_task_config_from_json(to_json(c)).seed == 10);

    c.label_names = {"only"};
    CHECK_THROWS_AS(make_synthetic_task(c), ConfigError);
}
