#include <random>

#include <gtest/gtest.h>

#include <fsnn/training.hpp>

using namespace fsnn;

namespace {

ParameterVector random_params(const ModelShape& shape, std::uint64_t seed, double scale) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, scale);
    ParameterVector p(shape.param_count());
    for (double& v : p)
        v = nd(rng);
    return p;
}

std::vector<TrainingDataset> model_data(const GeneratedModel& m) {
    std::vector<TrainingDataset> out;
    for (const auto& init : benchmark_initializations())
        out.push_back({init, integrate(m, init, IntegrationConfig{})});
    return out;
}

// A small architecture keeps these tests fast.
ModelShape small_shape() {
    return ModelShape(NetworkArchitecture{3, {{3}, {3}, {3}}}, AdjacencyMask::full(3), ScalingSpec::uniform(3));
}

} // namespace

TEST(Payoff, ZeroParametersGiveSquaredDeviationFromStart) {
    const auto data = generate_training_data(benchmark_initializations(), {});
    const ModelShape shape = ModelShape::benchmark_default(3);
    double expected = 0.0;
    for (const auto& d : data)
        for (const auto& row : d.trajectory.samples)
            for (std::size_t i = 0; i < 3; ++i)
                expected += (row[i] - d.initialization[i]) * (row[i] - d.initialization[i]);
    EXPECT_NEAR(payoff(zero_params(shape.architecture(), shape.mask()), shape, data, IntegrationConfig{}), expected,
                1e-9 * expected);
}

TEST(Payoff, SelfGeneratedDataIsZero) {
    const ModelShape shape = ModelShape::benchmark_default(3);
    const auto p = random_params(shape, 2, 0.3);
    const auto data = model_data(GeneratedModel(shape, p));
    EXPECT_EQ(payoff(p, shape, data, IntegrationConfig{}), 0.0);
}

TEST(Payoff, DuplicatedDatasetDoubles) {
    const ModelShape shape = ModelShape::benchmark_default(3);
    auto data = generate_training_data({{29, 96, 4}}, {});
    const auto p = random_params(shape, 3, 0.1);
    const double once = payoff(p, shape, data, IntegrationConfig{});
    data.push_back(data.front());
    EXPECT_NEAR(payoff(p, shape, data, IntegrationConfig{}), 2.0 * once, 1e-12 * once);
}

TEST(Payoff, OverflowIsPenalized) {
    const ModelShape shape = ModelShape::benchmark_default(3);
    auto data = generate_training_data(benchmark_initializations(), {});
    data[0].trajectory.samples[5][1] = 1e200;
    EXPECT_EQ(payoff(zero_params(shape.architecture(), shape.mask()), shape, data, IntegrationConfig{}),
              kDivergencePenalty);
    EXPECT_THROW(payoff(ParameterVector(357, 0.0), shape, {}, IntegrationConfig{}), InputError);
}

TEST(Train, BudgetOfOneReturnsZeroParameters) {
    TrainingConfig cfg;
    cfg.budget = 1;
    const ModelShape shape = ModelShape::benchmark_default(3);
    const auto r = train(cfg, generate_training_data(benchmark_initializations(), {}), shape);
    EXPECT_EQ(r.evaluations_used, 1u);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.params, ParameterVector(357, 0.0));
    EXPECT_EQ(r.trace.size(), 1u);
    EXPECT_EQ(r.optimizer, "trust-region-dfo");
}

TEST(Train, ImprovesMonotonicallyAndDeterministically) {
    const ModelShape shape = small_shape();
    const auto data = generate_training_data(benchmark_initializations(), {});
    for (const auto& name : opt::minimizer_names()) {
        TrainingConfig cfg;
        cfg.optimizer = name;
        cfg.budget = 400;
        const auto a = train(cfg, data, shape);
        const auto b = train(cfg, data, shape);
        EXPECT_EQ(a.params, b.params) << name;
        EXPECT_EQ(a.payoff, b.payoff) << name;
        EXPECT_LT(a.payoff, a.trace.front().best) << name;
        EXPECT_LE(a.evaluations_used, cfg.budget) << name;
        ASSERT_EQ(a.trace.size(), a.evaluations_used) << name;
        for (std::size_t i = 1; i < a.trace.size(); ++i)
            EXPECT_LE(a.trace[i].best, a.trace[i - 1].best) << name;
        EXPECT_EQ(a.trace.back().best, a.payoff) << name;
        EXPECT_EQ(a.per_state_rmse.size(), 3u);
    }
}

TEST(Train, SeedChangesTheRun) {
    const ModelShape shape = small_shape();
    const auto data = generate_training_data(benchmark_initializations(), {});
    TrainingConfig cfg;
    cfg.budget = 100;
    const auto a = train(cfg, data, shape);
    cfg.seed = 2;
    const auto b = train(cfg, data, shape);
    EXPECT_NE(a.params, b.params);
}

TEST(Train, InjectedExactStartWins) {
    const ModelShape shape = small_shape();
    const auto truth = random_params(shape, 6, 0.4);
    const auto data = model_data(GeneratedModel(shape, truth));
    TrainingConfig cfg;
    cfg.budget = 200;
    const auto r = train(cfg, data, shape, {truth});
    EXPECT_EQ(r.payoff, 0.0);
    EXPECT_EQ(r.params, truth);
}

TEST(Train, ConfigurationErrors) {
    const ModelShape shape = ModelShape::benchmark_default(3);
    const auto data = generate_training_data(benchmark_initializations(), {});
    TrainingConfig cfg;
    cfg.max_dimension = 100;
    EXPECT_THROW(train(cfg, data, shape), ConfigError);
    cfg = {};
    cfg.optimizer = "nelder-mead";
    EXPECT_THROW(train(cfg, data, shape), ConfigError);
    cfg = {};
    cfg.budget = 0;
    EXPECT_THROW(train(cfg, data, shape), ConfigError);
    cfg = {};
    EXPECT_THROW(train(cfg, data, shape, {ParameterVector(3, 0.0)}), ConfigError);
    EXPECT_THROW(train(cfg, {}, shape), InputError);
}
