#include <cmath>

#include <gtest/gtest.h>

#include <fsnn/dynsys.hpp>

using namespace fsnn;

namespace {

StateVector zero_derivs(const StateVector& s, double) { return StateVector(s.size(), 0.0); }
StateVector unit_derivs(const StateVector& s, double) { return StateVector(s.size(), 1.0); }
StateVector growth(const StateVector& s, double) { return s; }

// Truncated Taylor series of e^h; RK4 reproduces it exactly on ds/dt = s.
double taylor4(double h) { return 1.0 + h + h * h / 2.0 + h * h * h / 6.0 + h * h * h * h / 24.0; }

} // namespace

TEST(Rk4Step, ZeroDerivativeFixesState) {
    const StateVector s{29, 96, 4};
    EXPECT_EQ(rk4_step(zero_derivs, s, 0.0, 0.25), s);
}

TEST(Rk4Step, ConstantDerivativeIsExact) {
    EXPECT_DOUBLE_EQ(rk4_step(unit_derivs, StateVector{0.0}, 0.0, 0.25)[0], 0.25);
}

TEST(Rk4Step, LinearGrowthMatchesTaylorFactor) {
    const double got = rk4_step(growth, StateVector{1.0}, 0.0, 0.25)[0];
    EXPECT_NEAR(got, 7889.0 / 6144.0, 1e-15);
    EXPECT_NEAR(got, taylor4(0.25), 1e-15);
    EXPECT_NEAR(got, 1.28401693, 1e-8);
    EXPECT_GT(std::abs(got - std::exp(0.25)), 1e-6);
}

TEST(Rk4Step, InputIsNotModified) {
    const StateVector s{1.0, 2.0};
    const StateVector copy = s;
    rk4_step(growth, s, 0.0, 0.1);
    EXPECT_EQ(s, copy);
}

TEST(Rk4Step, NonFiniteStageNamesIndexAndTime) {
    auto bad = [](const StateVector& s, double t) {
        StateVector d(s.size(), 0.0);
        if (t > 0.1)
            d[1] = std::nan("");
        return d;
    };
    try {
        rk4_step(bad, StateVector{1.0, 1.0}, 0.0, 0.5);
        FAIL() << "expected IntegrationError";
    } catch (const IntegrationError& e) {
        EXPECT_EQ(e.state_index(), 1u);
        EXPECT_DOUBLE_EQ(e.time(), 0.0);
    }
}

TEST(IntegrationConfig, RejectsNonIntegralRatios) {
    EXPECT_THROW((IntegrationConfig{0.3, 1.0, 0.3}.validate()), ConfigError);
    EXPECT_THROW((IntegrationConfig{0.25, 100.0, 0.3}.validate()), ConfigError);
    EXPECT_THROW((IntegrationConfig{0.0, 100.0, 1.0}.validate()), ConfigError);
    EXPECT_THROW((IntegrationConfig{0.25, -1.0, 1.0}.validate()), ConfigError);
    EXPECT_NO_THROW((IntegrationConfig{0.25, 100.0, 1.0}.validate()));
    // 0.1 is not exact in binary; the ratio check is tolerant.
    EXPECT_NO_THROW((IntegrationConfig{0.1, 1.0, 0.3}.validate()));
}

TEST(Integrate, ZeroDerivativeGivesIdenticalSamples) {
    const Trajectory tr = integrate(zero_derivs, StateVector{1, 2, 3}, IntegrationConfig{0.25, 10.0, 1.0});
    ASSERT_EQ(tr.size(), 10u);
    for (const auto& s : tr.samples)
        EXPECT_EQ(s, (StateVector{1, 2, 3}));
    EXPECT_DOUBLE_EQ(tr.time_at(0), 1.0);
    EXPECT_DOUBLE_EQ(tr.time_at(9), 10.0);
    EXPECT_EQ(tr.state_names, (std::vector<std::string>{"State_1", "State_2", "State_3"}));
}

TEST(Integrate, IncludeT0AddsInitialRow) {
    const Trajectory tr =
        integrate(zero_derivs, StateVector{1.0}, IntegrationConfig{0.25, 10.0, 1.0}, IntegrateOptions{0.0, true, {}});
    ASSERT_EQ(tr.size(), 11u);
    EXPECT_DOUBLE_EQ(tr.time_at(0), 0.0);
}

TEST(Integrate, DenseRecordsEveryStep) {
    const Trajectory tr = integrate_dense(zero_derivs, StateVector{1.0}, IntegrationConfig{0.25, 100.0, 1.0});
    EXPECT_EQ(tr.size(), 401u);
    EXPECT_DOUBLE_EQ(tr.sample_interval, 0.25);
}

TEST(Integrate, LinearGrowthOverUnitHorizon) {
    const Trajectory tr = integrate(growth, StateVector{1.0}, IntegrationConfig{0.25, 1.0, 1.0});
    ASSERT_EQ(tr.size(), 1u);
    const double factor = 7889.0 / 6144.0;
    EXPECT_NEAR(tr.samples[0][0], factor * factor * factor * factor, 1e-14);
    EXPECT_NEAR(tr.samples[0][0], 2.7182099392013233, 1e-14);
}

TEST(Integrate, FourthOrderConvergence) {
    auto err = [](double dt) {
        return std::abs(integrate(growth, StateVector{1.0}, IntegrationConfig{dt, 1.0, 1.0}).samples[0][0] - std::exp(1.0));
    };
    const double ratio = err(0.25) / err(0.125);
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(Integrate, QuadraticForcingIsExact) {
    auto f = [](const StateVector&, double t) { return StateVector{t * t}; };
    const Trajectory tr = integrate(f, StateVector{0.0}, IntegrationConfig{0.25, 3.0, 0.5});
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.time_at(k);
        EXPECT_NEAR(tr.samples[k][0], t * t * t / 3.0, 1e-12 * std::max(1.0, t * t * t / 3.0));
    }
}

TEST(Integrate, Deterministic) {
    auto f = [](const StateVector& s, double t) { return StateVector{std::sin(s[1]) - t, std::cos(s[0])}; };
    const auto a = integrate(f, StateVector{0.3, 0.7}, IntegrationConfig{0.01, 5.0, 0.1});
    const auto b = integrate(f, StateVector{0.3, 0.7}, IntegrationConfig{0.01, 5.0, 0.1});
    EXPECT_EQ(a.samples, b.samples);
}

TEST(Integrate, RejectsNonFiniteInitAndBadNames) {
    EXPECT_THROW(integrate(zero_derivs, StateVector{std::nan("")}, IntegrationConfig{}), IntegrationError);
    EXPECT_THROW(integrate(zero_derivs, StateVector{1.0}, IntegrationConfig{}, IntegrateOptions{0.0, false, {"a", "b"}}),
                 ConfigError);
}
