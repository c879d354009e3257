#include <cmath>

#include <gtest/gtest.h>

#include <fsnn/optimize.hpp>

using namespace fsnn::opt;

namespace {

// r = D (x - c) with a mildly ill-conditioned diagonal.
LeastSquaresProblem quadratic(std::size_t n, double box = 10.0) {
    LeastSquaresProblem p;
    p.dimension = n;
    p.residual_count = n;
    p.lower.assign(n, -box);
    p.upper.assign(n, box);
    p.residuals = [n](std::span<const double> x, std::span<double> r) {
        for (std::size_t i = 0; i < n; ++i)
            r[i] = (1.0 + static_cast<double>(i)) * (x[i] - 0.3 * static_cast<double>(i + 1));
        return true;
    };
    return p;
}

LeastSquaresProblem rosenbrock() {
    LeastSquaresProblem p;
    p.dimension = 2;
    p.residual_count = 2;
    p.lower = {-5.0, -5.0};
    p.upper = {5.0, 5.0};
    p.residuals = [](std::span<const double> x, std::span<double> r) {
        r[0] = 10.0 * (x[1] - x[0] * x[0]);
        r[1] = 1.0 - x[0];
        return true;
    };
    return p;
}

class EveryMinimizer : public ::testing::TestWithParam<std::string> {};

} // namespace

TEST_P(EveryMinimizer, ReducesConvexProblemWithinBudget) {
    const std::size_t n = 5;
    const auto p = quadratic(n);
    const std::vector<double> x0(n, 0.0);
    MinimizeOptions o;
    o.budget = 50 * n;
    const auto m = make_minimizer(GetParam());
    EXPECT_EQ(m->name(), GetParam());
    const auto r = m->minimize(p, x0, o);
    std::vector<double> r0(n);
    p.residuals(x0, r0);
    double f0 = 0.0;
    for (double v : r0)
        f0 += v * v;
    EXPECT_LT(r.value, 0.5 * f0);
    EXPECT_LE(r.evaluations, o.budget);
    EXPECT_EQ(r.x.size(), n);
}

TEST_P(EveryMinimizer, TraceIsMonotoneAndDeterministic) {
    const auto p = rosenbrock();
    MinimizeOptions o;
    o.budget = 300;
    const auto m = make_minimizer(GetParam());
    const auto a = m->minimize(p, std::vector<double>{-1.2, 1.0}, o);
    const auto b = m->minimize(p, std::vector<double>{-1.2, 1.0}, o);
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.value, b.value);
    ASSERT_EQ(a.trace.size(), a.evaluations);
    for (std::size_t i = 1; i < a.trace.size(); ++i) {
        EXPECT_LE(a.trace[i].best, a.trace[i - 1].best);
        EXPECT_EQ(a.trace[i].evaluation, i + 1);
    }
    EXPECT_EQ(a.trace.back().best, a.value);
}

TEST_P(EveryMinimizer, StaysInsideBounds) {
    auto p = quadratic(3);
    p.lower.assign(3, -0.2);
    p.upper.assign(3, 0.2);
    MinimizeOptions o;
    o.budget = 200;
    o.initial_radius = 0.1;
    const auto r = make_minimizer(GetParam())->minimize(p, std::vector<double>{0.0, 0.0, 0.0}, o);
    for (double v : r.x) {
        EXPECT_GE(v, -0.2);
        EXPECT_LE(v, 0.2);
    }
    // Unconstrained optimum lies outside the box in every coordinate.
    EXPECT_NEAR(r.x[2], 0.2, 0.05);
}

TEST_P(EveryMinimizer, FailedEvaluationsArePenalized) {
    LeastSquaresProblem p = quadratic(2);
    auto inner = p.residuals;
    // Fails everywhere except close to the start.
    p.residuals = [inner](std::span<const double> x, std::span<double> r) {
        if (std::abs(x[0]) > 0.05)
            return false;
        return inner(x, r);
    };
    MinimizeOptions o;
    o.budget = 60;
    o.penalty = 1e18;
    const auto r = make_minimizer(GetParam())->minimize(p, std::vector<double>{0.0, 0.0}, o);
    EXPECT_LT(r.value, 1e18);
    EXPECT_LE(std::abs(r.x[0]), 0.05);
}

TEST_P(EveryMinimizer, BudgetOfOneReturnsStart) {
    MinimizeOptions o;
    o.budget = 1;
    const auto r = make_minimizer(GetParam())->minimize(quadratic(3), std::vector<double>{0.1, 0.2, 0.3}, o);
    EXPECT_EQ(r.evaluations, 1u);
    EXPECT_EQ(r.x, (std::vector<double>{0.1, 0.2, 0.3}));
    EXPECT_FALSE(r.converged);
}

TEST_P(EveryMinimizer, RejectsMalformedProblems) {
    const auto m = make_minimizer(GetParam());
    auto p = quadratic(2);
    EXPECT_THROW(m->minimize(p, std::vector<double>{0.0}, MinimizeOptions{}), fsnn::ConfigError);
    p.lower[0] = p.upper[0];
    EXPECT_THROW(m->minimize(p, std::vector<double>{0.0, 0.0}, MinimizeOptions{}), fsnn::ConfigError);
}

INSTANTIATE_TEST_SUITE_P(Optimizers, EveryMinimizer, ::testing::ValuesIn(minimizer_names()),
                         [](const auto& info) {
                             std::string s = info.param;
                             for (char& c : s)
                                 if (c == '-')
                                     c = '_';
                             return s;
                         });

TEST(TrustRegionInterpolation, SolvesRosenbrock) {
    MinimizeOptions o;
    o.budget = 2000;
    o.final_radius = 1e-8;
    const auto r = TrustRegionInterpolation{}.minimize(rosenbrock(), std::vector<double>{-1.2, 1.0}, o);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
    EXPECT_LT(r.value, 1e-8);
}

TEST(TrustRegionInterpolation, LinearResidualsConvergeQuickly) {
    const std::size_t n = 20;
    MinimizeOptions o;
    o.budget = 50 * (n + 1);
    const auto r = TrustRegionInterpolation{}.minimize(quadratic(n), std::vector<double>(n, 0.0), o);
    EXPECT_LT(r.value, 1e-8);
    EXPECT_TRUE(r.converged);
}

TEST(FiniteDifferenceLevenbergMarquardt, SolvesRosenbrock) {
    MinimizeOptions o;
    o.budget = 2000;
    const auto r = FiniteDifferenceLevenbergMarquardt{}.minimize(rosenbrock(), std::vector<double>{-1.2, 1.0}, o);
    EXPECT_NEAR(r.x[0], 1.0, 1e-4);
    EXPECT_NEAR(r.x[1], 1.0, 1e-4);
}

TEST(TargetValue, StopsEarly) {
    MinimizeOptions o;
    o.budget = 5000;
    o.target_value = 1e-2;
    for (const auto& name : minimizer_names()) {
        const auto r = make_minimizer(name)->minimize(quadratic(4), std::vector<double>(4, 0.0), o);
        EXPECT_LE(r.value, 1e-2) << name;
        EXPECT_LT(r.evaluations, 5000u) << name;
    }
}

TEST(MakeMinimizer, UnknownName) { EXPECT_THROW(make_minimizer("bobyqa"), fsnn::ConfigError); }
