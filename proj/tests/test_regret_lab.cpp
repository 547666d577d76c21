#include <gtest/gtest.h>

#include "support.hpp"

using namespace tsregret;
using namespace testing_support;

namespace {

const ParamId A{0}, B{1};
const StateId x0{0};
const ControlId c1{0}, c2{1};

EstimatorConfig config(std::size_t runs, std::uint64_t seed, bool wrong_first = false) {
    EstimatorConfig c;
    c.runs = runs;
    c.seed = seed;
    c.condition_first_sample_wrong = wrong_first;
    return c;
}

void expect_within(const MCEstimate& e, double target, double sigmas = 3.5) {
    EXPECT_LE(std::abs(e.mean - target), sigmas * e.std_error + 1e-9) << "mean " << e.mean << " se " << e.std_error;
}

Trajectory constant_reward_path(std::size_t n, double r) {
    Trajectory t;
    for (std::size_t i = 0; i < n; ++i) t.steps.push_back({x0, A, c1, r});
    return t;
}

}  // namespace

TEST(MCEstimate, MeanAndStandardError) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto e = MCEstimate::from(v);
    EXPECT_DOUBLE_EQ(e.mean, 2.5);
    EXPECT_NEAR(e.std_error, std::sqrt((1.25 * 4.0 / 3.0) / 4.0), 1e-15);
    EXPECT_EQ(e.n, 4u);
    EXPECT_EQ(MCEstimate::from(std::vector<double>{7.0}).std_error, 0.0);
    EXPECT_THROW(MCEstimate::from(std::vector<double>{}), ModelError);
}

TEST(MCEstimate, PairwiseSumIsAccurate) {
    std::vector<double> v(1'000'001, 0.1);
    v[0] = 1e8;
    const auto e = MCEstimate::from(v);
    EXPECT_NEAR(e.mean * static_cast<double>(v.size()), 1e8 + 1e5, 1e-6);
}

TEST(DiscountedReturn, Examples) {
    const double beta = 0.9;
    const auto t = constant_reward_path(50, 1.0);
    EXPECT_NEAR(discounted_return(t, 0, beta), (1.0 - std::pow(beta, 50)) / (1.0 - beta), 1e-12);
    auto last = constant_reward_path(50, 1.0);
    last.steps.back().reward = 3.5;
    EXPECT_EQ(discounted_return(last, 49, beta), 3.5);
    EXPECT_THROW(discounted_return(t, 50, beta), ModelError);
}

TEST(DiscountedReturn, ExampleOneOraclePath) {
    const auto s = builtins::example1();
    const Plan plan(s);
    const std::size_t horizon = horizon_for(0.9, 1.0, 1e-6);
    const auto traj = simulate(s, plan, Oracle{}, horizon, RunStreams(0, 0));
    EXPECT_NEAR(discounted_return(traj, 0, 0.9), 9.0, 1e-6);
}

TEST(HorizonFor, Examples) {
    EXPECT_EQ(horizon_for(0.9, 0.8, 1e-6), 151u);
    EXPECT_EQ(horizon_for(0.0, 5.0, 1e-6), 1u);
    EXPECT_EQ(horizon_for(0.9, 0.0, 1e-6), 1u);
    EXPECT_THROW(horizon_for(1.0, 1.0, 1e-6), ModelError);
    EXPECT_THROW(horizon_for(0.5, 1.0, 0.0), ModelError);
    // Smallest T: one step fewer misses the target.
    for (const double beta : {0.3, 0.9, 0.99}) {
        const auto t = horizon_for(beta, 2.0, 1e-5);
        EXPECT_LT(std::pow(beta, static_cast<double>(t)) * 2.0 / (1.0 - beta), 1e-5);
        if (t > 1) {
            EXPECT_GE(std::pow(beta, static_cast<double>(t - 1)) * 2.0 / (1.0 - beta), 1e-5);
        }
    }
}

TEST(EstimateValue, ClosedForms) {
    const RegretLab e1(builtins::example1());
    expect_within(e1.estimate_value(Thompson{}, 0, config(20000, 1)), 4.5);

    const RegretLab e3(builtins::example3());
    const auto oracle = e3.estimate_value(Oracle{}, 0, config(2000, 2));
    expect_within(oracle, 8.0);
    EXPECT_LT(oracle.std_error, 0.05);
    expect_within(e3.estimate_value(Oracle{}, 7, config(2000, 3)), 8.0);
    expect_within(e3.estimate_value(FixedControl{c1}, 3, config(2000, 4)), 3.0);
    EXPECT_THROW((void)e3.estimate_value(Oracle{}, 0, config(1, 4)), ModelError);
}

TEST(FiniteRegret, ExampleOneClosedForm) {
    const RegretLab lab(builtins::example1());
    const double beta = 0.9;
    for (const std::size_t n : {2u, 5u}) {
        const double closed = (std::pow(beta, 1.0 - static_cast<double>(n)) - 1.0) / (1.0 - beta) * 0.5;
        expect_within(lab.expected_finite_regret(n, config(20000, 10 + n)), closed);
    }
    EXPECT_NEAR((std::pow(beta, -4.0) - 1.0) / (1.0 - beta) * 0.5, 2.621, 1e-3);
    EXPECT_THROW((void)lab.expected_finite_regret(0, config(10, 1)), ModelError);
}

TEST(Regret, DegeneratePriorGivesZeroEverywhere) {
    for (const auto& name : builtins::names()) {
        const RegretLab lab(with_degenerate_prior(*builtins::by_name(name)));
        const std::vector<std::size_t> ns{1, 4, 9};
        for (const auto& r : lab.decompose(ns, config(200, 6))) {
            EXPECT_NEAR(r.finite_time.mean, 0.0, 1e-9) << name;
            EXPECT_NEAR(r.state.mean, 0.0, 1e-9) << name;
            EXPECT_NEAR(r.residual_td.mean, 0.0, 1e-6) << name;
            // The direct route carries the sampling noise of the tail return.
            EXPECT_LE(std::abs(r.residual.mean), 3.5 * r.residual.std_error + 1e-5) << name;
        }
    }
}

TEST(StateRegret, SingleStateIsExactlyZero) {
    const RegretLab lab(builtins::example3());
    const auto e = lab.expected_state_regret(5, config(300, 1));
    EXPECT_EQ(e.mean, 0.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(StateRegret, ExampleTwoAbsorption) {
    // The oracle heads for xB (worth 10 under B); TS goes to xA (worth 5)
    // whenever its first sample is A, so the gap is 5 * pi0(A) for n >= 1.
    const RegretLab lab(builtins::example2());
    const auto e = lab.expected_state_regret(10, config(20000, 3));
    expect_within(e, 0.5 / (1.0 - 0.9) * 0.999);
}

TEST(ResidualRegret, FixedControlOneIsFive) {
    const RegretLab lab(builtins::example3());
    auto cfg = config(2000, 12);
    cfg.policy = FixedControl{c1};
    for (const std::size_t n : {0u, 3u, 30u}) {
        const auto mc = lab.expected_residual_regret_mc(n, cfg);
        const auto td = lab.expected_residual_regret_td(n, cfg);
        EXPECT_NEAR(mc.mean, 5.0, 0.05);
        EXPECT_NEAR(td.mean, 5.0, 1e-5);
        EXPECT_LT(td.std_error, 1e-12);
    }
    EXPECT_NEAR(lab.td_error(x0, c1), -0.5, 1e-6);
}

TEST(ResidualRegret, RoutesAgreeAndAreNonNegative) {
    for (const auto& name : builtins::names()) {
        const RegretLab lab(*builtins::by_name(name));
        const std::vector<std::size_t> ns{0, 1, 3, 10};
        for (const auto& r : lab.decompose(ns, config(3000, 77))) {
            const double se = combined_std_error({r.residual, r.residual_td});
            EXPECT_LE(std::abs(r.residual.mean - r.residual_td.mean), 3.0 * se + 1e-5) << name << " n=" << r.n;
            EXPECT_GE(r.residual.mean, -3.0 * r.residual.std_error - 1e-5) << name << " n=" << r.n;
            EXPECT_GE(r.residual_td.mean, -3.0 * r.residual_td.std_error - 1e-9) << name << " n=" << r.n;
        }
    }
}

TEST(ResidualRegret, RandomScenariosRoutesAgree) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const RegretLab lab(random_scenario(seed, {.params = 3, .states = 3, .controls = 2}));
        const std::vector<std::size_t> ns{0, 2, 6};
        for (const auto& r : lab.decompose(ns, config(1500, seed))) {
            const double se = combined_std_error({r.residual, r.residual_td});
            EXPECT_LE(std::abs(r.residual.mean - r.residual_td.mean), 3.5 * se + 1e-5) << seed << " n=" << r.n;
            EXPECT_GE(r.residual.mean, -3.0 * r.residual.std_error - 1e-5);
            EXPECT_LE(std::abs(r.identity_gap()), 3.5 * r.identity_std_error() + 1e-6);
        }
    }
}

TEST(Decomposition, IdentityHoldsOnExampleThree) {
    const RegretLab lab(builtins::example3());
    const std::vector<std::size_t> ns{1, 5, 10, 20};
    const auto reports = lab.decompose(ns, config(3000, 8, true));
    for (const auto& r : reports) {
        EXPECT_LE(std::abs(r.identity_gap()), 3.0 * r.identity_std_error()) << "n=" << r.n;
        EXPECT_EQ(r.finite_time.n, r.state.n);
        EXPECT_EQ(r.state.n, r.residual.n);
    }
    // First period: the wrong sample costs exactly 0.8 - 0.3 in expectation,
    // and common random numbers make the per-run difference nearly constant.
    EXPECT_NEAR(reports[0].finite_time.mean, 0.5 / 0.9, 1e-6);
}

TEST(Decomposition, SingleQueriesMatchBatch) {
    const RegretLab lab(builtins::example3());
    const auto cfg = config(400, 21, true);
    const std::vector<std::size_t> ns{2, 6};
    const auto reports = lab.decompose(ns, cfg);
    EXPECT_EQ(lab.expected_residual_regret_mc(6, cfg).mean, reports[1].residual.mean);
    EXPECT_EQ(lab.expected_residual_regret_td(2, cfg).mean, reports[0].residual_td.mean);
    EXPECT_EQ(lab.expected_finite_regret(6, cfg).mean, reports[1].finite_time.mean);
}

TEST(Decomposition, ThreadCountDoesNotChangeResults) {
    const RegretLab lab(builtins::example2());
    auto cfg = config(300, 4);
    const std::vector<std::size_t> ns{1, 3};
    cfg.threads = 1;
    const auto a = lab.decompose(ns, cfg);
    cfg.threads = 3;
    const auto b = lab.decompose(ns, cfg);
    for (std::size_t j = 0; j < ns.size(); ++j) {
        EXPECT_EQ(a[j].residual.mean, b[j].residual.mean);
        EXPECT_EQ(a[j].total.std_error, b[j].total.std_error);
    }
}

TEST(ResidualRegret, ExampleThreeEqualsDiscountedWrongSampleMass) {
    // In example3 the only loss is playing control 1 (phi = -0.5), which TS
    // does exactly when it samples A, so R(n) = 0.5 sum_k beta^k E[pi_{n+k}(A)].
    // The same (seed, run) keys make both estimates use the same histories.
    const RegretLab lab(builtins::example3());
    const auto cfg = config(3000, 19, true);
    const std::size_t horizon = 200;
    const auto curve = lab.posterior_error_curve(horizon, cfg);
    const std::vector<std::size_t> ns{1, 5, 10, 20};
    const auto reports = lab.decompose(ns, cfg);
    for (const auto& r : reports) {
        double predicted = 0.0;
        double w = 1.0;
        for (std::size_t t = r.n; t < horizon; ++t, w *= 0.9) predicted += 0.5 * w * curve.error[t];
        // The TD route counts sampled A's, the curve averages pi(A): equal in mean.
        EXPECT_LE(std::abs(r.residual_td.mean - predicted), 3.5 * r.residual_td.std_error) << "n=" << r.n;
        // The frozen-sample value 0.5/(1 - beta) * error(n) is only an upper bound.
        EXPECT_LE(r.residual.mean, 5.0 * curve.error[r.n] + 3.0 * r.residual.std_error);
    }
    EXPECT_LT(reports[0].residual.mean, 0.7 * 5.0 * curve.error[1]);
}

TEST(LearningCurve, DegeneratePriorIsZeroAndFitSkipped) {
    const RegretLab lab(with_degenerate_prior(builtins::example3()));
    const auto curve = lab.posterior_error_curve(30, config(50, 1));
    for (const double e : curve.error) EXPECT_EQ(e, 0.0);
    EXPECT_FALSE(curve.fit_ok);
    EXPECT_THROW(lab.posterior_error_curve(30, config(5, 1)), ModelError);
}

TEST(LearningCurve, ExampleThreeDecaysExponentially) {
    const RegretLab lab(builtins::example3());
    const auto curve = lab.posterior_error_curve(60, config(3000, 4, true));
    ASSERT_TRUE(curve.fit_ok);
    EXPECT_GT(curve.fitted_b, 0.0);
    EXPECT_NEAR(curve.error[1], 0.468, 0.1);
    EXPECT_LT(curve.error[40], 0.02);
    EXPECT_EQ(curve.error[0], 0.5);
    for (const double e : curve.error) {
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, 1.0);
    }
}

TEST(LearningCurve, FitRecoversKnownExponential) {
    LearningCurve c;
    for (std::size_t t = 0; t < 20; ++t) {
        c.periods.push_back(t);
        c.error.push_back(0.7 * std::exp(-0.3 * static_cast<double>(t)));
        c.std_error.push_back(0.0);
    }
    c.error.push_back(1e-12);
    c.periods.push_back(20);
    c.std_error.push_back(0.0);
    fit_exponential(c);
    ASSERT_TRUE(c.fit_ok);
    EXPECT_EQ(c.fit_points, 20u);
    EXPECT_NEAR(c.fitted_a, 0.7, 1e-12);
    EXPECT_NEAR(c.fitted_b, 0.3, 1e-12);
}

TEST(BoundCheck, FabricatedCases) {
    const auto s = builtins::example3();
    LearningCurve flat;
    flat.fit_ok = true;
    flat.fitted_a = 0.01;
    flat.fitted_b = 0.0;
    // Level: 2 * 0.8 * 1.9 * 0.01 / 0.01 = 3.04.
    RegretReport low, high;
    low.n = 3;
    low.residual = {2.0, 0.1, 100};
    high.n = 8;
    high.residual = {3.5, 0.1, 100};
    const std::vector<RegretReport> reports{low, high};
    const auto check = check_proposition1(s, flat, reports);
    ASSERT_EQ(check.entries.size(), 2u);
    EXPECT_NEAR(check.entries[0].bound, 3.04, 1e-6);
    EXPECT_TRUE(check.entries[0].pass);
    EXPECT_FALSE(check.entries[1].pass);
    EXPECT_FALSE(check.all_pass());
    EXPECT_EQ(check.failing_periods, std::vector<std::size_t>{8});

    flat.fit_ok = false;
    EXPECT_THROW(check_proposition1(s, flat, reports), ModelError);
}

TEST(BoundCheck, ExampleThreePipeline) {
    const RegretLab lab(builtins::example3());
    const auto cfg = config(2000, 15, true);
    const auto curve = lab.posterior_error_curve(60, cfg);
    const std::vector<std::size_t> ns{1, 5, 10, 20, 40};
    const auto check = check_proposition1(lab.scenario(), curve, lab.decompose(ns, cfg));
    EXPECT_TRUE(check.all_pass());
}

TEST(ProbabilisticResidual, DegeneratePrefixIsZero) {
    const auto s = with_degenerate_prior(builtins::example3());
    const RegretLab lab(s);
    const auto prefix = simulate(s, lab.plan(), Thompson{}, 5, RunStreams(1, 0));
    const auto e = lab.probabilistic_residual_regret(prefix, 50, 9);
    EXPECT_LE(std::abs(e.mean), 3.0 * e.std_error + 1e-5);
    EXPECT_THROW((void)lab.probabilistic_residual_regret(prefix, 1, 9), ModelError);
}

TEST(ProbabilisticResidual, TowerPropertyMatchesExpectedResidual) {
    const auto s = builtins::example3();
    const RegretLab lab(s);
    const std::size_t n = 3;
    const std::size_t outer = 600;
    const auto batch = run_batch(s, lab.plan(), Thompson{}, n, outer, 501);
    std::vector<double> means(outer);
    for (std::size_t i = 0; i < outer; ++i) means[i] = lab.probabilistic_residual_regret(batch.runs[i], 30, 7000 + i).mean;
    const auto nested = MCEstimate::from(means);
    const auto direct = lab.expected_residual_regret_mc(n, config(4000, 502));
    EXPECT_LE(std::abs(nested.mean - direct.mean), 3.0 * combined_std_error({nested, direct}));
}

TEST(ProbabilisticResidual, VanishesAtLargeN) {
    const auto s = builtins::example3();
    const RegretLab lab(s);
    const auto batch = run_batch(s, lab.plan(), Thompson{}, 100, 20, 808);
    std::vector<double> means;
    for (std::size_t i = 0; i < batch.runs.size(); ++i)
        means.push_back(lab.probabilistic_residual_regret(batch.runs[i], 20, i).mean);
    const auto e = MCEstimate::from(means);
    EXPECT_LE(std::abs(e.mean), 3.5 * e.std_error);
    EXPECT_LT(e.std_error, 0.1);
}

TEST(CompleteLearning, ExampleThreeLearns) {
    const RegretLab lab(builtins::example3());
    const auto d = lab.complete_learning_diagnostic(200, 1e-3, config(300, 5));
    EXPECT_GE(d.fraction, 0.99);
    EXPECT_TRUE(d.assumptions_satisfied);
    EXPECT_THROW(lab.complete_learning_diagnostic(200, 0.0, config(300, 5)), ModelError);
}

TEST(CompleteLearning, DegeneratePriorIsExactlyOne) {
    const RegretLab lab(with_degenerate_prior(builtins::example3()));
    const auto d = lab.complete_learning_diagnostic(20, 1e-3, config(50, 5));
    EXPECT_EQ(d.fraction, 1.0);
    EXPECT_EQ(d.min_terminal_belief, 1.0);
}

TEST(CompleteLearning, ExampleOneIsFlagged) {
    const RegretLab lab(builtins::example1());
    const auto d = lab.complete_learning_diagnostic(200, 1e-3, config(300, 5));
    EXPECT_FALSE(d.assumptions_satisfied);
    EXPECT_FALSE(d.violations.empty());
    // Distinct deterministic rewards in the absorbing states reveal the
    // parameter after one period, whichever state the run lands in.
    EXPECT_EQ(d.fraction, 1.0);
}

TEST(WrongSampleTd, AboveNegativeConstant) {
    const RegretLab lab(builtins::example3());
    const auto profile = lab.wrong_sample_td_profile(40, config(1000, 3));
    const double floor = lemma4_bound(lab.scenario());
    std::size_t with_data = 0;
    for (const auto& p : profile) {
        if (!p.phi) continue;
        ++with_data;
        EXPECT_GE(p.phi->mean, floor - 3.0 * p.phi->std_error);
        EXPECT_NEAR(p.phi->mean, -0.5, 1e-6);
    }
    EXPECT_GT(with_data, 10u);
}
