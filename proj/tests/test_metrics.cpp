#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "m2msched/metrics.hpp"

using namespace m2m;

namespace {

PuClassStats pu_stats(const OutcomeSequence& seq, double deadline) {
    PuClassStats s;
    for (auto o : seq) {
        ++s.completed;
        s.outcomes.push_back(o);
        s.latencies.push_back(o == Outcome::success ? deadline / 2 : deadline * 2);
    }
    return s;
}

}  // namespace

TEST(Metrics, PuAverageWithPenalty) {
    using enum Outcome;
    PuClassSpec spec;
    spec.gamma = 1.2;
    // (2 + (2 - 2^1.2)) / 4
    EXPECT_NEAR(*avg_pu_utility(pu_stats({success, failure, failure, success}, 4.0), spec), 0.4256508225014825,
                1e-13);
    EXPECT_DOUBLE_EQ(*avg_pu_utility(pu_stats({success, success, success}, 4.0), spec), 1.0);
    spec.gamma = 1.0;
    EXPECT_DOUBLE_EQ(*avg_pu_utility(pu_stats({success, failure, failure, success}, 4.0), spec), 0.5);
    EXPECT_FALSE(avg_pu_utility(PuClassStats{}, spec));
}

TEST(Metrics, DroppedPacketsCountAsServedFailures) {
    PuClassSpec spec;
    PuClassStats s;
    s.dropped = 1;
    s.latencies.push_back(spec.deadline_ms);
    s.outcomes.push_back(Outcome::failure);
    ++s.completed;
    s.latencies.push_back(1.0);
    s.outcomes.push_back(Outcome::success);
    EXPECT_EQ(s.served(), 2u);
    EXPECT_EQ(s.failures(), 1u);
    EXPECT_DOUBLE_EQ(*avg_pu_utility(s, spec), 0.5);
}

TEST(Metrics, EdAverage) {
    EdClassSpec spec;
    EdClassStats s;
    s.completed = 1;
    s.latencies = {0.0};
    EXPECT_DOUBLE_EQ(*avg_ed_utility(s, spec), 1.0);
    s.completed = 2;
    s.latencies = {10.0, 10.0};
    EXPECT_NEAR(*avg_ed_utility(s, spec), 0.50002269996488, 1e-12);
    s.latencies = {0.0, 1e6};
    EXPECT_NEAR(*avg_ed_utility(s, spec), 0.5, 1e-9);
}

TEST(Metrics, SystemUtility) {
    const std::vector<WeightedUtility> four{{0.9, 1}, {0.8, 1}, {0.7, 1}, {0.6, 1}};
    EXPECT_NEAR(system_utility(four), 0.3024, 1e-15);
    const std::vector<WeightedUtility> zero{{0.9, 1}, {0.0, 1}, {0.7, 1}};
    EXPECT_EQ(system_utility(zero), 0.0);
    const std::vector<WeightedUtility> root{{0.81, 0.5}};
    EXPECT_NEAR(system_utility(root), 0.9, 1e-15);
    const std::vector<WeightedUtility> clamped{{-0.4, 1}, {0.5, 1}};
    EXPECT_EQ(system_utility(clamped), 0.0);
    const std::vector<WeightedUtility> missing{{std::nullopt, 1}, {0.5, 1}};
    EXPECT_EQ(system_utility(missing), 0.5);
}

TEST(Metrics, SystemUtilityStaysInUnitInterval) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3.0, 1.5), w(0.1, 3.0);
    for (int i = 0; i < 5000; ++i) {
        std::vector<WeightedUtility> t(std::uniform_int_distribution<int>(1, 6)(rng));
        for (auto& x : t) x = {u(rng), w(rng)};
        const double v = system_utility(t);
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
}

TEST(Metrics, ReplicationAggregate) {
    const std::vector<double> same{0.5, 0.5, 0.5};
    const auto a = aggregate_replications(same);
    EXPECT_DOUBLE_EQ(a.mean, 0.5);
    EXPECT_DOUBLE_EQ(a.ci_half_width, 0.0);
    const std::vector<double> two{0.4, 0.6};
    EXPECT_DOUBLE_EQ(aggregate_replications(two).mean, 0.5);
    const std::vector<double> one{0.4};
    EXPECT_THROW(aggregate_replications(one), std::invalid_argument);
}

TEST(Metrics, ConfidenceIntervalLongHand) {
    const std::vector<double> v{0.61, 0.58, 0.66, 0.70, 0.52, 0.63, 0.59, 0.64, 0.67, 0.55,
                                0.60, 0.62, 0.57, 0.65, 0.69, 0.54, 0.61, 0.63, 0.58, 0.66};
    // mean 0.6150, sample variance 0.0024473684..., 1.96 * sqrt(var / 20)
    const auto a = aggregate_replications(v);
    EXPECT_NEAR(a.mean, 0.615, 1e-12);
    EXPECT_NEAR(a.ci_half_width, 1.96 * std::sqrt(0.00244736842105263 / 20.0), 1e-12);
}
