#include <gtest/gtest.h>

#include "support/micro_trace.hpp"

using namespace m2m;
using m2m::oracle::ReferenceSim;

namespace {

void expect_same(const oracle::MicroCase& mc, int case_no) {
    const auto policy = make_policy(PolicyKind::proposed, mc.cfg);
    Engine engine(mc.cfg, mc.trace, *policy);
    engine.run();
    const auto ref = ReferenceSim(mc.cfg, mc.trace).run();
    const auto& packets = engine.state().packets;
    ASSERT_EQ(packets.size(), ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const Packet& p = packets[i];
        ASSERT_TRUE(ref[i].resolved);
        SCOPED_TRACE("case " + std::to_string(case_no) + " packet " + std::to_string(i));
        if (ref[i].dropped) {
            EXPECT_EQ(p.disposition, Disposition::dropped);
            EXPECT_NEAR(p.absolute_deadline_ms - p.arrival_ms, ref[i].latency_ms, 1e-9);
        } else {
            ASSERT_EQ(p.disposition, Disposition::completed);
            EXPECT_NEAR(*p.finish_ms - p.arrival_ms, ref[i].latency_ms, 1e-9);
        }
    }
}

}  // namespace

TEST(ReferenceSim, EmptySystemSojournIsServiceTime) {
    SimConfig cfg = heterogeneous_config();
    cfg.pu_classes[1].threshold_ms = 5.75;
    Trace t;
    t.entries.push_back({{ClassKind::ed, 2}, 2.0, 3.0});
    const auto out = ReferenceSim(cfg, t).run();
    ASSERT_EQ(out.size(), 1u);
    EXPECT_FALSE(out[0].dropped);
    EXPECT_DOUBLE_EQ(out[0].latency_ms, 3.0);
}

TEST(ReferenceSim, DropsBlockedPuAtDeadline) {
    SimConfig cfg = heterogeneous_config();
    cfg.pu_classes[0].threshold_ms = 4.0;  // never beats the ED job before the deadline
    cfg.pu_classes[1].threshold_ms = 5.75;
    Trace t;
    t.entries.push_back({{ClassKind::pu, 1}, 0.0, 1.0});
    t.entries.push_back({{ClassKind::ed, 2}, 0.0, 10.0});
    const auto out = ReferenceSim(cfg, t).run();
    EXPECT_TRUE(out[0].dropped);
    EXPECT_DOUBLE_EQ(out[0].latency_ms, 4.0);
    EXPECT_DOUBLE_EQ(out[1].latency_ms, 10.0);
}

TEST(ReferenceSim, RejectsOffLatticeTimes) {
    SimConfig cfg = heterogeneous_config();
    cfg.pu_classes[1].threshold_ms = 5.75;
    Trace t;
    t.entries.push_back({{ClassKind::ed, 1}, 0.1, 1.0});
    EXPECT_THROW(ReferenceSim(cfg, t), std::invalid_argument);
}

TEST(ReferenceSim, EngineMatchesOnRandomMicroTraces) {
    std::mt19937_64 rng(20261016);
    for (int i = 0; i < 400; ++i) expect_same(oracle::make_micro_case(rng, 10, true), i);
}

TEST(ReferenceSim, EngineMatchesWithoutDropping) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 200; ++i) expect_same(oracle::make_micro_case(rng, 10, false), i);
}

TEST(ReferenceSim, EngineMatchesOnBusierTraces) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) expect_same(oracle::make_micro_case(rng, 30, i % 2 == 0), i);
}
