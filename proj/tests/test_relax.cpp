#include "oracles.hpp"
#include "sandpile/relax.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sandpile;

namespace {

SandState ray_gamma_k2(std::int64_t L) {
    SandState st(sinks::TruncatedRay{L}, Rect{1, 0, L, 0});
    for (std::int64_t n = 1; n <= L; ++n) {
        const int beta = (n == 1 || n == L) ? 3 : 2;
        const int phi = n % 2 ? -2 : 1;
        st.set({n, 0}, 3 * beta + phi);
    }
    return st;
}

struct Small {
    SandState state;
    oracle::Graph graph;
    std::vector<std::pair<int, int>> coords;
    oracle::Vec psi;
};

// Random state on a w x h window with random interior sinks; everything
// outside the window is a sink.
Small random_small(std::mt19937_64& rng, int w, int h, int vmax) {
    std::bernoulli_distribution sinkp(0.15);
    std::uniform_int_distribution<int> val(0, vmax);
    std::vector<Coord> sinkcells;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (sinkp(rng)) sinkcells.push_back({x, y});
    const auto spec = make_explicit(Rect{0, 0, w - 1, h - 1}, sinkcells);
    Small s{SandState(spec, Rect{0, 0, w - 1, h - 1}), {}, {}, {}};
    s.graph = oracle::grid_graph(w, h, [&](int x, int y) { return is_sink(spec, {x, y}); }, false, &s.coords);
    for (auto [x, y] : s.coords) {
        const int v = val(rng);
        s.state.set({x, y}, v);
        s.psi.push_back(v);
    }
    return s;
}

oracle::Vec odometer_on(const Small& s, const RelaxReport& r) {
    oracle::Vec out;
    for (auto [x, y] : s.coords) out.push_back(r.odometer[{x, y}].convert_to<std::int64_t>());
    return out;
}

}  // namespace

TEST(RelaxNaive, RayOrderTwoState) {
    const auto rep = relax_naive(ray_gamma_k2(200));
    for (std::int64_t n = 1; n <= 180; ++n) {
        const int expect = n == 1 ? 1 : (n % 2 ? 0 : 3);
        ASSERT_EQ(rep.stable.at({n, 0}), expect) << n;
    }
    EXPECT_TRUE(check_relaxation_certificate(ray_gamma_k2(200), rep));
}

TEST(RelaxNaive, StableInputIsFixed) {
    SandState st(sinks::PeriodicLattice{3, 3}, Rect{0, 0, 5, 5}, 0);
    st.set({1, 1}, 3);
    st.set({4, 2}, 2);
    for (const auto& rep : {relax_naive(st), relax_bulk(st)}) {
        EXPECT_EQ(rep.stable, st);
        EXPECT_EQ(rep.topple_events, 0);
        EXPECT_EQ(rep.sweeps, 0);
        for (const auto& f : rep.odometer.values()) EXPECT_EQ(f, 0);
    }
}

TEST(RelaxNaive, SingleToppling) {
    SandState st(sinks::PeriodicLattice{2, 2}, Rect{0, -1, 2, 1});
    st.set({1, 0}, 4);
    const auto rep = relax_naive(st);
    EXPECT_EQ(rep.stable.at({1, 0}), 0);
    EXPECT_EQ(rep.stable.at({1, 1}), 1);
    EXPECT_EQ(rep.stable.at({1, -1}), 1);
    EXPECT_EQ(rep.stable.at({0, 0}), 0);
    EXPECT_EQ(rep.stable.at({2, 0}), 0);
    EXPECT_EQ(rep.topple_events, 1);
    EXPECT_EQ(rep.odometer[(Coord{1, 0})], 1);
}

TEST(RelaxBulk, MatchesNaiveOnMillionGrains) {
    SandState st(sinks::PeriodicLattice{6, 6}, Rect::around({1, 0}, 4));
    st.set({1, 0}, 1'000'000);
    const auto a = relax_naive(st);
    const auto b = relax_bulk(st);
    EXPECT_TRUE(check_relaxation_certificate(st, a));
    EXPECT_TRUE(check_relaxation_certificate(st, b));
    EXPECT_EQ(a.topple_events, b.topple_events);
    const Rect u = a.peak_window.united(b.peak_window);
    for (std::int64_t y = u.y0; y <= u.y1; ++y)
        for (std::int64_t x = u.x0; x <= u.x1; ++x) {
            const Coord z{x, y};
            ASSERT_EQ(a.stable.at(z), b.stable.at(z));
            const BigInt fa = a.peak_window.contains(z) ? a.odometer[z] : BigInt(0);
            const BigInt fb = b.peak_window.contains(z) ? b.odometer[z] : BigInt(0);
            ASSERT_EQ(fa, fb);
        }
}

TEST(RelaxBulk, PromotesBeyondSixtyFourBits) {
    SandState st(sinks::PeriodicLattice{2, 2}, Rect::around({1, 1}, 2));
    const BigInt huge = BigInt(1) << 90;
    st.set({1, 1}, huge);
    const auto rep = relax_bulk(st);
    EXPECT_TRUE(check_relaxation_certificate(st, rep));
    // 4 sink-free neighbours away: the whole pile leaves through (1,1)'s
    // neighbours, each with two sinks.
    EXPECT_GT(rep.odometer[(Coord{1, 1})], BigInt(1) << 80);
}

TEST(RelaxBulk, MatchesReferenceOnRandomSmallGrids) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        auto s = random_small(rng, 2 + trial % 5, 2 + (trial / 5) % 5, 30);
        const auto rep = relax_bulk(s.state);
        const auto naive = relax_naive(s.state);
        const auto [ref_state, ref_odo] = oracle::relax(s.graph, s.psi);
        ASSERT_EQ(odometer_on(s, rep), ref_odo);
        ASSERT_EQ(odometer_on(s, naive), ref_odo);
        for (std::size_t i = 0; i < s.coords.size(); ++i)
            ASSERT_EQ(rep.stable.at({s.coords[i].first, s.coords[i].second}), ref_state[i]);
    }
}

TEST(LeastAction, OdometerIsLeastFeasible) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        auto s = random_small(rng, 1 + trial % 6, 1 + (trial / 6) % 6, 12);
        const auto rep = relax_bulk(s.state);
        ASSERT_EQ(odometer_on(s, rep), oracle::least_feasible(s.graph, s.psi));
    }
}

TEST(LeastAction, ExhaustiveOnTinyGrids) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        auto s = random_small(rng, 2, 2 + trial % 2, 9);
        const auto F = odometer_on(s, relax_bulk(s.state));
        const std::int64_t bound = *std::max_element(F.begin(), F.end()) + 2;
        int seen = 0;
        oracle::for_each_feasible(s.graph, s.psi, bound, [&](const oracle::Vec& G) {
            ++seen;
            for (std::size_t i = 0; i < F.size(); ++i) ASSERT_LE(F[i], G[i]);
        });
        EXPECT_GT(seen, 0);
    }
}

TEST(Abelian, RandomOrdersAgreeOnTruncatedRay) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> val(0, 12);
    for (int trial = 0; trial < 5; ++trial) {
        SandState st(sinks::TruncatedRay{30}, Rect{1, 0, 30, 0});
        for (std::int64_t n = 1; n <= 30; ++n) st.set({n, 0}, val(rng));
        const auto ref = relax_bulk(st);
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            RelaxOptions opt;
            opt.order = ToppleOrder::Random;
            opt.seed = seed;
            const auto r = relax_naive(st, opt);
            ASSERT_EQ(r.stable, ref.stable);
            ASSERT_EQ(r.odometer, ref.odometer);
        }
    }
}

TEST(OdometerBound, BoundedByMTimesH) {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> val(0, 40);
    const SinkSpec s = sinks::PeriodicLattice{2, 2};
    for (int trial = 0; trial < 50; ++trial) {
        SandState st(s, Rect{-4, -4, 4, 4});
        std::int64_t M = 0;
        for (std::int64_t y = -4; y <= 4; ++y)
            for (std::int64_t x = -4; x <= 4; ++x) {
                if (is_sink(s, {x, y})) continue;
                const int v = val(rng);
                st.set({x, y}, v);
                M = std::max<std::int64_t>(M, v);
            }
        const auto rep = relax_bulk(st);
        for (std::size_t i = 0; i < rep.odometer.size(); ++i) {
            const Coord z = rep.odometer.coord(i);
            ASSERT_LE(rep.odometer.values()[i], M * superharmonic_h(s, z, 2));
        }
    }
}

TEST(Certificate, DetectsTampering) {
    SandState st(sinks::PeriodicLattice{6, 6}, Rect::around({3, 3}, 3));
    st.set({3, 3}, 500);
    auto rep = relax_bulk(st);
    EXPECT_TRUE(check_relaxation_certificate(st, rep));

    auto bumped = rep;
    bumped.odometer[{3, 3}] += 1;
    const auto c1 = check_relaxation_certificate(st, bumped);
    EXPECT_FALSE(c1);
    ASSERT_TRUE(c1.cell.has_value());

    auto unstable = rep;
    unstable.stable.set({3, 3}, 4);
    const auto c2 = check_relaxation_certificate(st, unstable);
    EXPECT_FALSE(c2);
    EXPECT_EQ(*c2.cell, (Coord{3, 3}));

    auto on_sink = rep;
    on_sink.odometer[{0, 0}] = 1;
    EXPECT_FALSE(check_relaxation_certificate(st, on_sink));
}

TEST(Relax, NonzeroBackgroundGrowsWindow) {
    SandState st(sinks::PeriodicLattice{3, 3}, Rect::around({1, 1}, 2), 2);
    st.add({1, 1}, 400);
    const auto rep = relax_bulk(st);
    EXPECT_TRUE(check_relaxation_certificate(st, rep));
    EXPECT_EQ(rep.stable, relax_naive(st).stable);
}

TEST(Relax, RejectsUnstableBackground) {
    SandState st(sinks::PeriodicLattice{6, 6}, Rect::around({3, 3}, 3), 4);
    EXPECT_THROW(relax_bulk(st), std::invalid_argument);
}

TEST(Relax, BudgetExceeded) {
    SandState st(sinks::PeriodicLattice{6, 6}, Rect::around({3, 3}, 3));
    st.set({3, 3}, 100000);
    RelaxOptions opt;
    opt.max_sweeps = 3;
    EXPECT_THROW(relax_bulk(st, opt), RelaxBudgetExceeded);
    opt = {};
    opt.events_per_cell = 1;
    EXPECT_THROW(relax_naive(st, opt), RelaxBudgetExceeded);
}
