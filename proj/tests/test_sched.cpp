#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/sched/scheduler.hpp"

using namespace fedsim;
using namespace fedsim::sched;

namespace {

void check_well_formed(const ScheduleDecision& d, std::size_t num_devices) {
    CHECK(std::is_sorted(d.selected.begin(), d.selected.end()));
    std::set<std::size_t> uniq(d.selected.begin(), d.selected.end());
    CHECK(uniq.size() == d.selected.size());
    for (std::size_t id : d.selected) CHECK(id < num_devices);
}

// Exhaustive search: the n-subset maximizing the summed ratio, ties resolved
// toward lexicographically smaller id sets.
std::vector<std::size_t> brute_force_prop_fair(std::size_t n, const std::vector<double>& inst,
                                               const std::vector<double>& avg) {
    const std::size_t k = inst.size();
    std::vector<std::size_t> best;
    double best_sum = -1e300;
    for (std::uint64_t mask = 0; mask < (1ULL << k); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcountll(mask)) != n) continue;
        double sum = 0.0;
        std::vector<std::size_t> ids;
        for (std::size_t i = 0; i < k; ++i) {
            if (mask >> i & 1) {
                sum += inst[i] / avg[i];
                ids.push_back(i);
            }
        }
        if (sum > best_sum + 1e-12 ||
            (std::abs(sum - best_sum) <= 1e-12 && !best.empty() && ids < best)) {
            best_sum = sum;
            best = ids;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("schedule_random: n = K selects everyone") {
    auto d = schedule_random(7, 7, 1, 0);
    CHECK(d.selected == std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("schedule_random: deterministic in (seed, round)") {
    auto a = schedule_random(100, 10, 9, 4);
    auto b = schedule_random(100, 10, 9, 4);
    auto c = schedule_random(100, 10, 9, 5);
    CHECK(a.selected == b.selected);
    CHECK(a.selected != c.selected);
    check_well_formed(a, 100);
}

TEST_CASE("schedule_random: selection frequencies match the binomial oracle") {
    const std::size_t k = 10, n = 3;
    const int draws = 100000;
    std::vector<int> hits(k, 0);
    for (int t = 0; t < draws; ++t) {
        for (std::size_t id : schedule_random(k, n, 12, t).selected) ++hits[id];
    }
    const double p = static_cast<double>(n) / static_cast<double>(k);
    const double se = std::sqrt(p * (1.0 - p) / draws);
    for (std::size_t id = 0; id < k; ++id) {
        double freq = static_cast<double>(hits[id]) / draws;
        CHECK(std::abs(freq - p) <= 3.0 * se);
    }
}

TEST_CASE("schedule_random: n out of range is an input error") {
    CHECK_THROWS_AS(schedule_random(5, 6, 1, 0), InputError);
    CHECK_THROWS_AS(schedule_random(5, 0, 1, 0), InputError);
}

TEST_CASE("schedule_cyclic: one group selects every device each round") {
    for (int t = 0; t < 3; ++t) {
        auto d = schedule_cyclic(5, 1, t);
        CHECK(d.selected == std::vector<std::size_t>{0, 1, 2, 3, 4});
    }
}

TEST_CASE("schedule_cyclic: contiguous groups cycle modulo G") {
    CHECK(schedule_cyclic(6, 3, 0).selected == std::vector<std::size_t>{0, 1});
    CHECK(schedule_cyclic(6, 3, 1).selected == std::vector<std::size_t>{2, 3});
    CHECK(schedule_cyclic(6, 3, 2).selected == std::vector<std::size_t>{4, 5});
    CHECK(schedule_cyclic(6, 3, 3).selected == std::vector<std::size_t>{0, 1});
}

TEST_CASE("schedule_cyclic: every device exactly once per G rounds, all K and G") {
    for (std::size_t k = 1; k <= 20; ++k) {
        for (std::size_t g = 1; g <= k; ++g) {
            std::vector<int> count(k, 0);
            std::size_t max_size = 0, min_size = k;
            for (int t = 0; t < static_cast<int>(g); ++t) {
                auto d = schedule_cyclic(k, g, t);
                check_well_formed(d, k);
                max_size = std::max(max_size, d.selected.size());
                min_size = std::min(min_size, d.selected.size());
                for (std::size_t id : d.selected) ++count[id];
            }
            for (std::size_t id = 0; id < k; ++id) CHECK(count[id] == 1);
            CHECK(max_size - min_size <= 1);
        }
    }
    CHECK_THROWS_AS(schedule_cyclic(3, 4, 0), InputError);
}

TEST_CASE("schedule_prop_fair: equal ratios fall back to the lowest ids") {
    std::vector<double> inst{2.0, 2.0, 2.0, 2.0};
    std::vector<double> avg{1.0, 1.0, 1.0, 1.0};
    auto d = schedule_prop_fair(2, inst, avg, 0);
    CHECK(d.selected == std::vector<std::size_t>{0, 1});
}

TEST_CASE("schedule_prop_fair: picks the top ratio pair") {
    std::vector<double> inst{0.5, 2.0, 1.0, 3.0};
    std::vector<double> avg{1.0, 1.0, 1.0, 1.0};
    auto d = schedule_prop_fair(2, inst, avg, 0);
    CHECK(d.selected == std::vector<std::size_t>{1, 3});
    CHECK(d.selected == brute_force_prop_fair(2, inst, avg));
}

TEST_CASE("schedule_prop_fair: n equal to device count selects all") {
    std::vector<double> inst{0.1, 0.9, 0.4};
    std::vector<double> avg{1.0, 2.0, 3.0};
    auto d = schedule_prop_fair(3, inst, avg, 0);
    CHECK(d.selected == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("schedule_prop_fair: equals exhaustive subset search for K <= 12") {
    Rng rng(555);
    for (int rep = 0; rep < 300; ++rep) {
        std::size_t k = 2 + rng.uniform_index(11);  // 2..12
        std::size_t n = 1 + rng.uniform_index(k);
        std::vector<double> inst(k), avg(k);
        for (std::size_t i = 0; i < k; ++i) {
            inst[i] = rng.uniform(0.01, 5.0);
            avg[i] = rng.uniform(0.1, 5.0);
        }
        auto got = schedule_prop_fair(n, inst, avg, 0);
        check_well_formed(got, k);
        CHECK(got.selected == brute_force_prop_fair(n, inst, avg));
    }
}

TEST_CASE("schedule_prop_fair: nonpositive average SNR is rejected") {
    std::vector<double> inst{1.0, 2.0};
    std::vector<double> avg{1.0, 0.0};
    CHECK_THROWS_AS(schedule_prop_fair(1, inst, avg, 0), InputError);
}

TEST_CASE("indicators: ones exactly at selected ids") {
    ScheduleDecision empty;
    CHECK(indicators(empty, 4) == std::vector<std::uint8_t>{0, 0, 0, 0});

    ScheduleDecision d;
    d.selected = {0, 2};
    CHECK(indicators(d, 3) == std::vector<std::uint8_t>{1, 0, 1});

    ScheduleDecision big;
    big.selected = {1, 3, 4};
    auto ind = indicators(big, 6);
    std::size_t sum = 0;
    for (auto v : ind) sum += v;
    CHECK(sum == big.selected.size());
}

TEST_CASE("scheduler classes mirror the free functions") {
    RoundContext ctx;
    ctx.round = 4;
    ctx.num_to_select = 3;
    ctx.num_devices = 9;

    RandomScheduler random(13);
    auto r = random.decide(ctx);
    CHECK(r.selected == schedule_random(9, 3, 13, 4).selected);

    CyclicScheduler cyclic(3);
    auto c = cyclic.decide(ctx);
    CHECK(c.selected == schedule_cyclic(9, 3, 4).selected);

    std::vector<double> inst{1, 5, 2, 8, 3, 1, 9, 4, 2};
    std::vector<double> avg(9, 1.0);
    ctx.snr_inst = inst;
    ctx.snr_avg = avg;
    PropFairScheduler pf;
    auto p = pf.decide(ctx);
    CHECK(p.selected == schedule_prop_fair(3, inst, avg, 4).selected);
}
