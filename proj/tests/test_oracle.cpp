// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "kvtier/errors.hpp"
#include "kvtier/oracle.hpp"
#include "kvtier/rng.hpp"

using namespace kvtier;
using namespace kvtier::oracle;

namespace {

AccessTrace make_trace(std::uint64_t capacity, std::vector<std::vector<PartitionId>> steps) {
    AccessTrace t;
    t.capacity_pages = capacity;
    t.steps = std::move(steps);
    return t;
}

AccessTrace random_small_trace(std::mt19937_64& rng) {
    AccessTrace t;
    t.capacity_pages = 2 + rng() % 3;  // 2..4
    const std::uint64_t universe = 2 + rng() % 5;
    std::uint64_t accesses = 0;
    while (accesses < 12) {
        std::vector<PartitionId> step;
        const std::uint64_t want = 1 + rng() % std::min<std::uint64_t>(t.capacity_pages, 3);
        for (std::uint64_t i = 0; i < want && accesses < 12; ++i) {
            const auto id = static_cast<PartitionId>(rng() % universe);
            if (std::find(step.begin(), step.end(), id) == step.end()) {
                step.push_back(id);
                ++accesses;
            }
        }
        t.steps.push_back(step);
        if (rng() % 4 == 0) break;
    }
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("oracle");

TEST_CASE("lru reference matches the hand-traced example") {
    // capacity 2, steps {A},{B},{A},{C},{B}: misses A,B,C,B = 4.
    auto t = make_trace(2, {{0}, {1}, {0}, {2}, {1}});
    auto r = lru_reference(t);
    CHECK(r.miss_count == 4);
}

TEST_CASE("lru with capacity covering all ids has only compulsory misses") {
    auto t = make_trace(16, {{0, 1}, {2, 3}, {0, 1, 2, 3}, {4}});
    CHECK(lru_reference(t).miss_count == 5);
}

TEST_CASE("empty trace has zero misses") {
    AccessTrace t;
    t.capacity_pages = 4;
    CHECK(lru_reference(t).miss_count == 0);
    CHECK(belady(t) == 0);
    CHECK(exhaustive_min(t) == 0);
}

TEST_CASE("belady beats lru on the classic pattern") {
    // capacity 2, {A},{B},{C},{A},{B}: Belady 4, LRU 5.
    auto t = make_trace(2, {{0}, {1}, {2}, {0}, {1}});
    CHECK(belady(t) == 4);
    CHECK(lru_reference(t).miss_count == 5);
    CHECK(exhaustive_min(t) == 4);
}

TEST_CASE("single-step trace misses equal the step demand") {
    auto t = make_trace(4, {{3, 1, 2}});
    CHECK(belady(t) == 3);
    CHECK(lru_reference(t).miss_count == 3);
}

TEST_CASE("exhaustive search refuses oversized instances") {
    auto big = make_trace(2, {{0}, {1}, {0}, {1}, {2}, {3}, {0}, {1}, {2}, {3}, {0}, {1}, {2}});
    CHECK(big.total_accesses() == 13);
    CHECK_THROWS_AS(exhaustive_min(big), InstanceTooLargeError);
    auto wide = make_trace(5, {{0}});
    CHECK_THROWS_AS(exhaustive_min(wide), InstanceTooLargeError);
}

TEST_CASE("trace fitting in capacity needs exactly its distinct ids") {
    auto t = make_trace(4, {{0, 1}, {2}, {0, 2}, {1, 3}});
    CHECK(exhaustive_min(t) == 4);
    CHECK(belady(t) == 4);
}

TEST_CASE("belady equals the exhaustive minimum on seeded instances") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 300; ++trial) {
        auto t = random_small_trace(rng);
        const auto opt = belady(t);
        const auto brute = exhaustive_min(t);
        REQUIRE(opt == brute);
    }
}

TEST_CASE("dominance: belady <= lru on seeded traces") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        AccessTrace t;
        t.capacity_pages = 4 + rng() % 60;
        const std::uint64_t universe = t.capacity_pages + rng() % 100;
        for (int s = 0; s < 120; ++s) {
            std::vector<PartitionId> step;
            const std::uint64_t want = 1 + rng() % std::min<std::uint64_t>(t.capacity_pages, 8);
            while (step.size() < want) {
                const auto id = static_cast<PartitionId>(rng() % universe);
                if (std::find(step.begin(), step.end(), id) == step.end()) step.push_back(id);
            }
            t.steps.push_back(step);
        }
        REQUIRE(belady(t) <= lru_reference(t).miss_count);
    }
}

TEST_CASE("multi-page partitions charge their page counts") {
    AccessTrace t;
    t.capacity_pages = 4;
    t.page_counts[0] = 3;
    t.page_counts[1] = 2;
    t.steps = {{0}, {1}, {0}};
    // Admitting 1 (2 pages) forces 0 (3 pages) out; 0 misses again.
    CHECK(lru_reference(t).miss_count == 3);
    CHECK(belady(t) == 3);
}

TEST_CASE("lru eviction log names victims and admissions") {
    auto t = make_trace(2, {{0}, {1}, {2}});
    auto r = lru_reference(t);
    REQUIRE(!r.log.empty());
    const auto& last = r.log.back();
    CHECK(last.step == 2);
    CHECK(last.evicted == std::vector<PartitionId>{0});
    CHECK(last.admitted == std::vector<PartitionId>{2});
}

TEST_SUITE_END();
