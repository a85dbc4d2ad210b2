// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance suite. Each case prints one PASS line when every
// check in it held; doctest reports any failure with the offending values.

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "kvtier/envelope.hpp"
#include "kvtier/metadata.hpp"
#include "kvtier/oracle.hpp"
#include "kvtier/replacement.hpp"
#include "kvtier/rng.hpp"
#include "kvtier/scheduler.hpp"
#include "kvtier/simulator.hpp"
#include "kvtier/workload.hpp"

using namespace kvtier;

namespace {

constexpr std::uint64_t kSeed = 20260811;

/// Criterion-6 workload shape: budget 64 of 4096 partitions, p=0.7, s=0.8.
SimConfig saturation_config() {
    SimConfig cfg;
    cfg.model = {1, 1, 128, 2, 65536};
    cfg.sparse.retrieval_budget = RetrievalBudget::from_fraction(0.0156);
    cfg.sparse.partition_granularity = 8;
    cfg.sparse.page_size = 8;
    cfg.sparse.summary_ratio = 0.125;
    cfg.sparse.update_interval = 256;
    cfg.tiers.device_capacity = 1ull << 31;
    cfg.tiers.host_capacity = 1ull << 36;
    cfg.tiers.bw_hbm = 2.0e12;
    cfg.tiers.bw_pcie = cfg.tiers.bw_hbm / 60.0;  // PCIe-bound
    cfg.tiers.t_mlp = 1e-6;
    cfg.tiers.per_transfer_latency = 1e-7;
    cfg.metadata.max_batch_slots = 4;
    cfg.scheduler.min_buffer_ratio = 5.0;
    cfg.locality = {0.7, 0.8};
    return cfg;
}

/// Runs one single-head trace through the bucketed-LRU engine and counts
/// partition misses.
std::uint64_t bucketed_misses(const oracle::AccessTrace& trace, std::uint64_t num_partitions,
                              std::uint32_t n_buckets) {
    StoreConfig c;
    c.model = {1, 1, 128, 2, num_partitions * 8};
    c.sparse.retrieval_budget = RetrievalBudget::from_fraction(0.5);
    c.sparse.partition_granularity = 8;
    c.sparse.page_size = 8;
    c.settings.max_batch_slots = 1;
    c.device_page_capacity = 1 << 22;
    c.host_page_capacity = 1 << 23;
    MetadataStore store(c);
    ReplacementEngine engine(store, {n_buckets, EvictionMode::BucketExact});
    store.attach_request(1);
    const HeadKey key{1, 0, 0};
    store.register_partitions(key, PartitionSpec::uniform(num_partitions * 8, 8));
    store.grow_buffer(key, trace.capacity_pages);
    std::uint64_t misses = 0;
    for (std::size_t s = 0; s < trace.steps.size(); ++s)
        misses += engine.replace(key, trace.steps[s], s).admissions.size();
    return misses;
}

oracle::AccessTrace seeded_trace(std::uint64_t seed, std::uint64_t num_partitions,
                                 std::uint64_t budget, std::uint64_t capacity, std::uint64_t steps,
                                 double p, double zipf_s) {
    workload::LocalityModel lm{p, zipf_s, budget, seed};
    auto t = workload::generate_trace(lm, num_partitions, steps);
    t.capacity_pages = capacity;
    return t;
}

}  // namespace

TEST_SUITE_BEGIN("acceptance");

TEST_CASE("criterion 1: kv-size anchors") {
    const ModelShape shape{36, 8, 128, 2, 131072};
    const std::uint64_t bytes = envelope::kv_bytes(shape, 131072, 1);
    REQUIRE(bytes == 19327352832ull);
    const double gb = static_cast<double>(bytes) / 1e9;
    REQUIRE(gb >= 19.0);
    REQUIRE(gb <= 19.5);
    const std::uint64_t slice = envelope::kv_selected_bytes(shape, 131072, 1, 0.05);
    REQUIRE(slice == 966367641ull);
    REQUIRE(slice < 1000000000ull);
    std::printf("[PASS] criterion 1: kv_bytes(128K)=%.3f GB in [19.0,19.5]; 5%% slice %.3f GB < 1 GB\n",
                gb, static_cast<double>(slice) / 1e9);
}

TEST_CASE("criterion 2: tpot decomposition is exact") {
    std::mt19937_64 rng(kSeed);
    for (int trial = 0; trial < 100; ++trial) {
        envelope::EnvelopeParams p;
        p.batch = 1 + rng() % 64;
        p.num_layers = 1 + rng() % 96;
        p.num_kv_heads = 1 + rng() % 16;
        p.head_dim = 32 << (rng() % 3);
        p.bytes_per_element = 1 << (rng() % 3);
        p.context_tokens = 1 + rng() % 200000;
        p.summary_ratio = uniform01(rng);
        p.budget_fraction = uniform01(rng);
        p.miss_ratio = uniform01(rng);
        p.bw_hbm = 1e11 + uniform01(rng) * 3e12;
        p.bw_pcie = 1e9 + uniform01(rng) * 6e10;
        p.t_mlp = uniform01(rng) * 1e-2;
        const auto t = envelope::tpot(p);
        REQUIRE(t.total_s == t.hbm_s + t.pcie_s + t.mlp_s);

        p.summary_ratio = 0.0;
        p.budget_fraction = 0.0;
        p.miss_ratio = 0.0;
        REQUIRE(envelope::tpot(p).total_s == p.t_mlp);
    }
    std::printf("[PASS] criterion 2: 100 random parameter sets decompose bit-exactly; "
                "rho=alpha=beta=0 returns t_mlp\n");
}

TEST_CASE("criterion 3: clairvoyant policy equals the exhaustive minimum") {
    std::mt19937_64 rng(kSeed);
    int instances = 0;
    for (; instances < 1000; ++instances) {
        oracle::AccessTrace t;
        t.capacity_pages = 2 + rng() % 3;
        const std::uint64_t universe = 2 + rng() % 6;
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
            if (rng() % 5 == 0) break;
        }
        REQUIRE(oracle::belady(t) == oracle::exhaustive_min(t));
    }
    std::printf("[PASS] criterion 3: belady == exhaustive minimum on %d seeded instances\n",
                instances);
}

TEST_CASE("criterion 4: dominance chain belady <= lru <= bucketed") {
    std::mt19937_64 rng(kSeed + 4);
    int traces = 0;
    for (; traces < 200; ++traces) {
        const std::uint64_t capacity = 8 + rng() % 249;  // 8..256
        const std::uint64_t budget = 1 + rng() % std::min<std::uint64_t>(capacity, 32);
        const std::uint64_t num_partitions =
            std::max<std::uint64_t>(capacity + 8, budget * (2 + rng() % 15));
        const double p = 0.9 * uniform01(rng);
        const double s = 1.2 * uniform01(rng);
        auto t = seeded_trace(rng(), num_partitions, budget, capacity, 500, p, s);

        const std::uint64_t opt = oracle::belady(t);
        const std::uint64_t lru = oracle::lru_reference(t).miss_count;
        // The lru <= bucketed leg is exact when the bucket range covers the
        // trace; run the chain at that resolution. Coarser buckets can evict
        // luckily inside the saturated bucket (id-order ties), so at the
        // default 64 buckets only the clairvoyant lower bound is a theorem.
        const std::uint64_t bucketed = bucketed_misses(t, num_partitions, 512);
        const std::uint64_t bucketed64 = bucketed_misses(t, num_partitions, 64);
        REQUIRE(opt <= lru);
        REQUIRE(lru <= bucketed);
        REQUIRE(opt <= bucketed64);
    }
    std::printf("[PASS] criterion 4: belady <= lru <= bucketed on %d seeded traces, zero "
                "violations (plus belady <= 64-bucket engine on each)\n",
                traces);
}

TEST_CASE("criterion 5: bucketed-lru fidelity to the step-granular reference") {
    std::mt19937_64 rng(kSeed + 5);
    const std::uint32_t n_buckets = 64;

    int exact_traces = 0;
    for (; exact_traces < 200; ++exact_traces) {
        const std::uint64_t capacity = 8 + rng() % 120;
        const std::uint64_t budget = 1 + rng() % std::min<std::uint64_t>(capacity, 24);
        const std::uint64_t num_partitions = std::max<std::uint64_t>(capacity + 8, budget * (2 + rng() % 12));
        const std::uint64_t steps = 1 + rng() % n_buckets;  // <= n_buckets
        auto t = seeded_trace(rng(), num_partitions, budget, capacity, steps, 0.9 * uniform01(rng),
                              1.2 * uniform01(rng));
        const std::uint64_t lru = oracle::lru_reference(t).miss_count;
        const std::uint64_t bucketed = bucketed_misses(t, num_partitions, n_buckets);
        REQUIRE(bucketed == lru);
    }

    double worst_excess = 0.0;
    int long_traces = 0;
    for (; long_traces < 200; ++long_traces) {
        const std::uint64_t budget = 8 + rng() % 17;           // 8..24
        const std::uint64_t capacity = budget * (2 + rng() % 5);  // 2x..6x
        const std::uint64_t num_partitions = budget * (8 + rng() % 9);
        auto t = seeded_trace(rng(), num_partitions, budget, capacity, 4 * n_buckets,
                              0.3 + 0.6 * uniform01(rng), 1.2 * uniform01(rng));
        const std::uint64_t lru = oracle::lru_reference(t).miss_count;
        const std::uint64_t bucketed = bucketed_misses(t, num_partitions, n_buckets);
        REQUIRE(bucketed + 0.0 <= 1.10 * static_cast<double>(lru));
        if (lru > 0)
            worst_excess = std::max(
                worst_excess, (static_cast<double>(bucketed) - static_cast<double>(lru)) /
                                  static_cast<double>(lru));
    }
    std::printf("[PASS] criterion 5: exact equality on %d short traces; excess <= 10%% on %d "
                "4x-length traces (worst %.2f%%)\n",
                exact_traces, long_traces, 100.0 * worst_excess);
}

TEST_CASE("criterion 6: hit ratio saturates by 4x buffering") {
    workload::LocalityModel lm{0.7, 0.8, 64, kSeed};
    auto base = workload::generate_trace(lm, 4096, 10000);

    auto hit_ratio_at = [&](double ratio) {
        oracle::AccessTrace t = base;
        t.capacity_pages = static_cast<std::uint64_t>(64.0 * (1.0 + ratio));
        const std::uint64_t misses = bucketed_misses(t, 4096, 64);
        const std::uint64_t total = t.total_accesses();
        return 1.0 - static_cast<double>(misses) / static_cast<double>(total);
    };

    const double h1 = hit_ratio_at(1.0);
    const double h2 = hit_ratio_at(2.0);
    const double h3 = hit_ratio_at(3.0);
    const double h4 = hit_ratio_at(4.0);
    const double h6 = hit_ratio_at(6.0);
    const double h8 = hit_ratio_at(8.0);
    REQUIRE(h2 >= h1);
    REQUIRE(h4 >= h3);
    const double gain_1_4 = h4 - h1;
    const double gain_4_8 = h8 - h4;
    REQUIRE(gain_1_4 > 0.0);
    REQUIRE(gain_4_8 <= 0.20 * gain_1_4);
    std::printf("[PASS] criterion 6: hit ratios 1x..8x = %.4f %.4f %.4f %.4f %.4f %.4f; "
                "gain(4x->8x) = %.1f%% of gain(1x->4x) <= 20%%\n",
                h1, h2, h3, h4, h6, h8, 100.0 * gain_4_8 / gain_1_4);
}

TEST_CASE("criterion 7: buffering raises decode throughput under PCIe-bound tiers") {
    auto cfg = saturation_config();
    auto points = sim::compare_cache_modes(cfg, kSeed, 10000, 32768);
    REQUIRE(points.size() == 3);
    const double base = points[0].throughput_tokens_per_s;
    const double mandatory = points[1].throughput_tokens_per_s;
    const double buffered = points[2].throughput_tokens_per_s;
    REQUIRE(buffered >= 1.25 * mandatory);
    REQUIRE(buffered >= 1.50 * base);
    REQUIRE(mandatory > base);
    std::printf("[PASS] criterion 7: throughput base %.0f < mandatory %.0f < buffered %.0f tok/s "
                "(buffered/mandatory %.2fx >= 1.25, buffered/base %.2fx >= 1.5)\n",
                base, mandatory, buffered, buffered / mandatory, buffered / base);
}

TEST_CASE("criterion 8: hierarchical metadata reduction") {
    StoreConfig c;
    c.model = {80, 8, 128, 2, 131072};
    c.sparse.retrieval_budget = RetrievalBudget::from_fraction(0.0156);
    c.sparse.partition_granularity = 64;
    c.sparse.page_size = 8;
    c.settings.max_batch_slots = 32;
    c.device_page_capacity = 2ull << 20;
    c.host_page_capacity = 16ull << 20;
    MetadataStore store(c);
    ReplacementEngine engine(store, {64, EvictionMode::BucketExact});

    // One full-context request whose device working set is mandatory plus
    // five parts buffering (six disjoint selection rounds per head).
    store.attach_request(1);
    const std::uint64_t budget = c.sparse.budget_partitions(131072);
    for (std::uint32_t l = 0; l < 80; ++l) {
        for (std::uint32_t h = 0; h < 8; ++h) {
            const HeadKey key{1, l, h};
            store.register_partitions(key, PartitionSpec::uniform(131072, 64));
            store.grow_buffer(key, 6 * budget * 8);
            for (std::uint64_t s = 0; s < 6; ++s) {
                std::vector<PartitionId> sel;
                for (std::uint64_t i = 0; i < budget; ++i)
                    sel.push_back(static_cast<PartitionId>(s * budget + i));
                engine.replace(key, sel, s);
            }
        }
    }

    const auto fp = store.footprint();
    // (a) two-level physical device bytes <= flat logical device bytes / 10.
    REQUIRE(fp.device_physical * 10 <= fp.device_logical);
    // (b) offset and page-array tables sit entirely on the host tier...
    REQUIRE(fp.tables[2].tier == "host");
    REQUIRE(fp.tables[3].tier == "host");
    // ...which cuts the remaining device metadata by at least 3x more.
    const double additional = static_cast<double>(fp.device_physical + fp.host_physical) /
                              static_cast<double>(fp.device_physical);
    REQUIRE(additional >= 3.0);
    std::printf("[PASS] criterion 8: two-level device reduction %.1fx (>= 10x); tier-split "
                "additional %.2fx (>= 3x)\n",
                static_cast<double>(fp.device_logical) / static_cast<double>(fp.device_physical),
                additional);
}

TEST_CASE("criterion 9: scheduler arithmetic") {
    sched::Scheduler s({5.0, 1 << 20});
    REQUIRE(s.admission_threshold(64) == 64 * 6);
    REQUIRE(sched::proportional_shares({32768, 98304}, 40) ==
            std::vector<std::uint64_t>{10, 30});
    REQUIRE(sched::proportional_shares({1, 1, 2}, 7) == std::vector<std::uint64_t>{2, 2, 3});
    std::printf("[PASS] criterion 9: threshold 64*(1+5)=384; shares 32K/96K need 40 -> 10/30; "
                "1:1:2 need 7 -> 2/2/3\n");
}

TEST_CASE("criterion 10: byte-identical reports for one seed") {
    auto cfg = saturation_config();
    cfg.metadata.max_batch_slots = 8;
    workload::ArrivalProcess proc;
    proc.rate = 3.0;
    proc.count = 5;
    proc.seed = kSeed;
    proc.input_len_min = proc.input_len_max = 16384;
    proc.output_len_min = 50;
    proc.output_len_max = 200;
    const auto arrivals = workload::poisson_arrivals(proc);

    sim::RunOptions opt;
    opt.seed = kSeed;
    const std::string a = sim::Simulator(cfg, opt).run(arrivals).to_json();
    const std::string b = sim::Simulator(cfg, opt).run(arrivals).to_json();
    REQUIRE(a == b);
    std::printf("[PASS] criterion 10: two runs produced byte-identical %zu-byte reports\n",
                a.size());
}

TEST_CASE("criterion 11: envelope bounds the realized tpot at every sweep point") {
    auto cfg = saturation_config();
    auto points = sim::compare_buffer_ratios(cfg, kSeed, {1.0, 2.0, 3.0, 4.0, 6.0, 8.0}, 10000, 32768);
    REQUIRE(points.size() == 6);
    for (const auto& p : points) {
        REQUIRE(p.envelope_tpot_s <= p.realized_tpot_s);
    }
    std::printf("[PASS] criterion 11: envelope tpot <= realized tpot at all %zu sweep points "
                "(tightest margin %.3fx)\n",
                points.size(), [&] {
                    double worst = 1e9;
                    for (const auto& p : points)
                        worst = std::min(worst, p.realized_tpot_s / p.envelope_tpot_s);
                    return worst;
                }());
}

TEST_SUITE_END();
