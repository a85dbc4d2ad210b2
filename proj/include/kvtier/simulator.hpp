// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kvtier/config.hpp"
#include "kvtier/metadata.hpp"
#include "kvtier/pipeline.hpp"
#include "kvtier/scheduler.hpp"
#include "kvtier/workload.hpp"

namespace kvtier::sim {

/// GPU-buffer policy under test; Buffered is the full system.
enum class CacheMode { NoCache, MandatoryOnly, Buffered };

struct RunOptions {
    std::uint64_t seed = 0;
    CacheMode cache_mode = CacheMode::Buffered;
    std::optional<workload::Trace> playback;  // selection playback instead of synthetic
    std::string emit_steps_path;              // line-delimited per-step JSON when set
    std::string eviction_log_path;            // line-delimited eviction records when set
};

struct RequestReport {
    RequestId id = 0;
    double arrival_s = 0.0;
    double admitted_s = 0.0;
    double completed_s = 0.0;
    double ttft_proxy_s = 0.0;  // queueing delay + one scheduling quantum
    double mean_tpot_s = 0.0;
    std::uint64_t output_tokens = 0;
    std::uint32_t preemptions = 0;
};

struct RunReport {
    std::string config_echo;
    std::uint64_t seed = 0;
    std::string cache_mode;
    std::uint64_t total_output_tokens = 0;
    double simulated_seconds = 0.0;
    double throughput_tokens_per_s = 0.0;
    double mean_ttft_proxy_s = 0.0;
    double mean_tpot_s = 0.0;
    double mean_batch_size = 0.0;
    double hit_ratio = 0.0;
    std::uint64_t selected_partitions = 0;
    std::uint64_t hit_partitions = 0;
    std::uint64_t missed_partitions = 0;
    std::uint64_t transferred_bytes = 0;
    std::uint64_t decode_steps = 0;
    std::uint64_t preemptions = 0;
    std::uint64_t reclaim_events = 0;
    FootprintReport footprint;
    std::vector<RequestReport> requests;

    std::string to_json() const;  // reproducible byte-for-byte given (config, seed)
};

/// Trace-driven serving simulation: Poisson arrivals feed the scheduler's
/// admission control; each decode step runs selection, buffer elasticity and
/// retrieval for every active request, advancing simulated time by the
/// cost-model step time.
class Simulator {
  public:
    Simulator(SimConfig cfg, RunOptions opt);

    RunReport run(const std::vector<workload::Arrival>& arrivals);

  private:
    SimConfig cfg_;
    RunOptions opt_;
};

/// One row of a `compare` sweep.
struct ComparePoint {
    std::string label;
    double buffer_ratio = 0.0;
    double hit_ratio = 0.0;
    double realized_tpot_s = 0.0;
    double realized_miss_ratio = 0.0;
    double envelope_tpot_s = 0.0;
    double belady_miss_ratio = 0.0;
    double lru_miss_ratio = 0.0;
    double throughput_tokens_per_s = 0.0;
};

std::string compare_csv(const std::vector<ComparePoint>& points);

/// Buffer-ratio sweep on one synthetic single-request workload: the realized
/// simulator numbers per ratio, next to the ideal envelope evaluated with the
/// clairvoyant-optimal miss ratio on the identical selection trace.
std::vector<ComparePoint> compare_buffer_ratios(const SimConfig& cfg, std::uint64_t seed,
                                                const std::vector<double>& ratios,
                                                std::uint64_t steps,
                                                std::uint64_t prompt_tokens = 0);

/// Cache-mode sweep (no caching / mandatory-only / mandatory+buffering) on
/// the same workload shape.
std::vector<ComparePoint> compare_cache_modes(const SimConfig& cfg, std::uint64_t seed,
                                              std::uint64_t steps,
                                              std::uint64_t prompt_tokens = 0);

}  // namespace kvtier::sim
