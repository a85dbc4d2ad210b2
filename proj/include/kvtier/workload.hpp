// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <list>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kvtier/oracle.hpp"
#include "kvtier/rng.hpp"
#include "kvtier/types.hpp"

namespace kvtier::workload {

/// Sliding-working-set locality model: each step keeps every previously
/// selected partition with probability `reuse_fraction`; the rest refills
/// from a Zipf(zipf_s) draw over the recency ranking, truncated at a warm
/// window of budget * ceil(1 / (1 - reuse_fraction)) distinct ids (the
/// re-reference horizon of the keep process). Ranks beyond the window fall
/// through to cold ids, so the reuse working set is bounded and extra cache
/// beyond it yields diminishing returns.
struct LocalityModel {
    double reuse_fraction = 0.7;
    double zipf_s = 0.8;
    std::uint64_t budget = 64;  // partitions per step
    std::uint64_t seed = 0;
};

/// Incremental engine behind the locality model; shared by offline trace
/// generation and the live synthetic selector so both draw from the same
/// process. One instance per (request, layer, head) stream.
class WorkingSetSampler {
  public:
    WorkingSetSampler(std::uint64_t num_ids, double reuse_fraction, double zipf_s,
                      std::uint64_t budget);

    /// Draws the next step's selection. Either `count_budget` ids, or, when
    /// `token_budget` is nonzero, ids until their token counts reach it.
    /// `exclude`d ids (e.g. pinned partitions) are never returned.
    std::vector<PartitionId> next(
        std::mt19937_64& rng, std::uint64_t count_budget, std::uint64_t token_budget = 0,
        const std::unordered_set<PartitionId>* exclude = nullptr,
        const std::function<std::uint64_t(PartitionId)>& token_count = {});

    /// Extends the id space (decode-time partition growth).
    void grow_universe(std::uint64_t num_ids);

    std::uint64_t universe() const { return num_ids_; }
    std::uint64_t warm_window() const { return warm_window_; }

  private:
    void touch(PartitionId id);

    std::uint64_t num_ids_;
    double reuse_fraction_;
    double zipf_s_;
    std::uint64_t warm_window_;
    ZipfSampler zipf_;
    std::vector<PartitionId> prev_;
    std::list<PartitionId> recency_;  // most recent first
    std::unordered_map<PartitionId, std::list<PartitionId>::iterator> recency_pos_;
};

struct ArrivalProcess {
    double rate = 1.0;  // requests/s
    std::uint64_t count = 0;
    std::uint64_t seed = 0;
    std::uint64_t input_len_min = 32768;
    std::uint64_t input_len_max = 120000;
    std::uint64_t output_len_min = 500;
    std::uint64_t output_len_max = 15000;
};

struct Arrival {
    double time_s = 0.0;
    std::uint64_t input_tokens = 0;
    std::uint64_t output_tokens = 0;
};

/// One trace record: the partitions selected for (step, layer, head).
struct TraceRecord {
    StepIndex step = 0;
    std::uint32_t layer = 0;
    std::uint32_t head = 0;
    std::vector<PartitionId> selected;
};

/// Line-delimited selection trace shared by pipeline playback and oracles.
struct Trace {
    std::uint64_t num_partitions = 0;
    std::uint64_t budget = 0;
    std::vector<TraceRecord> records;

    /// Single-key projection in step order.
    oracle::AccessTrace project(std::uint32_t layer, std::uint32_t head,
                                std::uint64_t capacity_pages) const;
};

/// Deterministic per (model, seed). Step 0 draws `budget` distinct ids from
/// the Zipf distribution; later steps keep and refill.
oracle::AccessTrace generate_trace(const LocalityModel& model, std::uint64_t num_partitions,
                                   std::uint64_t steps);

/// Multi-head trace with per-(layer, head) sub-seeds derived from the master.
Trace generate_multi_head_trace(const LocalityModel& model, std::uint64_t num_partitions,
                                std::uint64_t steps, std::uint32_t layers, std::uint32_t heads);

std::vector<Arrival> poisson_arrivals(const ArrivalProcess& proc);

Trace read_trace(const std::string& path);
Trace read_trace(std::istream& in);
void write_trace(const Trace& trace, const std::string& path);
void write_trace(const Trace& trace, std::ostream& out);

void write_arrivals(const std::vector<Arrival>& arrivals, const std::string& path);
std::vector<Arrival> read_arrivals(const std::string& path);

}  // namespace kvtier::workload
