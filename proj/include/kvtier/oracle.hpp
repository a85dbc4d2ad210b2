// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "kvtier/types.hpp"

namespace kvtier::oracle {

/// A single head's access trace: for each decoding step, the set of
/// partitions selected, plus the device capacity in pages. Every partition id
/// carries a fixed page count (default 1).
struct AccessTrace {
    std::uint64_t capacity_pages = 0;
    std::vector<std::vector<PartitionId>> steps;
    std::unordered_map<PartitionId, std::uint32_t> page_counts;  // absent => 1
    /// Partitions resident before step 0 (e.g. placed by an ideal prefill).
    /// Policies admit them free of charge; empty means a cold cache.
    std::vector<PartitionId> initial_resident;

    std::uint32_t pages_of(PartitionId id) const {
        auto it = page_counts.find(id);
        return it == page_counts.end() ? 1u : it->second;
    }

    std::uint64_t step_demand(std::size_t step) const {
        std::uint64_t d = 0;
        for (PartitionId id : steps[step]) d += pages_of(id);
        return d;
    }

    std::uint64_t total_accesses() const {
        std::uint64_t n = 0;
        for (const auto& s : steps) n += s.size();
        return n;
    }
};

struct EvictionEvent {
    StepIndex step = 0;
    std::vector<PartitionId> evicted;
    std::vector<PartitionId> admitted;
};

struct PolicyResult {
    std::uint64_t miss_count = 0;
    std::vector<EvictionEvent> log;
};

/// Step-granular true LRU: every partition touched in a step shares that
/// step's recency; eviction takes the least-recent partition first, ties by
/// ascending device page id. Page ids are assigned lowest-free-first in
/// request order, the same allocation convention the replacement engine uses,
/// which pins the tie-break deterministically.
PolicyResult lru_reference(const AccessTrace& trace);

/// Clairvoyant optimum: evicts the resident partition whose next use lies
/// farthest in the future (never-used-again first, ties by ascending page
/// id). Exact lower bound for uniform page counts.
std::uint64_t belady(const AccessTrace& trace);

/// The clairvoyantly best warm start for a capacity: the trace's distinct
/// ids in first-use order, cut off at the capacity.
std::vector<PartitionId> ideal_initial_resident(const AccessTrace& trace);

/// Minimum miss count over all eviction decision trees, by exhaustive search
/// with memoization. Limits: capacity <= 4 pages, total accesses <= 12;
/// throws InstanceTooLargeError beyond them.
std::uint64_t exhaustive_min(const AccessTrace& trace);

}  // namespace kvtier::oracle
