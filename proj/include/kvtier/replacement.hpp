// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "kvtier/metadata.hpp"
#include "kvtier/types.hpp"

namespace kvtier {

enum class EvictionMode {
    /// Buckets below the threshold are evicted fully; the threshold bucket
    /// contributes only the needed remainder, lowest device page id first.
    BucketExact,
    /// Whole-bucket variant: every page with timestamp at or below the
    /// threshold is evicted, possibly freeing more than the page demand.
    BucketWhole,
};

struct ReplacementParams {
    std::uint32_t n_buckets = 64;
    EvictionMode mode = EvictionMode::BucketExact;
};

struct ClassifyResult {
    std::vector<PartitionId> hits;
    std::vector<PartitionId> misses;
    std::uint64_t page_demand = 0;  // pages needed by the misses
};

struct ReplacementOutcome {
    std::vector<PageId> evicted_pages;
    std::vector<PartitionId> evicted_partitions;
    std::vector<PartitionPages> admissions;  // per missed partition, in request order
    std::vector<PageId> resident_pages;      // pages of hits plus admissions
};

/// Bucketed-LRU replacement over one head's device page table.
///
/// Timestamps are recency buckets in [0, n_buckets). Within a decoding step,
/// pages of hit partitions are promoted to min(step, n_buckets-1); once steps
/// exceed the bucket range, every other valid page is demoted by one per
/// step, saturating at zero. Eviction scans the page table once, builds a
/// bucket histogram, and frees pages from the oldest buckets upward until the
/// page demand is met. Partitions evict atomically: residency is a
/// partition-level bit, so all pages of a victim leave together.
class ReplacementEngine {
  public:
    ReplacementEngine(MetadataStore& store, ReplacementParams params)
        : store_(store), params_(params) {}

    /// Hit/miss classification; pure with respect to residency state.
    ClassifyResult classify(const HeadKey& key, std::span<const PartitionId> requested) const;

    /// Runs the full classify/update/evict/admit procedure for one step.
    /// Requires the scheduler to have granted capacity for pinned plus
    /// requested pages; throws InsufficientBufferError otherwise.
    ReplacementOutcome replace(const HeadKey& key, std::span<const PartitionId> requested,
                               StepIndex step);

    const ReplacementParams& params() const { return params_; }

  private:
    MetadataStore& store_;
    ReplacementParams params_;
};

}  // namespace kvtier
