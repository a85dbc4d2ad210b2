// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <unordered_set>
#include <vector>

#include "kvtier/config.hpp"
#include "kvtier/metadata.hpp"
#include "kvtier/replacement.hpp"
#include "kvtier/rng.hpp"
#include "kvtier/types.hpp"
#include "kvtier/workload.hpp"

namespace kvtier::pipeline {

/// Prefill-time indexing parameters: how many leading partitions to pin as
/// outliers and how many trailing ones as the recent window.
struct IndexParams {
    std::uint64_t pinned_outlier_partitions = 0;
    std::uint64_t pinned_window_partitions = 0;
};

/// Builds the per-head partition specification for a prompt. Uniform mode
/// tiles the context at the configured granularity; the pinned set is the
/// outlier prefix plus the trailing window.
PartitionSpec prefill_index(std::uint64_t context_len, const SparseConfig& sparse,
                            const IndexParams& params);

/// Host-to-device page copies realizing one head's admitted misses.
struct TransferPlan {
    struct Copy {
        PageId src_host = 0;
        PageId dst_device = 0;
        PartitionId partition = 0;
    };
    std::vector<Copy> copies;
    std::uint64_t bytes = 0;  // |copies| * page bytes (K and V)
};

struct RetrieveResult {
    ClassifyResult classify;
    ReplacementOutcome outcome;
    TransferPlan plan;
};

/// Selection source for decode steps.
class Selector {
  public:
    virtual ~Selector() = default;

    /// Returns the ids selected for (key, step). `selectable` is the number
    /// of registered partitions; ids in `exclude` (the pinned set) must not
    /// be returned. `token_budget`, when nonzero, overrides the count budget:
    /// ids are accumulated until their token counts reach it.
    virtual std::vector<PartitionId> select(const HeadKey& key, StepIndex step,
                                            std::uint64_t selectable, std::uint64_t count_budget,
                                            std::uint64_t token_budget,
                                            const std::unordered_set<PartitionId>& exclude) = 0;
};

/// Replays selections from a trace file; records are keyed by (layer, head)
/// so identical requests share one stream.
class PlaybackSelector : public Selector {
  public:
    explicit PlaybackSelector(workload::Trace trace);
    std::vector<PartitionId> select(const HeadKey& key, StepIndex step, std::uint64_t selectable,
                                    std::uint64_t count_budget, std::uint64_t token_budget,
                                    const std::unordered_set<PartitionId>& exclude) override;

  private:
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::map<StepIndex, std::vector<PartitionId>>>
        by_head_;
};

/// Sliding-working-set synthetic selection (keep with probability p, refill
/// by Zipf rank), deterministic per (seed, request, layer, head).
class SyntheticSelector : public Selector {
  public:
    SyntheticSelector(LocalitySettings locality, std::uint64_t master_seed,
                      std::function<std::uint64_t(const HeadKey&, PartitionId)> token_count = {});
    std::vector<PartitionId> select(const HeadKey& key, StepIndex step, std::uint64_t selectable,
                                    std::uint64_t count_budget, std::uint64_t token_budget,
                                    const std::unordered_set<PartitionId>& exclude) override;

  private:
    struct HeadStream {
        std::mt19937_64 rng;
        std::unique_ptr<workload::WorkingSetSampler> sampler;
    };

    LocalitySettings locality_;
    std::uint64_t master_seed_;
    std::function<std::uint64_t(const HeadKey&, PartitionId)> token_count_;
    std::map<std::tuple<RequestId, std::uint32_t, std::uint32_t>, HeadStream> streams_;
};

struct OffloadSummary {
    std::uint64_t heads = 0;
    std::uint64_t partitions_per_head = 0;
    std::uint64_t device_pages = 0;  // pinned
    std::uint64_t host_pages = 0;
};

struct RequestState {
    RequestId id = 0;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t output_target = 0;
    std::uint64_t generated = 0;
    std::uint64_t residual_tokens = 0;  // decoded, not yet partitioned (recent window)
    IndexParams index_params;
    PartitionSpec spec;
    std::uint64_t pinned_tokens_per_head = 0;
    std::uint64_t pinned_pages_per_head = 0;
    double arrival_s = 0.0;

    std::uint64_t context_len() const { return prompt_tokens + generated; }
    bool finished() const { return generated >= output_target; }
};

struct RequestStepMetrics {
    RequestId request = 0;
    std::uint64_t selected = 0;  // partition selections across heads
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t transferred_bytes = 0;
    std::uint64_t hbm_bytes = 0;
    std::uint64_t attended_kv_bytes = 0;  // K+V bytes attention reads (incl. pinned, window)
    std::uint32_t transfer_plans = 0;     // plans with at least one copy
};

struct StepMetrics {
    StepIndex step = 0;
    std::vector<RequestStepMetrics> per_request;
    std::uint64_t transferred_bytes = 0;
    std::uint64_t hbm_bytes = 0;
    std::uint32_t transfer_plans = 0;
    double step_time_s = 0.0;
    double realized_miss_ratio = 0.0;  // transferred / selected KV bytes
};

/// Eviction log sink; one record per head-step with evictions or admissions.
using EvictionLogFn =
    std::function<void(StepIndex, const HeadKey&, const std::vector<PartitionId>& evicted,
                       const std::vector<PartitionId>& admitted)>;

/// Orchestrates indexing, placement, selection, retrieval and the per-step
/// cost accounting over the tier hierarchy.
class Pipeline {
  public:
    Pipeline(const ModelShape& model, const SparseConfig& sparse, const TierParams& tiers,
             MetadataStore& store, ReplacementEngine& engine, Selector& selector);

    /// Registers the request's partitions across all heads; the request must
    /// already be attached to the store.
    OffloadSummary offload(RequestState& req);

    std::vector<PartitionId> select(const HeadKey& key, StepIndex step, const RequestState& req);

    RetrieveResult retrieve(const HeadKey& key, std::span<const PartitionId> ids, StepIndex step);

    /// Selections for every head of the request, in (layer, head) order.
    std::vector<std::vector<PartitionId>> select_request(const RequestState& req, StepIndex step);

    /// Pages the current selections require on device: selected non-pinned
    /// pages plus the pinned footprint.
    std::uint64_t mandatory_pages(const RequestState& req,
                                  const std::vector<std::vector<PartitionId>>& selections) const;

    /// Admission-time estimate before any selection exists.
    std::uint64_t estimate_mandatory_pages(const RequestState& req) const;

    /// Retrieval plus cost accounting for one request at one step, using the
    /// given selections.
    RequestStepMetrics retrieve_request(RequestState& req, StepIndex step,
                                        const std::vector<std::vector<PartitionId>>& selections);

    /// select + retrieve for a whole batch with fixed per-head capacities;
    /// aggregation is a deterministic reduction in batch order.
    StepMetrics decode_step(std::span<RequestState*> batch, StepIndex step);

    /// Accounts one decoded token; at update boundaries, forms new full
    /// partitions from the residual and offloads them.
    void append_tokens(RequestState& req, std::uint64_t new_tokens, StepIndex step);

    /// Assembles batch-level metrics (step time, realized miss ratio) from
    /// per-request rows.
    StepMetrics finalize_step(StepIndex step, std::vector<RequestStepMetrics> rows) const;

    void set_eviction_log(EvictionLogFn fn) { evlog_ = std::move(fn); }

    /// Drops per-request caches once the request leaves the system.
    void forget_request(RequestId id) { pinned_cache_.erase(id); }

    const ModelShape& model() const { return model_; }
    const SparseConfig& sparse() const { return sparse_; }
    const TierParams& tiers() const { return tiers_; }

  private:
    HeadKey key_of(const RequestState& req, std::uint32_t layer, std::uint32_t head) const {
        return HeadKey{req.id, layer, head};
    }
    const std::unordered_set<PartitionId>& pinned_set(const RequestState& req);

    ModelShape model_;
    SparseConfig sparse_;
    TierParams tiers_;
    MetadataStore& store_;
    ReplacementEngine& engine_;
    Selector& selector_;
    EvictionLogFn evlog_;
    std::map<RequestId, std::unordered_set<PartitionId>> pinned_cache_;
};

}  // namespace kvtier::pipeline
