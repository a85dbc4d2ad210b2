// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kvtier/types.hpp"

namespace kvtier {

/// KV-cache geometry of the served model. Immutable after construction.
struct ModelShape {
    std::uint64_t num_layers = 1;
    std::uint64_t num_kv_heads = 1;
    std::uint64_t head_dim = 1;
    std::uint64_t bytes_per_element = 2;
    std::uint64_t max_context = 1;

    std::uint64_t heads_per_request() const { return num_layers * num_kv_heads; }
};

/// Per-step retrieval budget: either a fraction of the context or a fixed
/// token count.
struct RetrievalBudget {
    enum class Kind { Fraction, Tokens };
    Kind kind = Kind::Fraction;
    double fraction = 0.0;
    std::uint64_t tokens = 0;

    static RetrievalBudget from_fraction(double f) { return {Kind::Fraction, f, 0}; }
    static RetrievalBudget from_tokens(std::uint64_t t) { return {Kind::Tokens, 0.0, t}; }

    std::uint64_t budget_tokens(std::uint64_t context_len) const {
        if (kind == Kind::Tokens) return tokens;
        return static_cast<std::uint64_t>(fraction * static_cast<double>(context_len));
    }
};

struct SparseConfig {
    RetrievalBudget retrieval_budget;
    /// Tokens per partition; nullopt means algorithm-defined variable ranges.
    std::optional<std::uint64_t> partition_granularity = 8;
    std::uint64_t page_size = 8;  // tokens per physical page
    double summary_ratio = 0.0;   // scoring sketch bytes relative to full KV
    std::uint64_t update_interval = 256;

    bool variable_granularity() const { return !partition_granularity.has_value(); }

    /// Budget expressed in whole partitions; fractional budgets round up so a
    /// nonzero budget always selects at least one partition.
    std::uint64_t budget_partitions(std::uint64_t context_len) const {
        const std::uint64_t g = partition_granularity.value_or(page_size);
        const std::uint64_t toks = retrieval_budget.budget_tokens(context_len);
        return ceil_div(toks, g) > 0 ? ceil_div(toks, g) : (toks > 0 ? 1 : 0);
    }
};

/// Memory tiers and the cost model used to turn transfer plans into time.
struct TierParams {
    std::uint64_t device_capacity = 0;  // bytes
    std::uint64_t host_capacity = 0;    // bytes
    double bw_hbm = 0.0;                // bytes/s
    double bw_pcie = 0.0;               // bytes/s
    double t_mlp = 0.0;                 // seconds per decode step
    double per_transfer_latency = 0.0;  // seconds per nonempty transfer plan
};

/// Bytes of one physical page: page_size tokens of K and V for one head.
inline std::uint64_t page_bytes(const ModelShape& m, const SparseConfig& s) {
    return 2 * s.page_size * m.head_dim * m.bytes_per_element;
}

/// Checks every type invariant plus the cross-field budget bound. Returns an
/// empty list when the configuration is valid; each entry is prefixed by the
/// violated field's name. Pure and idempotent.
std::vector<std::string> validate_config(const ModelShape& model, const SparseConfig& sparse,
                                         const TierParams& tiers);

/// validate_config that throws InvalidConfigError on any violation.
void validate_config_or_throw(const ModelShape& model, const SparseConfig& sparse,
                              const TierParams& tiers);

struct ReplacementSettings {
    std::uint32_t n_buckets = 64;
    bool bucket_whole = false;  // evict whole threshold buckets
};

struct SchedulerSettings {
    double min_buffer_ratio = 5.0;
    std::uint64_t device_page_budget = 0;  // 0: derived from device_capacity
};

struct MetadataSettings {
    std::uint64_t max_batch_slots = 32;
    std::uint32_t entries_per_segment = 256;
    // Pool sizes in segments; 0 derives them from the tier capacities.
    std::uint32_t device_page_pool_segments = 0;
    std::uint32_t meta_pool_segments = 0;
    std::uint32_t offset_pool_segments = 0;
    std::uint32_t host_page_pool_segments = 0;
};

struct PipelineSettings {
    std::uint64_t pinned_outlier_partitions = 0;
    std::uint64_t pinned_window_partitions = 0;
};

struct LocalitySettings {
    double reuse_fraction = 0.7;
    double zipf_s = 0.8;
};

struct ArrivalSettings {
    double rate = 1.0;  // requests per second
    std::uint64_t count = 0;
    std::uint64_t input_len_min = 32768;
    std::uint64_t input_len_max = 120000;
    std::uint64_t output_len_min = 500;
    std::uint64_t output_len_max = 15000;
};

/// Full simulation configuration as read from the JSON document. `model`,
/// `sparse` and `tiers` are required; the remaining sections default.
struct SimConfig {
    ModelShape model;
    SparseConfig sparse;
    TierParams tiers;
    ReplacementSettings replacement;
    SchedulerSettings scheduler;
    MetadataSettings metadata;
    PipelineSettings pipeline;
    LocalitySettings locality;
    ArrivalSettings arrivals;

    std::uint64_t device_page_budget() const;
    std::uint64_t host_page_capacity() const;
};

SimConfig load_config(const std::string& path);
SimConfig parse_config(const std::string& json_text);
std::string dump_config(const SimConfig& cfg);

}  // namespace kvtier
