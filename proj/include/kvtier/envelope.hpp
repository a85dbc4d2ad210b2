// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "kvtier/config.hpp"
#include "kvtier/oracle.hpp"
#include "kvtier/types.hpp"

namespace kvtier::envelope {

/// Inputs of the ideal sparse-serving cost model.
struct EnvelopeParams {
    std::uint64_t batch = 1;
    std::uint64_t num_layers = 1;
    std::uint64_t num_kv_heads = 1;
    std::uint64_t head_dim = 1;
    std::uint64_t bytes_per_element = 2;
    std::uint64_t context_tokens = 1;
    double summary_ratio = 0.0;   // scoring sketch size relative to full KV
    double budget_fraction = 0.0; // fraction of KV selected per step
    double miss_ratio = 0.0;      // fraction of selected KV fetched over PCIe
    double bw_hbm = 1.0;          // bytes/s
    double bw_pcie = 1.0;         // bytes/s
    double t_mlp = 0.0;           // seconds
};

struct TpotBreakdown {
    double qk_score_bytes = 0.0;   // summary bytes read for scoring
    double kv_selected_bytes = 0.0;  // K and V bytes of the selected fraction
    double hbm_s = 0.0;
    double pcie_s = 0.0;
    double mlp_s = 0.0;
    double total_s = 0.0;  // always the exact sum hbm_s + pcie_s + mlp_s
};

/// Full KV bytes of a request: 2 * B * L * H * d * e * N, exact integers.
std::uint64_t kv_bytes(const ModelShape& shape, std::uint64_t context_tokens, std::uint64_t batch);

/// Selected-fraction KV bytes, floored to whole bytes.
std::uint64_t kv_selected_bytes(const ModelShape& shape, std::uint64_t context_tokens,
                                std::uint64_t batch, double budget_fraction);

/// Per-output-token time with its three addends. Byte terms come from exact
/// integer products scaled once by the fractional ratios.
TpotBreakdown tpot(const EnvelopeParams& p);

struct EnvelopePoint {
    std::uint64_t batch = 0;
    std::uint64_t capacity_pages_per_head = 0;
    double belady_miss_ratio = 0.0;
    TpotBreakdown cost;
};

/// Ideal envelope across batch sizes: per batch, the miss ratio is measured
/// by running the clairvoyant-optimal policy on that batch's trace under the
/// per-head capacity implied by the device budget, then fed into tpot().
///
/// `trace_for_batch` supplies one representative per-head access trace per
/// batch size; `capacity_bytes` is split evenly across batch, layers and
/// heads and floored to whole pages.
std::vector<EnvelopePoint> envelope_curve(
    const EnvelopeParams& base, const std::vector<std::uint64_t>& batches,
    std::uint64_t capacity_bytes, std::uint64_t page_size_tokens,
    const std::function<oracle::AccessTrace(std::uint64_t batch)>& trace_for_batch);

}  // namespace kvtier::envelope
