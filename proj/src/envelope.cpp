// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/envelope.hpp"

#include "kvtier/errors.hpp"

namespace kvtier::envelope {

std::uint64_t kv_bytes(const ModelShape& shape, std::uint64_t context_tokens, std::uint64_t batch) {
    return 2 * batch * shape.num_layers * shape.num_kv_heads * shape.head_dim *
           shape.bytes_per_element * context_tokens;
}

std::uint64_t kv_selected_bytes(const ModelShape& shape, std::uint64_t context_tokens,
                                std::uint64_t batch, double budget_fraction) {
    return static_cast<std::uint64_t>(
        static_cast<double>(kv_bytes(shape, context_tokens, batch)) * budget_fraction);
}

TpotBreakdown tpot(const EnvelopeParams& p) {
    // Exact integer base (B*L*H*d*e), then one scale by the fractional terms.
    const std::uint64_t base =
        p.batch * p.num_layers * p.num_kv_heads * p.head_dim * p.bytes_per_element;
    const double base_tokens = static_cast<double>(base) * static_cast<double>(p.context_tokens);

    TpotBreakdown out;
    out.qk_score_bytes = base_tokens * p.summary_ratio;
    out.kv_selected_bytes = 2.0 * base_tokens * p.budget_fraction;
    out.hbm_s = (out.qk_score_bytes + out.kv_selected_bytes) / p.bw_hbm;
    out.pcie_s = p.miss_ratio * out.kv_selected_bytes / p.bw_pcie;
    out.mlp_s = p.t_mlp;
    out.total_s = out.hbm_s + out.pcie_s + out.mlp_s;
    return out;
}

std::vector<EnvelopePoint> envelope_curve(
    const EnvelopeParams& base, const std::vector<std::uint64_t>& batches,
    std::uint64_t capacity_bytes, std::uint64_t page_size_tokens,
    const std::function<oracle::AccessTrace(std::uint64_t batch)>& trace_for_batch) {
    const std::uint64_t head_page_bytes =
        2 * page_size_tokens * base.head_dim * base.bytes_per_element;
    std::vector<EnvelopePoint> points;
    points.reserve(batches.size());
    for (std::uint64_t b : batches) {
        EnvelopePoint pt;
        pt.batch = b;
        const std::uint64_t denom = b * base.num_layers * base.num_kv_heads * head_page_bytes;
        pt.capacity_pages_per_head = denom == 0 ? 0 : capacity_bytes / denom;

        oracle::AccessTrace trace = trace_for_batch(b);
        trace.capacity_pages = pt.capacity_pages_per_head;
        // The ideal system leaves the best-possible working set on the device
        // after prefill, so first touches of preloaded partitions are free.
        trace.initial_resident = oracle::ideal_initial_resident(trace);
        const std::uint64_t accesses = trace.total_accesses();
        const std::uint64_t misses = oracle::belady(trace);
        pt.belady_miss_ratio = accesses == 0 ? 0.0
                                             : static_cast<double>(misses) / static_cast<double>(accesses);

        EnvelopeParams p = base;
        p.batch = b;
        p.miss_ratio = pt.belady_miss_ratio;
        pt.cost = tpot(p);
        points.push_back(pt);
    }
    return points;
}

}  // namespace kvtier::envelope
