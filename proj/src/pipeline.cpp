// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/pipeline.hpp"

#include <algorithm>
#include <cassert>

#include "kvtier/errors.hpp"

namespace kvtier::pipeline {

PartitionSpec prefill_index(std::uint64_t context_len, const SparseConfig& sparse,
                            const IndexParams& params) {
    if (sparse.variable_granularity())
        throw InvalidSpecParamsError(
            "prefill_index builds uniform specs; variable-granularity specs come from the algorithm");
    const std::uint64_t g = *sparse.partition_granularity;
    PartitionSpec spec = PartitionSpec::uniform(context_len, g);
    const std::uint64_t count = spec.partition_count();

    // Trailing window first, outliers from the front of what remains.
    const std::uint64_t window = std::min(params.pinned_window_partitions, count);
    const std::uint64_t outliers = std::min(params.pinned_outlier_partitions, count - window);
    for (std::uint64_t i = 0; i < outliers; ++i) spec.pinned_ids.push_back(static_cast<PartitionId>(i));
    for (std::uint64_t i = count - window; i < count; ++i)
        spec.pinned_ids.push_back(static_cast<PartitionId>(i));
    return spec;
}

// -- selectors ---------------------------------------------------------------

PlaybackSelector::PlaybackSelector(workload::Trace trace) {
    for (auto& r : trace.records)
        by_head_[{r.layer, r.head}][r.step] = std::move(r.selected);
}

std::vector<PartitionId> PlaybackSelector::select(const HeadKey& key, StepIndex step,
                                                  std::uint64_t selectable, std::uint64_t,
                                                  std::uint64_t,
                                                  const std::unordered_set<PartitionId>&) {
    auto hit = by_head_.find({key.layer, key.head});
    if (hit == by_head_.end())
        throw TraceExhaustedError("trace has no records for layer " + std::to_string(key.layer) +
                                  " head " + std::to_string(key.head));
    auto rec = hit->second.find(step);
    if (rec == hit->second.end())
        throw TraceExhaustedError("trace exhausted at step " + std::to_string(step));
    for (PartitionId id : rec->second)
        if (id >= selectable) throw TraceExhaustedError("trace selects unregistered partition");
    return rec->second;
}

SyntheticSelector::SyntheticSelector(LocalitySettings locality, std::uint64_t master_seed,
                                     std::function<std::uint64_t(const HeadKey&, PartitionId)> token_count)
    : locality_(locality), master_seed_(master_seed), token_count_(std::move(token_count)) {}

std::vector<PartitionId> SyntheticSelector::select(const HeadKey& key, StepIndex,
                                                   std::uint64_t selectable,
                                                   std::uint64_t count_budget,
                                                   std::uint64_t token_budget,
                                                   const std::unordered_set<PartitionId>& exclude) {
    if (selectable == 0) return {};
    auto& stream = streams_[{key.request_id, key.layer, key.head}];
    if (!stream.sampler) {
        stream.rng.seed(derive_seed(master_seed_, key.request_id, key.layer, key.head));
        stream.sampler = std::make_unique<workload::WorkingSetSampler>(
            selectable, locality_.reuse_fraction, locality_.zipf_s,
            count_budget > 0 ? count_budget : 1);
    }
    stream.sampler->grow_universe(selectable);

    std::function<std::uint64_t(PartitionId)> tokens;
    if (token_count_) tokens = [&](PartitionId id) { return token_count_(key, id); };
    return stream.sampler->next(stream.rng, count_budget, token_budget, &exclude, tokens);
}

// -- pipeline -----------------------------------------------------------------

Pipeline::Pipeline(const ModelShape& model, const SparseConfig& sparse, const TierParams& tiers,
                   MetadataStore& store, ReplacementEngine& engine, Selector& selector)
    : model_(model), sparse_(sparse), tiers_(tiers), store_(store), engine_(engine),
      selector_(selector) {}

const std::unordered_set<PartitionId>& Pipeline::pinned_set(const RequestState& req) {
    auto it = pinned_cache_.find(req.id);
    if (it == pinned_cache_.end())
        it = pinned_cache_
                 .emplace(req.id, std::unordered_set<PartitionId>(req.spec.pinned_ids.begin(),
                                                                  req.spec.pinned_ids.end()))
                 .first;
    return it->second;
}

OffloadSummary Pipeline::offload(RequestState& req) {
    OffloadSummary sum;
    sum.partitions_per_head = req.spec.partition_count();
    for (std::uint32_t l = 0; l < model_.num_layers; ++l) {
        for (std::uint32_t h = 0; h < model_.num_kv_heads; ++h) {
            const HeadKey key = key_of(req, l, h);
            store_.register_partitions(key, req.spec);
            ++sum.heads;
            sum.device_pages += store_.pinned_device_pages(key);
        }
    }
    // Per-request host pages: every head carries the same layout.
    const HeadKey first = key_of(req, 0, 0);
    std::uint64_t host_pages_per_head = 0;
    std::uint64_t pinned_tokens = 0;
    for (PartitionId id = 0; id < sum.partitions_per_head; ++id) {
        const MetaView m = store_.lookup_one(first, id);
        if (m.pinned)
            pinned_tokens += m.token_count;
        else
            host_pages_per_head += m.page_count;
    }
    sum.host_pages = host_pages_per_head * sum.heads;
    req.pinned_tokens_per_head = pinned_tokens;
    req.pinned_pages_per_head = store_.pinned_device_pages(first);
    pinned_cache_.erase(req.id);
    return sum;
}

std::vector<PartitionId> Pipeline::select(const HeadKey& key, StepIndex step,
                                          const RequestState& req) {
    const std::uint64_t selectable = store_.partition_count(key);
    const std::uint64_t ctx = req.context_len();
    std::uint64_t count_budget = sparse_.budget_partitions(ctx);
    std::uint64_t token_budget = 0;
    if (sparse_.variable_granularity()) {
        // Fractional budgets apply to tokens when partition sizes vary.
        token_budget = sparse_.retrieval_budget.budget_tokens(ctx);
        count_budget = 0;
    }
    return selector_.select(key, step, selectable, count_budget, token_budget, pinned_set(req));
}

RetrieveResult Pipeline::retrieve(const HeadKey& key, std::span<const PartitionId> ids,
                                  StepIndex step) {
    RetrieveResult r;
    r.classify = engine_.classify(key, ids);
    r.outcome = engine_.replace(key, ids, step);
    const std::uint64_t per_page = page_bytes(model_, sparse_);
    for (const auto& adm : r.outcome.admissions) {
        const auto host = store_.cpu_pages_of(key, adm.id);
        assert(host.size() == adm.pages.size());
        for (std::size_t i = 0; i < host.size(); ++i)
            r.plan.copies.push_back({host[i], adm.pages[i], adm.id});
    }
    r.plan.bytes = r.plan.copies.size() * per_page;
    if (evlog_ && (!r.outcome.evicted_partitions.empty() || !r.outcome.admissions.empty())) {
        std::vector<PartitionId> admitted;
        admitted.reserve(r.outcome.admissions.size());
        for (const auto& a : r.outcome.admissions) admitted.push_back(a.id);
        evlog_(step, key, r.outcome.evicted_partitions, admitted);
    }
    return r;
}

std::vector<std::vector<PartitionId>> Pipeline::select_request(const RequestState& req,
                                                               StepIndex step) {
    std::vector<std::vector<PartitionId>> selections;
    selections.reserve(model_.heads_per_request());
    for (std::uint32_t l = 0; l < model_.num_layers; ++l)
        for (std::uint32_t h = 0; h < model_.num_kv_heads; ++h)
            selections.push_back(select(key_of(req, l, h), step, req));
    return selections;
}

std::uint64_t Pipeline::mandatory_pages(const RequestState& req,
                                        const std::vector<std::vector<PartitionId>>& selections) const {
    std::uint64_t pages = 0;
    std::size_t idx = 0;
    for (std::uint32_t l = 0; l < model_.num_layers; ++l) {
        for (std::uint32_t h = 0; h < model_.num_kv_heads; ++h, ++idx) {
            const HeadKey key{req.id, l, h};
            for (PartitionId id : selections[idx]) {
                const MetaView m = store_.lookup_one(key, id);
                if (!m.pinned) pages += m.page_count;
            }
            pages += store_.pinned_device_pages(key);
        }
    }
    return pages;
}

std::uint64_t Pipeline::estimate_mandatory_pages(const RequestState& req) const {
    const std::uint64_t ctx = req.context_len();
    const std::uint64_t g = sparse_.partition_granularity.value_or(sparse_.page_size);
    const std::uint64_t pages_per_partition = ceil_div(g, sparse_.page_size);
    const std::uint64_t selected_pages = sparse_.budget_partitions(ctx) * pages_per_partition;
    return (selected_pages + req.pinned_pages_per_head) * model_.heads_per_request();
}

RequestStepMetrics Pipeline::retrieve_request(RequestState& req, StepIndex step,
                                              const std::vector<std::vector<PartitionId>>& selections) {
    RequestStepMetrics m;
    m.request = req.id;
    const std::uint64_t elem_bytes = model_.head_dim * model_.bytes_per_element;
    const auto& pinned = pinned_set(req);

    // Summary-scoring reads: one sketch pass over the whole context per head
    // per step, regardless of residency.
    const double qk_per_head =
        sparse_.summary_ratio * static_cast<double>(req.context_len()) * static_cast<double>(elem_bytes);

    std::size_t idx = 0;
    for (std::uint32_t l = 0; l < model_.num_layers; ++l) {
        for (std::uint32_t h = 0; h < model_.num_kv_heads; ++h, ++idx) {
            const HeadKey key = key_of(req, l, h);
            const auto& ids = selections[idx];
            RetrieveResult r = retrieve(key, ids, step);
            m.selected += ids.size();
            m.hits += r.classify.hits.size();
            m.misses += r.classify.misses.size();
            m.transferred_bytes += r.plan.bytes;
            if (!r.plan.copies.empty()) ++m.transfer_plans;

            // Attention reads the selected partitions, every pinned partition
            // and the not-yet-partitioned recent window.
            std::uint64_t attend_tokens = req.pinned_tokens_per_head + req.residual_tokens;
            for (PartitionId id : ids) {
                if (pinned.count(id)) continue;
                attend_tokens += store_.lookup_one(key, id).token_count;
            }
            m.attended_kv_bytes += 2 * attend_tokens * elem_bytes;
            m.hbm_bytes += static_cast<std::uint64_t>(qk_per_head) + 2 * attend_tokens * elem_bytes;
        }
    }
    return m;
}

StepMetrics Pipeline::finalize_step(StepIndex step, std::vector<RequestStepMetrics> rows) const {
    StepMetrics sm;
    sm.step = step;
    std::uint64_t attended = 0;
    for (const auto& r : rows) {
        sm.transferred_bytes += r.transferred_bytes;
        sm.hbm_bytes += r.hbm_bytes;
        sm.transfer_plans += r.transfer_plans;
        attended += r.attended_kv_bytes;
    }
    sm.per_request = std::move(rows);
    sm.step_time_s = static_cast<double>(sm.hbm_bytes) / tiers_.bw_hbm +
                     static_cast<double>(sm.transferred_bytes) / tiers_.bw_pcie +
                     tiers_.per_transfer_latency * static_cast<double>(sm.transfer_plans) +
                     tiers_.t_mlp;
    sm.realized_miss_ratio =
        attended == 0 ? 0.0
                      : static_cast<double>(sm.transferred_bytes) / static_cast<double>(attended);
    return sm;
}

StepMetrics Pipeline::decode_step(std::span<RequestState*> batch, StepIndex step) {
    std::vector<RequestStepMetrics> rows;
    rows.reserve(batch.size());
    for (RequestState* req : batch) {
        auto selections = select_request(*req, step);
        rows.push_back(retrieve_request(*req, step, selections));
    }
    return finalize_step(step, std::move(rows));
}

void Pipeline::append_tokens(RequestState& req, std::uint64_t new_tokens, StepIndex) {
    req.generated += new_tokens;
    req.residual_tokens += new_tokens;
    const bool finishing = req.finished();
    // Re-indexing cadence follows the request's own decoded-token count, so a
    // late-admitted request still updates every update_interval tokens.
    const bool boundary = (req.generated % sparse_.update_interval) == 0;
    if (!boundary && !finishing) return;

    const std::uint64_t g = sparse_.partition_granularity.value_or(sparse_.page_size);
    const std::uint64_t full = req.residual_tokens / g;
    if (full == 0) return;

    for (std::uint32_t l = 0; l < model_.num_layers; ++l) {
        for (std::uint32_t h = 0; h < model_.num_kv_heads; ++h) {
            const HeadKey key = key_of(req, l, h);
            const std::uint64_t start = store_.partitioned_tokens(key);
            std::vector<TokenRange> ranges;
            ranges.reserve(full);
            for (std::uint64_t i = 0; i < full; ++i)
                ranges.push_back({start + i * g, start + (i + 1) * g});
            store_.append_partitions(key, ranges);
        }
    }
    req.residual_tokens -= full * g;
}

}  // namespace kvtier::pipeline
