// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/replacement.hpp"

#include <algorithm>
#include <unordered_set>

#include "kvtier/errors.hpp"

namespace kvtier {

ClassifyResult ReplacementEngine::classify(const HeadKey& key,
                                           std::span<const PartitionId> requested) const {
    ClassifyResult r;
    std::unordered_set<PartitionId> seen;
    seen.reserve(requested.size());
    for (PartitionId id : requested) {
        if (!seen.insert(id).second) continue;
        const MetaView m = store_.lookup_one(key, id);
        if (m.residency == Residency::DeviceResident) {
            r.hits.push_back(id);
        } else {
            r.misses.push_back(id);
            r.page_demand += m.page_count;
        }
    }
    return r;
}

ReplacementOutcome ReplacementEngine::replace(const HeadKey& key,
                                              std::span<const PartitionId> requested, StepIndex step) {
    const std::uint32_t n = params_.n_buckets;
    const std::uint32_t current_bucket =
        static_cast<std::uint32_t>(std::min<StepIndex>(step, n - 1));

    ClassifyResult cls = classify(key, requested);
    std::unordered_set<PartitionId> hit_set(cls.hits.begin(), cls.hits.end());

    // Timestamp update. Demotion fires once the step index leaves the bucket
    // range, at most once per decoding step per head regardless of how many
    // per-layer invocations share the step.
    const bool demote = step >= n && store_.last_demote_step(key) != step;
    if (demote) store_.set_last_demote_step(key, step);

    // One pass over the device page table: apply demotion, promote hits,
    // histogram everything else (the eviction candidates).
    const std::uint64_t scan_end = store_.device_scan_end(key);
    std::vector<std::uint64_t> histogram(n, 0);
    // Candidate (slot, partition) pairs per bucket, in ascending slot order.
    std::vector<std::vector<std::pair<PageId, PartitionId>>> bucket_members(n);
    std::vector<PageId> hit_pages;
    for (std::uint64_t slot = 0; slot < scan_end; ++slot) {
        auto* e = store_.device_entry_if(key, static_cast<PageId>(slot));
        if (e == nullptr || !e->valid) continue;
        const MetaView m = store_.lookup_one(key, e->partition_id);
        if (hit_set.count(e->partition_id)) {
            e->timestamp = current_bucket;
            hit_pages.push_back(static_cast<PageId>(slot));
            continue;
        }
        if (m.pinned) continue;  // never a victim; bucket value irrelevant
        if (demote && e->timestamp > 0) --e->timestamp;
        ++histogram[e->timestamp];
        bucket_members[e->timestamp].emplace_back(static_cast<PageId>(slot), e->partition_id);
    }

    ReplacementOutcome out;

    const std::uint64_t free_pages = store_.free_device_pages(key);
    const std::uint64_t demand_to_free = cls.page_demand > free_pages ? cls.page_demand - free_pages : 0;

    if (demand_to_free > 0) {
        std::uint64_t evictable = 0;
        for (std::uint32_t b = 0; b < n; ++b) evictable += histogram[b];
        if (evictable < demand_to_free)
            throw InsufficientBufferError("page demand " + std::to_string(cls.page_demand) +
                                          " exceeds free plus evictable pages for this head");

        // Smallest threshold bucket whose cumulative count meets the demand.
        std::uint32_t threshold = 0;
        std::uint64_t cum = 0;
        for (std::uint32_t b = 0; b < n; ++b) {
            cum += histogram[b];
            if (cum >= demand_to_free) {
                threshold = b;
                break;
            }
        }

        // Victim partitions, atomically. A partition's pages always share one
        // bucket (admission and promotion move them together), so whole-bucket
        // sweeps cannot split a partition.
        std::vector<PartitionId> victims;
        std::unordered_set<PartitionId> victim_set;
        auto take_partition = [&](PartitionId id) {
            if (victim_set.insert(id).second) victims.push_back(id);
        };
        for (std::uint32_t b = 0; b < threshold; ++b)
            for (const auto& [slot, pid] : bucket_members[b]) take_partition(pid);

        if (params_.mode == EvictionMode::BucketWhole) {
            for (const auto& [slot, pid] : bucket_members[threshold]) take_partition(pid);
        } else {
            std::uint64_t freed_below = 0;
            for (std::uint32_t b = 0; b < threshold; ++b) freed_below += histogram[b];
            std::uint64_t still_needed = demand_to_free - freed_below;
            // Ascending device page id within the threshold bucket; taking a
            // page takes its whole partition.
            for (const auto& [slot, pid] : bucket_members[threshold]) {
                if (still_needed == 0) break;
                if (victim_set.count(pid)) continue;
                take_partition(pid);
                const std::uint64_t pc = store_.lookup_one(key, pid).page_count;
                still_needed = pc >= still_needed ? 0 : still_needed - pc;
            }
        }

        // Clear victim pages and flip residency.
        for (std::uint32_t b = 0; b <= threshold; ++b) {
            for (const auto& [slot, pid] : bucket_members[b]) {
                if (!victim_set.count(pid)) continue;
                auto& e = store_.device_entry_mut(key, slot);
                e.valid = false;
                store_.free_device_slot(key, slot);
                out.evicted_pages.push_back(slot);
            }
        }
        for (PartitionId pid : victims) store_.set_residency(key, pid, Residency::HostOnly);
        out.evicted_partitions = std::move(victims);
    }

    // Admission, in request order: map freed/free slots to the misses and
    // stamp them with the current bucket.
    for (PartitionId pid : cls.misses) {
        const MetaView m = store_.lookup_one(key, pid);
        PartitionPages pp;
        pp.id = pid;
        pp.pages.reserve(m.page_count);
        for (std::uint64_t p = 0; p < m.page_count; ++p) {
            const PageId slot = store_.alloc_device_slot(key);
            auto& e = store_.device_entry_mut(key, slot);
            e.partition_id = pid;
            e.timestamp = current_bucket;
            e.valid = true;
            pp.pages.push_back(slot);
        }
        store_.set_residency(key, pid, Residency::DeviceResident);
        out.admissions.push_back(std::move(pp));
    }

    out.resident_pages = std::move(hit_pages);
    for (const auto& pp : out.admissions)
        out.resident_pages.insert(out.resident_pages.end(), pp.pages.begin(), pp.pages.end());
    return out;
}

}  // namespace kvtier
