// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/oracle.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <unordered_set>

#include "kvtier/errors.hpp"

namespace kvtier::oracle {

namespace {

/// Shared page-id bookkeeping: lowest-free-first assignment per admission,
/// matching the engine's per-head arena so tie-breaks agree across policies.
struct PageAllocator {
    std::priority_queue<PageId, std::vector<PageId>, std::greater<PageId>> free;
    PageId high_watermark = 0;

    PageId alloc() {
        if (!free.empty()) {
            PageId p = free.top();
            free.pop();
            return p;
        }
        return high_watermark++;
    }
    void release(PageId p) { free.push(p); }
};

struct ResidentInfo {
    std::int64_t last_access = -1;  // -1: resident since before step 0
    std::vector<PageId> pages;
    PageId min_page() const { return *std::min_element(pages.begin(), pages.end()); }
};

}  // namespace

PolicyResult lru_reference(const AccessTrace& trace) {
    PolicyResult result;
    PageAllocator alloc;
    std::map<PartitionId, ResidentInfo> resident;
    std::uint64_t used = 0;

    for (PartitionId id : trace.initial_resident) {
        if (resident.count(id)) continue;
        ResidentInfo info;
        const std::uint32_t pc = trace.pages_of(id);
        for (std::uint32_t p = 0; p < pc; ++p) info.pages.push_back(alloc.alloc());
        used += pc;
        resident.emplace(id, std::move(info));
    }
    if (used > trace.capacity_pages) throw Error("lru_reference: initial residents exceed capacity");

    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        EvictionEvent ev;
        ev.step = s;

        std::vector<PartitionId> misses;
        std::unordered_set<PartitionId> requested;
        std::uint64_t demand = 0;
        for (PartitionId id : trace.steps[s]) {
            if (!requested.insert(id).second) continue;
            auto it = resident.find(id);
            if (it != resident.end()) {
                it->second.last_access = static_cast<std::int64_t>(s);
            } else {
                misses.push_back(id);
                demand += trace.pages_of(id);
            }
        }
        result.miss_count += misses.size();

        // Free enough pages before admitting, least-recent victims first,
        // ties by the victim's lowest page id.
        while (used + demand > trace.capacity_pages) {
            PartitionId victim = 0;
            std::int64_t best_step = std::numeric_limits<std::int64_t>::max();
            PageId best_page = std::numeric_limits<PageId>::max();
            bool found = false;
            for (const auto& [id, info] : resident) {
                if (requested.count(id)) continue;
                const PageId mp = info.min_page();
                if (!found || info.last_access < best_step ||
                    (info.last_access == best_step && mp < best_page)) {
                    victim = id;
                    best_step = info.last_access;
                    best_page = mp;
                    found = true;
                }
            }
            if (!found) throw Error("lru_reference: step demand exceeds capacity");
            auto& info = resident[victim];
            for (PageId p : info.pages) alloc.release(p);
            used -= info.pages.size();
            resident.erase(victim);
            ev.evicted.push_back(victim);
        }

        for (PartitionId id : misses) {
            ResidentInfo info;
            info.last_access = static_cast<std::int64_t>(s);
            const std::uint32_t pc = trace.pages_of(id);
            for (std::uint32_t p = 0; p < pc; ++p) info.pages.push_back(alloc.alloc());
            used += pc;
            resident.emplace(id, std::move(info));
            ev.admitted.push_back(id);
        }

        if (!ev.evicted.empty() || !ev.admitted.empty()) result.log.push_back(std::move(ev));
    }
    return result;
}

std::uint64_t belady(const AccessTrace& trace) {
    // Next-use positions per partition, consumed front to back.
    std::unordered_map<PartitionId, std::vector<std::size_t>> uses;
    for (std::size_t s = 0; s < trace.steps.size(); ++s)
        for (PartitionId id : trace.steps[s]) uses[id].push_back(s);
    std::unordered_map<PartitionId, std::size_t> cursor;

    constexpr std::size_t kNever = std::numeric_limits<std::size_t>::max();
    auto next_use_after = [&](PartitionId id, std::size_t step) {
        auto& list = uses[id];
        std::size_t& c = cursor[id];
        while (c < list.size() && list[c] <= step) ++c;
        return c < list.size() ? list[c] : kNever;
    };

    PageAllocator alloc;
    std::map<PartitionId, std::vector<PageId>> resident;
    std::uint64_t used = 0;
    std::uint64_t misses = 0;

    for (PartitionId id : trace.initial_resident) {
        if (resident.count(id)) continue;
        std::vector<PageId> pages;
        const std::uint32_t pc = trace.pages_of(id);
        for (std::uint32_t p = 0; p < pc; ++p) pages.push_back(alloc.alloc());
        used += pc;
        resident.emplace(id, std::move(pages));
    }
    if (used > trace.capacity_pages) throw Error("belady: initial residents exceed capacity");

    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        std::unordered_set<PartitionId> requested(trace.steps[s].begin(), trace.steps[s].end());
        std::vector<PartitionId> step_misses;
        std::uint64_t demand = 0;
        for (PartitionId id : trace.steps[s]) {
            if (resident.count(id)) continue;
            if (std::find(step_misses.begin(), step_misses.end(), id) != step_misses.end()) continue;
            step_misses.push_back(id);
            demand += trace.pages_of(id);
        }
        misses += step_misses.size();

        while (used + demand > trace.capacity_pages) {
            PartitionId victim = 0;
            std::size_t far = 0;
            PageId best_page = std::numeric_limits<PageId>::max();
            bool found = false;
            for (const auto& [id, pages] : resident) {
                if (requested.count(id)) continue;
                const std::size_t nu = next_use_after(id, s);
                const PageId mp = *std::min_element(pages.begin(), pages.end());
                // Farthest next use wins; never-used-again (kNever) first.
                if (!found || nu > far || (nu == far && mp < best_page)) {
                    victim = id;
                    far = nu;
                    best_page = mp;
                    found = true;
                }
            }
            if (!found) throw Error("belady: step demand exceeds capacity");
            for (PageId p : resident[victim]) alloc.release(p);
            used -= resident[victim].size();
            resident.erase(victim);
        }

        for (PartitionId id : step_misses) {
            std::vector<PageId> pages;
            const std::uint32_t pc = trace.pages_of(id);
            for (std::uint32_t p = 0; p < pc; ++p) pages.push_back(alloc.alloc());
            used += pc;
            resident.emplace(id, std::move(pages));
        }
    }
    return misses;
}

std::vector<PartitionId> ideal_initial_resident(const AccessTrace& trace) {
    std::vector<PartitionId> out;
    std::unordered_set<PartitionId> seen;
    std::uint64_t pages = 0;
    for (const auto& step : trace.steps) {
        for (PartitionId id : step) {
            if (!seen.insert(id).second) continue;
            if (pages + trace.pages_of(id) > trace.capacity_pages) return out;
            pages += trace.pages_of(id);
            out.push_back(id);
        }
    }
    return out;
}

namespace {

struct ExhaustiveSolver {
    const AccessTrace& trace;
    std::map<std::pair<std::size_t, std::vector<PartitionId>>, std::uint64_t> memo;

    std::uint64_t solve(std::size_t step, std::vector<PartitionId> resident) {
        if (step == trace.steps.size()) return 0;
        std::sort(resident.begin(), resident.end());
        auto memo_key = std::make_pair(step, resident);
        auto it = memo.find(memo_key);
        if (it != memo.end()) return it->second;

        std::unordered_set<PartitionId> res_set(resident.begin(), resident.end());
        std::vector<PartitionId> requested;
        std::uint64_t misses_now = 0;
        std::uint64_t demand = 0;
        std::unordered_set<PartitionId> seen;
        for (PartitionId id : trace.steps[step]) {
            if (!seen.insert(id).second) continue;
            requested.push_back(id);
            if (!res_set.count(id)) {
                ++misses_now;
                demand += trace.pages_of(id);
            }
        }

        std::uint64_t used = 0;
        for (PartitionId id : resident) used += trace.pages_of(id);

        std::vector<PartitionId> evictable;
        for (PartitionId id : resident)
            if (!seen.count(id)) evictable.push_back(id);

        const std::uint64_t over = used + demand > trace.capacity_pages
                                       ? used + demand - trace.capacity_pages
                                       : 0;

        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        // Branch over every eviction subset that frees at least the overflow;
        // freeing extra pages can only hurt, but exploring those branches too
        // keeps the search an exhaustive minimum rather than a heuristic.
        const std::size_t m = evictable.size();
        for (std::uint64_t mask = 0; mask < (std::uint64_t(1) << m); ++mask) {
            std::uint64_t freed = 0;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (std::uint64_t(1) << i)) freed += trace.pages_of(evictable[i]);
            if (freed < over) continue;
            std::vector<PartitionId> next;
            for (std::size_t i = 0; i < m; ++i)
                if (!(mask & (std::uint64_t(1) << i))) next.push_back(evictable[i]);
            for (PartitionId id : requested) next.push_back(id);
            best = std::min(best, solve(step + 1, std::move(next)));
        }
        if (best == std::numeric_limits<std::uint64_t>::max())
            throw Error("exhaustive_min: step demand exceeds capacity");
        best += misses_now;
        memo.emplace(std::move(memo_key), best);
        return best;
    }
};

}  // namespace

std::uint64_t exhaustive_min(const AccessTrace& trace) {
    if (trace.capacity_pages > 4)
        throw InstanceTooLargeError("exhaustive_min: capacity limited to 4 pages");
    if (trace.total_accesses() > 12)
        throw InstanceTooLargeError("exhaustive_min: limited to 12 total accesses");
    ExhaustiveSolver solver{trace, {}};
    return solver.solve(0, {});
}

}  // namespace kvtier::oracle
