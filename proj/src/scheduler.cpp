// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "kvtier/errors.hpp"

namespace kvtier::sched {

std::vector<std::uint64_t> proportional_shares(const std::vector<std::uint64_t>& lengths,
                                               std::uint64_t need) {
    std::vector<std::uint64_t> shares(lengths.size(), 0);
    long double total = 0;
    for (auto l : lengths) total += static_cast<long double>(l);
    if (total <= 0 || need == 0) return shares;

    std::uint64_t assigned = 0;
    std::vector<std::pair<long double, std::size_t>> remainders;
    remainders.reserve(lengths.size());
    for (std::size_t i = 0; i < lengths.size(); ++i) {
        const long double quota =
            static_cast<long double>(need) * static_cast<long double>(lengths[i]) / total;
        shares[i] = static_cast<std::uint64_t>(quota);
        assigned += shares[i];
        remainders.emplace_back(quota - static_cast<long double>(shares[i]), i);
    }
    // Largest remainder first; equal remainders resolve toward lower indices.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < need && k < remainders.size(); ++k) {
        ++shares[remainders[k].second];
        ++assigned;
    }
    return shares;
}

std::uint64_t Scheduler::admission_threshold(std::uint64_t mandatory_pages) const {
    return static_cast<std::uint64_t>(
        std::ceil(static_cast<double>(mandatory_pages) * (1.0 + cfg_.min_buffer_ratio)));
}

std::uint64_t Scheduler::surplus_of(const BufferGrant& g) const {
    const std::uint64_t floor = admission_threshold(g.mandatory_pages);
    return g.total() > floor ? g.total() - floor : 0;
}

AdmitOutcome Scheduler::try_admit(RequestId id, std::uint64_t mandatory_pages,
                                  std::uint64_t seq_len_tokens) {
    const std::uint64_t requirement = admission_threshold(mandatory_pages);
    if (free_pages() < requirement) {
        // Reclaimable surplus counts toward admission, but pages only move if
        // the request actually fits afterwards.
        const std::uint64_t shortfall = requirement - free_pages();
        std::uint64_t reclaimable = 0;
        for (const auto& [rid, g] : grants_) reclaimable += surplus_of(g);
        if (reclaimable < shortfall) return AdmitOutcome::Queued;
        apply_reclaim(plan_reclaim(shortfall));
    }
    BufferGrant g;
    g.mandatory_pages = mandatory_pages;
    g.buffering_pages = requirement - mandatory_pages;
    grants_[id] = g;
    seq_len_[id] = seq_len_tokens;
    granted_ += g.total();
    return AdmitOutcome::Admitted;
}

std::vector<ReclaimShare> Scheduler::plan_reclaim(std::uint64_t pages_needed) const {
    std::vector<RequestId> ids;
    std::vector<std::uint64_t> lengths;
    std::vector<std::uint64_t> surplus;
    for (const auto& [rid, g] : grants_) {
        const std::uint64_t s = surplus_of(g);
        if (s == 0) continue;
        ids.push_back(rid);
        lengths.push_back(seq_len_.at(rid));
        surplus.push_back(s);
    }
    if (ids.empty()) throw NothingReclaimableError("no request holds surplus buffering pages");

    std::vector<std::uint64_t> taken(ids.size(), 0);
    std::uint64_t remaining = pages_needed;
    // Proportional split, re-run over requests that still have surplus when
    // caps bind. Terminates: each round either satisfies the need or
    // exhausts at least one request's surplus.
    while (remaining > 0) {
        std::vector<std::size_t> open;
        std::vector<std::uint64_t> open_lengths;
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (taken[i] < surplus[i]) {
                open.push_back(i);
                open_lengths.push_back(lengths[i]);
            }
        if (open.empty()) break;  // partial plan
        const auto shares = proportional_shares(open_lengths, remaining);
        bool progressed = false;
        for (std::size_t k = 0; k < open.size(); ++k) {
            const std::size_t i = open[k];
            const std::uint64_t take = std::min(shares[k], surplus[i] - taken[i]);
            taken[i] += take;
            remaining -= take;
            progressed = progressed || take > 0;
        }
        if (!progressed) break;
    }

    std::vector<ReclaimShare> plan;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (taken[i] > 0) plan.push_back({ids[i], taken[i]});
    return plan;
}

std::uint64_t Scheduler::apply_reclaim(const std::vector<ReclaimShare>& plan) {
    std::uint64_t freed = 0;
    for (const auto& r : plan) {
        auto& g = grants_.at(r.request);
        if (r.pages > g.buffering_pages) throw Error("reclaim exceeds buffering pages");
        g.buffering_pages -= r.pages;
        granted_ -= r.pages;
        freed += r.pages;
    }
    return freed;
}

BufferTargetAction Scheduler::buffer_target(RequestId id, std::uint64_t new_mandatory_pages) {
    BufferTargetAction action;
    auto& g = grants_.at(id);
    const std::uint64_t old_total = g.total();
    const std::uint64_t target = admission_threshold(new_mandatory_pages);

    if (target <= old_total) {
        // Shrinking selection: surplus above the ratio floor stays granted as
        // extra buffering (reclaimable by others on demand).
        action.grant.mandatory_pages = new_mandatory_pages;
        action.grant.buffering_pages = old_total - new_mandatory_pages;
        g = action.grant;
        return action;
    }

    std::uint64_t shortfall = target - old_total;
    if (free_pages() >= shortfall) {
        granted_ += shortfall;
        action.grant.mandatory_pages = new_mandatory_pages;
        action.grant.buffering_pages = target - new_mandatory_pages;
        g = action.grant;
        return action;
    }

    // Not enough free pages: reclaim surplus from the other requests, then
    // re-check. Mandatory pages have priority over the full ratio target.
    std::uint64_t reclaimable = 0;
    for (const auto& [rid, other] : grants_)
        if (rid != id) reclaimable += surplus_of(other);

    const std::uint64_t mandatory_shortfall =
        new_mandatory_pages > old_total ? new_mandatory_pages - old_total : 0;
    if (free_pages() + reclaimable < mandatory_shortfall) {
        action.preempt = true;
        return action;
    }

    const std::uint64_t want = std::min(shortfall - free_pages(), reclaimable);
    if (want > 0) {
        // Plan against the other requests only.
        auto saved = grants_.extract(id);
        action.reclaims = plan_reclaim(want);
        grants_.insert(std::move(saved));
        apply_reclaim(action.reclaims);
    }

    // Mandatory feasibility was established above, so the grant now covers at
    // least the mandatory set even when the full ratio target does not fit.
    const std::uint64_t grantable = std::min(shortfall, free_pages());
    granted_ += grantable;
    const std::uint64_t new_total = old_total + grantable;
    action.grant.mandatory_pages = new_mandatory_pages;
    action.grant.buffering_pages = new_total - new_mandatory_pages;
    g = action.grant;
    return action;
}

void Scheduler::release(RequestId id) {
    auto it = grants_.find(id);
    if (it == grants_.end()) return;
    granted_ -= it->second.total();
    grants_.erase(it);
    seq_len_.erase(id);
}

void Scheduler::record_seq_len(RequestId id, std::uint64_t seq_len_tokens) {
    seq_len_[id] = seq_len_tokens;
}

std::vector<RequestId> Scheduler::active_requests() const {
    std::vector<RequestId> ids;
    ids.reserve(grants_.size());
    for (const auto& [rid, g] : grants_) ids.push_back(rid);
    return ids;
}

}  // namespace kvtier::sched
