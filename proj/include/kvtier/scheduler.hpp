// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "kvtier/types.hpp"

namespace kvtier::sched {

struct SchedulerConfig {
    double min_buffer_ratio = 5.0;        // buffering-to-mandatory floor at admission
    std::uint64_t device_page_budget = 0; // pages available to all grants
};

/// A request's device-page allocation, split into the pages its current step
/// needs (mandatory) and the retained-locality surplus (buffering).
struct BufferGrant {
    std::uint64_t mandatory_pages = 0;
    std::uint64_t buffering_pages = 0;

    std::uint64_t total() const { return mandatory_pages + buffering_pages; }
    double buffer_ratio() const {
        return mandatory_pages == 0 ? 0.0
                                    : static_cast<double>(buffering_pages) /
                                          static_cast<double>(mandatory_pages);
    }
};

enum class AdmitOutcome { Admitted, Queued };

struct ReclaimShare {
    RequestId request = 0;
    std::uint64_t pages = 0;
};

/// Largest-remainder split of `need` proportional to `lengths`; ties between
/// equal remainders resolve toward lower indices. Pure.
std::vector<std::uint64_t> proportional_shares(const std::vector<std::uint64_t>& lengths,
                                               std::uint64_t need);

struct BufferTargetAction {
    BufferGrant grant;
    std::vector<ReclaimShare> reclaims;  // to apply to other requests first
    bool preempt = false;                // mandatory unmet even after reclamation
};

/// Buffer-elastic admission control: a request enters the batch only when its
/// mandatory pages plus the minimum buffering allocation fit, after
/// reclaiming surplus buffering from active requests in proportion to their
/// sequence lengths.
class Scheduler {
  public:
    explicit Scheduler(SchedulerConfig cfg) : cfg_(cfg) {}

    /// Pages a request must be granted at admission.
    std::uint64_t admission_threshold(std::uint64_t mandatory_pages) const;

    AdmitOutcome try_admit(RequestId id, std::uint64_t mandatory_pages, std::uint64_t seq_len_tokens);

    /// Plans which active requests give up how many pages to free
    /// `pages_needed`, proportional to sequence length, capped at each
    /// request's surplus above the minimum ratio. Partial plans are returned
    /// when the total surplus falls short; throws NothingReclaimableError when
    /// no request has any surplus.
    std::vector<ReclaimShare> plan_reclaim(std::uint64_t pages_needed) const;

    /// Applies a reclaim plan to the grant ledger; returns pages freed.
    std::uint64_t apply_reclaim(const std::vector<ReclaimShare>& plan);

    /// Re-targets a request's grant after its selection changed. Never touches
    /// other requests; the caller applies `reclaims` (shrinking those
    /// requests' buffers) before enacting the grant, or preempts the request
    /// when `preempt` is set.
    BufferTargetAction buffer_target(RequestId id, std::uint64_t new_mandatory_pages);

    void release(RequestId id);
    void record_seq_len(RequestId id, std::uint64_t seq_len_tokens);

    bool active(RequestId id) const { return grants_.count(id) > 0; }
    const BufferGrant& grant(RequestId id) const { return grants_.at(id); }
    std::uint64_t granted_total() const { return granted_; }
    std::uint64_t free_pages() const { return cfg_.device_page_budget - granted_; }
    const SchedulerConfig& config() const { return cfg_; }
    std::vector<RequestId> active_requests() const;

  private:
    std::uint64_t surplus_of(const BufferGrant& g) const;

    SchedulerConfig cfg_;
    std::map<RequestId, BufferGrant> grants_;
    std::map<RequestId, std::uint64_t> seq_len_;
    std::uint64_t granted_ = 0;
};

}  // namespace kvtier::sched
