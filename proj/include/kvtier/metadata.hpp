// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "kvtier/config.hpp"
#include "kvtier/errors.hpp"
#include "kvtier/two_level_table.hpp"
#include "kvtier/types.hpp"

namespace kvtier {

/// How a head's tokens are grouped into logical partitions, plus the subset
/// pinned to the device tier (outliers / recent window).
struct PartitionSpec {
    enum class Mode { Uniform, Variable };

    Mode mode = Mode::Uniform;
    std::uint64_t context_len = 0;          // Uniform: total tokens
    std::uint64_t tokens_per_partition = 0; // Uniform
    std::vector<TokenRange> ranges;         // Variable: must tile [0, context)
    std::vector<PartitionId> pinned_ids;

    static PartitionSpec uniform(std::uint64_t context_len, std::uint64_t tokens_per_partition) {
        PartitionSpec s;
        s.mode = Mode::Uniform;
        s.context_len = context_len;
        s.tokens_per_partition = tokens_per_partition;
        return s;
    }

    static PartitionSpec variable(std::vector<TokenRange> ranges) {
        PartitionSpec s;
        s.mode = Mode::Variable;
        s.ranges = std::move(ranges);
        for (const auto& r : s.ranges) s.context_len = std::max(s.context_len, r.end);
        return s;
    }

    std::uint64_t partition_count() const {
        if (mode == Mode::Uniform) return ceil_div(context_len, tokens_per_partition);
        return ranges.size();
    }

    std::uint64_t token_count(PartitionId id) const {
        if (mode == Mode::Uniform) {
            const std::uint64_t start = std::uint64_t(id) * tokens_per_partition;
            return std::min(tokens_per_partition, context_len - start);
        }
        return ranges[id].size();
    }
};

// Modeled on-device/on-host entry layouts. The accounting widths used by
// footprint() are fixed independently of the C++ struct sizes: meta-partition
// 8 B, device page 8 B (12 B when more than 256 recency buckets are
// configured), partition offset 8 B, host page id 4 B.
struct MetaPartitionEntry {
    std::uint32_t token_count = 0;
    Residency residency = Residency::HostOnly;
    bool pinned = false;
};

struct DevicePageEntry {
    PartitionId partition_id = 0;
    std::uint32_t timestamp = 0;  // recency bucket in [0, n_buckets)
    bool valid = false;
};

struct PartitionOffsetEntry {
    std::uint32_t start_offset = 0;
    std::uint32_t page_count = 0;
    bool has_pages = false;  // pinned partitions carry no host pages until offloaded
};

struct MetaView {
    std::uint64_t token_count = 0;
    Residency residency = Residency::HostOnly;
    bool pinned = false;
    std::uint64_t page_count = 0;
};

struct TableFootprint {
    std::string table;
    std::string tier;  // "device" or "host"
    std::uint64_t logical_bytes = 0;
    std::uint64_t physical_bytes = 0;
};

/// Per-table flat-worst-case vs actually-mapped byte accounting, split by
/// memory tier.
struct FootprintReport {
    std::array<TableFootprint, 4> tables;
    std::uint64_t device_logical = 0;
    std::uint64_t device_physical = 0;
    std::uint64_t host_logical = 0;
    std::uint64_t host_physical = 0;

    std::uint64_t logical_total() const { return device_logical + host_logical; }
    std::uint64_t physical_total() const { return device_physical + host_physical; }

    /// `table,tier,logical_bytes,physical_bytes` rows plus a totals row.
    std::string to_csv() const;
};

struct StoreConfig {
    ModelShape model;
    SparseConfig sparse;
    MetadataSettings settings;
    std::uint64_t device_page_capacity = 0;  // pages across all heads
    std::uint64_t host_page_capacity = 0;
    std::uint32_t n_buckets = 64;  // device-page-entry width accounting
};

struct PartitionPages {
    PartitionId id = 0;
    std::vector<PageId> pages;
};

/// The four tier-split mapping tables, all organized with two-level indexing
/// over a [batch_slot x layer x head x entry] logical space:
///
///   device tier: meta-partition table (token count, residency, pin flag)
///                device page table   (slot -> partition, recency bucket)
///   host tier:   partition offset table (partition -> host page list slice)
///                host page array        (flat per-head page id arena)
///
/// State is partitioned by HeadKey; callers serialize per key. Device page
/// slots and host pages are per-head arenas allocated lowest-free-id first.
class MetadataStore {
  public:
    explicit MetadataStore(StoreConfig cfg);

    // -- request lifecycle -------------------------------------------------
    std::uint64_t attach_request(RequestId id);
    void release_request(RequestId id);
    bool request_attached(RequestId id) const;
    std::uint64_t attached_requests() const { return slot_of_request_.size(); }

    // -- registration and lookup -------------------------------------------
    /// Creates meta entries for every partition in the spec; pinned ones get
    /// device pages, the rest get host pages with offset/page-array entries.
    std::vector<PartitionId> register_partitions(const HeadKey& key, const PartitionSpec& spec);

    /// Registers additional partitions whose ranges continue the head's
    /// already-partitioned prefix (decode-time growth).
    std::vector<PartitionId> append_partitions(const HeadKey& key, std::span<const TokenRange> ranges);

    MetaView lookup_one(const HeadKey& key, PartitionId id) const;
    std::vector<MetaView> lookup_meta(const HeadKey& key, std::span<const PartitionId> ids) const;

    /// The contiguous host-page slice backing a partition.
    std::vector<PageId> cpu_pages_of(const HeadKey& key, PartitionId id) const;

    FootprintReport footprint() const;

    // -- device buffer, used by the replacement engine and scheduler --------
    std::uint64_t buffer_capacity(const HeadKey& key) const;
    void grow_buffer(const HeadKey& key, std::uint64_t capacity_pages);
    /// Shrinks the head's buffer to `capacity_pages`, evicting partitions that
    /// own tail slots. Pinned and `protect`ed partitions are relocated to low
    /// slots instead (metadata-only remap). Returns the evicted partitions.
    std::vector<PartitionId> shrink_buffer(const HeadKey& key, std::uint64_t capacity_pages,
                                           const std::unordered_set<PartitionId>& protect);

    std::uint64_t used_device_pages(const HeadKey& key) const;
    std::uint64_t free_device_pages(const HeadKey& key) const;
    std::uint64_t pinned_device_pages(const HeadKey& key) const;
    std::uint64_t device_scan_end(const HeadKey& key) const;  // slots [0, end) may be valid

    const DevicePageEntry* device_entry(const HeadKey& key, PageId slot) const;
    /// Mutable access to an already-mapped entry; nullptr when unmapped.
    DevicePageEntry* device_entry_if(const HeadKey& key, PageId slot);
    DevicePageEntry& device_entry_mut(const HeadKey& key, PageId slot);
    PageId alloc_device_slot(const HeadKey& key);
    void free_device_slot(const HeadKey& key, PageId slot);
    void set_residency(const HeadKey& key, PartitionId id, Residency r);

    StepIndex last_demote_step(const HeadKey& key) const;
    void set_last_demote_step(const HeadKey& key, StepIndex step);

    /// Preemption support: gives every pinned partition host pages, clears its
    /// pin flag and releases all of the head's device slots.
    void offload_pinned_and_clear(const HeadKey& key);

    /// Re-pins previously offloaded partitions (admission after preemption).
    /// Returns the device page assignments so the caller can plan transfers.
    std::vector<PartitionPages> repin(const HeadKey& key, std::span<const PartitionId> ids);

    // -- geometry ------------------------------------------------------------
    std::uint64_t partitions_per_head() const { return partitions_per_head_; }
    std::uint64_t pages_per_head() const { return pages_per_head_; }
    std::uint64_t partition_count(const HeadKey& key) const;
    std::uint64_t partitioned_tokens(const HeadKey& key) const;
    std::uint64_t total_device_pages_used() const { return device_pages_used_; }
    std::uint64_t total_host_pages_used() const { return host_pages_used_; }
    const StoreConfig& config() const { return cfg_; }

  private:
    struct HeadState {
        std::uint64_t partition_count = 0;
        std::uint64_t partitioned_tokens = 0;
        std::uint64_t next_host_page = 0;
        std::uint64_t capacity = 0;
        std::uint64_t used_slots = 0;
        std::uint64_t pinned_pages = 0;
        std::uint64_t high_watermark = 0;
        std::vector<PageId> free_slots;  // min-heap via std::greater
        StepIndex last_demote_step = kNoStep;
    };

    std::uint64_t head_linear(const HeadKey& key) const;
    HeadState& head_state(const HeadKey& key);
    const HeadState& head_state(const HeadKey& key) const;
    std::uint64_t meta_index(std::uint64_t head_lin, PartitionId id) const;
    std::uint64_t page_index(std::uint64_t head_lin, PageId slot) const;
    std::vector<PartitionId> register_ranges(const HeadKey& key, std::span<const TokenRange> ranges,
                                             const std::unordered_set<PartitionId>& pinned,
                                             std::uint64_t expected_start_token);
    PageId alloc_slot_unchecked(HeadState& hs);
    void assign_host_pages(std::uint64_t head_lin, HeadState& hs, PartitionId id, std::uint64_t page_count);

    StoreConfig cfg_;
    std::uint64_t partitions_per_head_;
    std::uint64_t pages_per_head_;
    std::uint64_t heads_per_request_;

    TwoLevelTable<MetaPartitionEntry> meta_;
    TwoLevelTable<DevicePageEntry> device_pages_;
    TwoLevelTable<PartitionOffsetEntry> offsets_;
    TwoLevelTable<PageId> host_pages_;

    std::vector<HeadState> heads_;           // indexed by head_linear
    std::map<RequestId, std::uint64_t> slot_of_request_;
    std::vector<bool> slot_in_use_;
    std::uint64_t device_pages_used_ = 0;
    std::uint64_t host_pages_used_ = 0;
};

}  // namespace kvtier
