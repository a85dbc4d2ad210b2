// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "kvtier/errors.hpp"
#include "kvtier/types.hpp"

namespace kvtier {

/// Two-level indexed array: a statically sized top-level directory whose
/// slots reference fixed-length segments drawn on demand from a pre-sized
/// pool. Physical footprint therefore tracks the number of touched segments
/// rather than the logical entry count. Segment allocation is lowest-index
/// first, managed by a bitmap over the pool.
///
/// Reads of unmapped logical entries are a caller bug; `find` returns
/// nullptr for them and `at` throws. Entry addresses are stable: segments are
/// backed by individually owned chunks, so mapping new segments never moves
/// existing entries.
template <typename Entry>
class TwoLevelTable {
  public:
    static constexpr std::uint32_t kUnmapped = ~std::uint32_t(0);

    TwoLevelTable(std::uint64_t logical_entries, std::uint32_t entries_per_segment,
                  std::uint32_t pool_segments)
        : logical_entries_(logical_entries),
          entries_per_segment_(entries_per_segment),
          pool_segments_(pool_segments),
          directory_(ceil_div(logical_entries, entries_per_segment), kUnmapped),
          chunks_(pool_segments),
          bitmap_(ceil_div(pool_segments, 64), 0) {}

    std::uint64_t logical_entries() const { return logical_entries_; }
    std::uint32_t entries_per_segment() const { return entries_per_segment_; }
    std::uint32_t pool_segments() const { return pool_segments_; }
    std::uint64_t directory_slots() const { return directory_.size(); }

    std::uint32_t mapped_segments() const { return mapped_; }
    std::uint64_t mapped_entries() const { return std::uint64_t(mapped_) * entries_per_segment_; }

    bool is_mapped(std::uint64_t idx) const {
        return directory_[idx / entries_per_segment_] != kUnmapped;
    }

    /// Read access; nullptr when the entry's segment is unmapped.
    const Entry* find(std::uint64_t idx) const {
        const std::uint32_t seg = directory_[idx / entries_per_segment_];
        if (seg == kUnmapped) return nullptr;
        return &chunks_[seg][idx % entries_per_segment_];
    }

    const Entry& at(std::uint64_t idx) const {
        const Entry* e = find(idx);
        if (e == nullptr) throw Error("two-level table: read of unmapped entry");
        return *e;
    }

    Entry* find_mut(std::uint64_t idx) {
        return const_cast<Entry*>(static_cast<const TwoLevelTable*>(this)->find(idx));
    }

    /// Write access; maps the containing segment on demand. Fresh segments
    /// come back value-initialized.
    Entry& at_or_map(std::uint64_t idx) {
        const std::uint64_t slot = idx / entries_per_segment_;
        std::uint32_t seg = directory_[slot];
        if (seg == kUnmapped) {
            seg = segment_alloc();
            directory_[slot] = seg;
        }
        return chunks_[seg][idx % entries_per_segment_];
    }

    /// Lowest-index free segment from the pool; sets its bitmap bit and
    /// returns the segment zero-initialized.
    std::uint32_t segment_alloc() {
        for (std::size_t w = scan_hint_; w < bitmap_.size(); ++w) {
            if (bitmap_[w] == ~std::uint64_t(0)) continue;
            const std::uint32_t bit = static_cast<std::uint32_t>(std::countr_one(bitmap_[w]));
            const std::uint32_t seg = static_cast<std::uint32_t>(w * 64 + bit);
            if (seg >= pool_segments_) break;
            bitmap_[w] |= (std::uint64_t(1) << bit);
            scan_hint_ = w;
            ++mapped_;
            if (!chunks_[seg]) chunks_[seg] = std::make_unique<Entry[]>(entries_per_segment_);
            std::fill_n(chunks_[seg].get(), entries_per_segment_, Entry{});
            return seg;
        }
        throw PoolExhaustedError("two-level table: segment pool exhausted (" +
                                 std::to_string(pool_segments_) + " segments)");
    }

    /// Clears the segment's bitmap bit. The caller is responsible for
    /// unmapping any directory slot that referenced it.
    void segment_free(std::uint32_t seg) {
        if (seg >= pool_segments_)
            throw DoubleFreeError("two-level table: freeing out-of-range segment " + std::to_string(seg));
        const std::size_t w = seg / 64;
        const std::uint64_t mask = std::uint64_t(1) << (seg % 64);
        if ((bitmap_[w] & mask) == 0)
            throw DoubleFreeError("two-level table: freeing unallocated segment " + std::to_string(seg));
        bitmap_[w] &= ~mask;
        if (w < scan_hint_) scan_hint_ = w;
        --mapped_;
    }

    /// Unmaps the directory slot containing `idx` and returns its segment to
    /// the pool. No-op if already unmapped.
    void unmap_containing(std::uint64_t idx) {
        const std::uint64_t slot = idx / entries_per_segment_;
        const std::uint32_t seg = directory_[slot];
        if (seg == kUnmapped) return;
        directory_[slot] = kUnmapped;
        segment_free(seg);
    }

    /// Releases a logical range [begin, end): segments fully inside the range
    /// are returned to the pool; entries in boundary segments shared with
    /// neighbouring ranges are reset to Entry{} instead.
    void release_range(std::uint64_t begin, std::uint64_t end) {
        if (begin >= end) return;
        const std::uint64_t eps = entries_per_segment_;
        const std::uint64_t first_full = ceil_div(begin, eps);
        const std::uint64_t last_full = end / eps;  // exclusive
        for (std::uint64_t s = first_full; s < last_full; ++s) {
            if (directory_[s] != kUnmapped) {
                segment_free(directory_[s]);
                directory_[s] = kUnmapped;
            }
        }
        auto reset_span = [this](std::uint64_t lo, std::uint64_t hi) {
            for (std::uint64_t i = lo; i < hi; ++i) {
                if (Entry* e = find_mut(i)) *e = Entry{};
            }
        };
        if (first_full * eps > begin) reset_span(begin, std::min(end, first_full * eps));
        if (last_full >= first_full && last_full * eps < end)
            reset_span(std::max(begin, last_full * eps), end);
    }

  private:
    std::uint64_t logical_entries_;
    std::uint32_t entries_per_segment_;
    std::uint32_t pool_segments_;
    std::vector<std::uint32_t> directory_;
    std::vector<std::unique_ptr<Entry[]>> chunks_;  // lazily backed, pool-bounded
    std::vector<std::uint64_t> bitmap_;
    std::uint32_t mapped_ = 0;
    std::size_t scan_hint_ = 0;
};

}  // namespace kvtier
