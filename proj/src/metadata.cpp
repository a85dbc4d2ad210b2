// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/metadata.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>

namespace kvtier {

namespace {

constexpr std::uint64_t kMetaEntryBytes = 8;
constexpr std::uint64_t kOffsetEntryBytes = 8;
constexpr std::uint64_t kHostPageIdBytes = 4;

std::uint64_t device_entry_bytes(std::uint32_t n_buckets) {
    // One byte of timestamp covers up to 256 buckets; beyond that the entry
    // grows to hold a wider timestamp field.
    return n_buckets <= 256 ? 8 : 12;
}

std::uint32_t derive_pool(std::uint64_t entries, std::uint32_t eps, std::uint64_t heads,
                          std::uint32_t override_segments) {
    if (override_segments > 0) return override_segments;
    // Enough segments for every allocatable entry plus one boundary segment
    // per head of fragmentation slack.
    const std::uint64_t segs = ceil_div(entries, eps) + heads;
    return static_cast<std::uint32_t>(std::min<std::uint64_t>(segs, std::numeric_limits<std::uint32_t>::max()));
}

}  // namespace

MetadataStore::MetadataStore(StoreConfig cfg)
    : cfg_(cfg),
      partitions_per_head_(cfg.sparse.partition_granularity.has_value()
                               ? ceil_div(cfg.model.max_context, *cfg.sparse.partition_granularity)
                               : ceil_div(cfg.model.max_context, cfg.sparse.page_size)),
      pages_per_head_(ceil_div(cfg.model.max_context, cfg.sparse.page_size)),
      heads_per_request_(cfg.model.heads_per_request()),
      meta_(cfg.settings.max_batch_slots * heads_per_request_ * partitions_per_head_,
            cfg.settings.entries_per_segment,
            derive_pool(cfg.host_page_capacity + cfg.device_page_capacity, cfg.settings.entries_per_segment,
                        cfg.settings.max_batch_slots * heads_per_request_, cfg.settings.meta_pool_segments)),
      device_pages_(cfg.settings.max_batch_slots * heads_per_request_ * pages_per_head_,
                    cfg.settings.entries_per_segment,
                    derive_pool(cfg.device_page_capacity, cfg.settings.entries_per_segment,
                                cfg.settings.max_batch_slots * heads_per_request_,
                                cfg.settings.device_page_pool_segments)),
      offsets_(cfg.settings.max_batch_slots * heads_per_request_ * partitions_per_head_,
               cfg.settings.entries_per_segment,
               derive_pool(cfg.host_page_capacity + cfg.device_page_capacity, cfg.settings.entries_per_segment,
                           cfg.settings.max_batch_slots * heads_per_request_, cfg.settings.offset_pool_segments)),
      host_pages_(cfg.settings.max_batch_slots * heads_per_request_ * pages_per_head_,
                  cfg.settings.entries_per_segment,
                  derive_pool(cfg.host_page_capacity, cfg.settings.entries_per_segment,
                              cfg.settings.max_batch_slots * heads_per_request_,
                              cfg.settings.host_page_pool_segments)),
      heads_(cfg.settings.max_batch_slots * heads_per_request_),
      slot_in_use_(cfg.settings.max_batch_slots, false) {}

std::uint64_t MetadataStore::attach_request(RequestId id) {
    if (slot_of_request_.count(id)) throw Error("request already attached");
    for (std::uint64_t s = 0; s < slot_in_use_.size(); ++s) {
        if (!slot_in_use_[s]) {
            slot_in_use_[s] = true;
            slot_of_request_[id] = s;
            return s;
        }
    }
    throw Error("no free batch slot (max_batch_slots=" + std::to_string(slot_in_use_.size()) + ")");
}

void MetadataStore::release_request(RequestId id) {
    auto it = slot_of_request_.find(id);
    if (it == slot_of_request_.end()) throw Error("request not attached");
    const std::uint64_t slot = it->second;
    for (std::uint64_t h = 0; h < heads_per_request_; ++h) {
        const std::uint64_t lin = slot * heads_per_request_ + h;
        HeadState& hs = heads_[lin];
        device_pages_used_ -= hs.used_slots;
        host_pages_used_ -= hs.next_host_page;
        meta_.release_range(lin * partitions_per_head_, lin * partitions_per_head_ + hs.partition_count);
        offsets_.release_range(lin * partitions_per_head_, lin * partitions_per_head_ + hs.partition_count);
        device_pages_.release_range(lin * pages_per_head_, lin * pages_per_head_ + hs.high_watermark);
        host_pages_.release_range(lin * pages_per_head_, lin * pages_per_head_ + hs.next_host_page);
        hs = HeadState{};
    }
    slot_in_use_[slot] = false;
    slot_of_request_.erase(it);
}

bool MetadataStore::request_attached(RequestId id) const { return slot_of_request_.count(id) > 0; }

std::uint64_t MetadataStore::head_linear(const HeadKey& key) const {
    auto it = slot_of_request_.find(key.request_id);
    if (it == slot_of_request_.end()) throw Error("request not attached");
    if (key.layer >= cfg_.model.num_layers || key.head >= cfg_.model.num_kv_heads)
        throw Error("layer/head index out of range");
    return it->second * heads_per_request_ + std::uint64_t(key.layer) * cfg_.model.num_kv_heads + key.head;
}

MetadataStore::HeadState& MetadataStore::head_state(const HeadKey& key) { return heads_[head_linear(key)]; }
const MetadataStore::HeadState& MetadataStore::head_state(const HeadKey& key) const {
    return heads_[head_linear(key)];
}

std::uint64_t MetadataStore::meta_index(std::uint64_t head_lin, PartitionId id) const {
    return head_lin * partitions_per_head_ + id;
}

std::uint64_t MetadataStore::page_index(std::uint64_t head_lin, PageId slot) const {
    return head_lin * pages_per_head_ + slot;
}

PageId MetadataStore::alloc_slot_unchecked(HeadState& hs) {
    if (!hs.free_slots.empty()) {
        std::pop_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});
        const PageId slot = hs.free_slots.back();
        hs.free_slots.pop_back();
        return slot;
    }
    return static_cast<PageId>(hs.high_watermark++);
}

void MetadataStore::assign_host_pages(std::uint64_t head_lin, HeadState& hs, PartitionId id,
                                      std::uint64_t page_count) {
    auto& off = offsets_.at_or_map(meta_index(head_lin, id));
    off.start_offset = static_cast<std::uint32_t>(hs.next_host_page);
    off.page_count = static_cast<std::uint32_t>(page_count);
    off.has_pages = true;
    for (std::uint64_t i = 0; i < page_count; ++i) {
        host_pages_.at_or_map(page_index(head_lin, static_cast<PageId>(hs.next_host_page + i))) =
            static_cast<PageId>(hs.next_host_page + i);
    }
    hs.next_host_page += page_count;
    host_pages_used_ += page_count;
}

std::vector<PartitionId> MetadataStore::register_ranges(const HeadKey& key,
                                                        std::span<const TokenRange> ranges,
                                                        const std::unordered_set<PartitionId>& pinned,
                                                        std::uint64_t expected_start_token) {
    const std::uint64_t head_lin = head_linear(key);
    HeadState& hs = heads_[head_lin];

    // Tiling check: ranges must continue the already-partitioned prefix with
    // no gaps or overlap.
    std::uint64_t cursor = expected_start_token;
    for (const auto& r : ranges) {
        if (r.begin != cursor || r.end <= r.begin)
            throw OverlappingSpecError("partition ranges must tile the context: expected range starting at " +
                                       std::to_string(cursor));
        if (r.size() > std::numeric_limits<std::uint32_t>::max())
            throw InvalidSpecParamsError("partition exceeds representable token count");
        cursor = r.end;
    }
    if (hs.partition_count + ranges.size() > partitions_per_head_)
        throw InvalidSpecParamsError(
            "too many partitions for the head's table capacity (" + std::to_string(partitions_per_head_) +
            "); variable specs must use partitions of at least one page");

    // Capacity pre-check so a failed registration leaves no partial state.
    std::uint64_t new_host_pages = 0;
    std::uint64_t new_pinned_pages = 0;
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto id = static_cast<PartitionId>(hs.partition_count + i);
        const std::uint64_t pc = ceil_div(ranges[i].size(), cfg_.sparse.page_size);
        if (pinned.count(id))
            new_pinned_pages += pc;
        else
            new_host_pages += pc;
    }
    if (host_pages_used_ + new_host_pages > cfg_.host_page_capacity)
        throw HostCapacityExceededError("host tier full: need " + std::to_string(new_host_pages) +
                                        " pages, free " +
                                        std::to_string(cfg_.host_page_capacity - host_pages_used_));
    if (device_pages_used_ + new_pinned_pages > cfg_.device_page_capacity)
        throw DeviceCapacityExceededError("device tier cannot hold pinned pages: need " +
                                          std::to_string(new_pinned_pages) + " pages, free " +
                                          std::to_string(cfg_.device_page_capacity - device_pages_used_));

    std::vector<PartitionId> ids;
    ids.reserve(ranges.size());
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        const auto id = static_cast<PartitionId>(hs.partition_count + i);
        const std::uint64_t tokens = ranges[i].size();
        const std::uint64_t pc = ceil_div(tokens, cfg_.sparse.page_size);
        auto& meta = meta_.at_or_map(meta_index(head_lin, id));
        meta.token_count = static_cast<std::uint32_t>(tokens);
        if (pinned.count(id)) {
            meta.pinned = true;
            meta.residency = Residency::DeviceResident;
            if (hs.capacity < hs.used_slots + pc) hs.capacity = hs.used_slots + pc;
            for (std::uint64_t p = 0; p < pc; ++p) {
                const PageId slot = alloc_slot_unchecked(hs);
                auto& entry = device_pages_.at_or_map(page_index(head_lin, slot));
                entry.partition_id = id;
                entry.timestamp = 0;
                entry.valid = true;
            }
            hs.used_slots += pc;
            hs.pinned_pages += pc;
            device_pages_used_ += pc;
        } else {
            meta.pinned = false;
            meta.residency = Residency::HostOnly;
            assign_host_pages(head_lin, hs, id, pc);
        }
        ids.push_back(id);
    }
    hs.partition_count += ranges.size();
    hs.partitioned_tokens = cursor;
    return ids;
}

std::vector<PartitionId> MetadataStore::register_partitions(const HeadKey& key, const PartitionSpec& spec) {
    HeadState& hs = head_state(key);
    if (hs.partition_count != 0) throw Error("head already has registered partitions");

    std::vector<TokenRange> ranges;
    if (spec.mode == PartitionSpec::Mode::Uniform) {
        if (spec.context_len > 0 && spec.tokens_per_partition == 0)
            throw InvalidSpecParamsError("tokens_per_partition must be >= 1");
        ranges.reserve(spec.partition_count());
        for (std::uint64_t b = 0; b < spec.context_len; b += spec.tokens_per_partition)
            ranges.push_back({b, std::min(spec.context_len, b + spec.tokens_per_partition)});
    } else {
        ranges = spec.ranges;
    }

    std::unordered_set<PartitionId> pinned(spec.pinned_ids.begin(), spec.pinned_ids.end());
    for (PartitionId id : pinned)
        if (id >= ranges.size()) throw InvalidSpecParamsError("pinned id out of range");
    return register_ranges(key, ranges, pinned, 0);
}

std::vector<PartitionId> MetadataStore::append_partitions(const HeadKey& key,
                                                          std::span<const TokenRange> ranges) {
    const HeadState& hs = head_state(key);
    return register_ranges(key, ranges, {}, hs.partitioned_tokens);
}

MetaView MetadataStore::lookup_one(const HeadKey& key, PartitionId id) const {
    const std::uint64_t head_lin = head_linear(key);
    const HeadState& hs = heads_[head_lin];
    if (id >= hs.partition_count) throw UnknownPartitionError(id);
    const auto& meta = meta_.at(meta_index(head_lin, id));
    return {meta.token_count, meta.residency, meta.pinned, ceil_div(meta.token_count, cfg_.sparse.page_size)};
}

std::vector<MetaView> MetadataStore::lookup_meta(const HeadKey& key, std::span<const PartitionId> ids) const {
    std::vector<MetaView> out;
    out.reserve(ids.size());
    for (PartitionId id : ids) out.push_back(lookup_one(key, id));
    return out;
}

std::vector<PageId> MetadataStore::cpu_pages_of(const HeadKey& key, PartitionId id) const {
    const std::uint64_t head_lin = head_linear(key);
    const HeadState& hs = heads_[head_lin];
    if (id >= hs.partition_count) throw UnknownPartitionError(id);
    const auto* off = offsets_.find(meta_index(head_lin, id));
    if (off == nullptr || !off->has_pages) {
        if (meta_.at(meta_index(head_lin, id)).pinned) throw NotOffloadedError(id);
        throw UnknownPartitionError(id);
    }
    std::vector<PageId> pages;
    pages.reserve(off->page_count);
    for (std::uint32_t i = 0; i < off->page_count; ++i)
        pages.push_back(host_pages_.at(page_index(head_lin, off->start_offset + i)));
    return pages;
}

// -- device buffer ----------------------------------------------------------

std::uint64_t MetadataStore::buffer_capacity(const HeadKey& key) const { return head_state(key).capacity; }

void MetadataStore::grow_buffer(const HeadKey& key, std::uint64_t capacity_pages) {
    HeadState& hs = head_state(key);
    if (capacity_pages < hs.capacity)
        throw Error("grow_buffer cannot shrink; use shrink_buffer");
    hs.capacity = capacity_pages;
}

std::vector<PartitionId> MetadataStore::shrink_buffer(const HeadKey& key, std::uint64_t capacity_pages,
                                                      const std::unordered_set<PartitionId>& protect) {
    const std::uint64_t head_lin = head_linear(key);
    HeadState& hs = heads_[head_lin];
    if (capacity_pages >= hs.capacity) {
        hs.capacity = capacity_pages;
        return {};
    }

    // Pass 1: find partitions owning tail slots; split into relocations
    // (pinned or protected) and evictions.
    std::vector<PartitionId> evict;
    std::vector<PageId> relocate;
    for (std::uint64_t slot = capacity_pages; slot < hs.high_watermark; ++slot) {
        const auto* e = device_pages_.find(page_index(head_lin, static_cast<PageId>(slot)));
        if (e == nullptr || !e->valid) continue;
        const auto& meta = meta_.at(meta_index(head_lin, e->partition_id));
        if (meta.pinned || protect.count(e->partition_id)) {
            relocate.push_back(static_cast<PageId>(slot));
        } else if (std::find(evict.begin(), evict.end(), e->partition_id) == evict.end()) {
            evict.push_back(e->partition_id);
        }
    }

    // Pass 2: evict whole partitions (their low slots free up too).
    if (!evict.empty()) {
        std::unordered_set<PartitionId> victims(evict.begin(), evict.end());
        for (std::uint64_t slot = 0; slot < hs.high_watermark; ++slot) {
            auto* e = device_pages_.find_mut(page_index(head_lin, static_cast<PageId>(slot)));
            if (e == nullptr || !e->valid || !victims.count(e->partition_id)) continue;
            e->valid = false;
            hs.free_slots.push_back(static_cast<PageId>(slot));
            std::push_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});
            --hs.used_slots;
            --device_pages_used_;
        }
        for (PartitionId id : evict) meta_.find_mut(meta_index(head_lin, id))->residency = Residency::HostOnly;
    }

    // Tail slots are gone either way; only low slots may receive relocations.
    hs.free_slots.erase(std::remove_if(hs.free_slots.begin(), hs.free_slots.end(),
                                       [&](PageId s) { return s >= capacity_pages; }),
                        hs.free_slots.end());
    std::make_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});

    // Pass 3: relocate protected tail pages into low free slots. When none is
    // free, a low-slot unprotected partition yields its pages (it would have
    // been a reclaim victim in a compacted table anyway).
    auto evict_low_victim = [&]() {
        for (std::uint64_t slot = 0; slot < capacity_pages; ++slot) {
            const auto* e = device_pages_.find(page_index(head_lin, static_cast<PageId>(slot)));
            if (e == nullptr || !e->valid) continue;
            const PartitionId pid = e->partition_id;
            const auto& meta = meta_.at(meta_index(head_lin, pid));
            if (meta.pinned || protect.count(pid)) continue;
            for (std::uint64_t s2 = slot; s2 < hs.high_watermark; ++s2) {
                auto* e2 = device_pages_.find_mut(page_index(head_lin, static_cast<PageId>(s2)));
                if (e2 == nullptr || !e2->valid || e2->partition_id != pid) continue;
                e2->valid = false;
                if (s2 < capacity_pages) {
                    hs.free_slots.push_back(static_cast<PageId>(s2));
                    std::push_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});
                }
                --hs.used_slots;
                --device_pages_used_;
            }
            meta_.find_mut(meta_index(head_lin, pid))->residency = Residency::HostOnly;
            evict.push_back(pid);
            return true;
        }
        return false;
    };
    for (PageId old_slot : relocate) {
        auto* e = device_pages_.find_mut(page_index(head_lin, old_slot));
        const DevicePageEntry saved = *e;
        e->valid = false;
        if (hs.free_slots.empty() && !evict_low_victim())
            throw InsufficientBufferError("cannot shrink below pinned/mandatory footprint");
        std::pop_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});
        const PageId dst = hs.free_slots.back();
        hs.free_slots.pop_back();
        device_pages_.at_or_map(page_index(head_lin, dst)) = saved;
    }

    hs.high_watermark = std::min(hs.high_watermark, capacity_pages);
    hs.capacity = capacity_pages;
    return evict;
}

std::uint64_t MetadataStore::used_device_pages(const HeadKey& key) const { return head_state(key).used_slots; }

std::uint64_t MetadataStore::free_device_pages(const HeadKey& key) const {
    const HeadState& hs = head_state(key);
    return hs.capacity - hs.used_slots;
}

std::uint64_t MetadataStore::pinned_device_pages(const HeadKey& key) const {
    return head_state(key).pinned_pages;
}

std::uint64_t MetadataStore::device_scan_end(const HeadKey& key) const {
    return head_state(key).high_watermark;
}

const DevicePageEntry* MetadataStore::device_entry(const HeadKey& key, PageId slot) const {
    return device_pages_.find(page_index(head_linear(key), slot));
}

DevicePageEntry* MetadataStore::device_entry_if(const HeadKey& key, PageId slot) {
    return device_pages_.find_mut(page_index(head_linear(key), slot));
}

DevicePageEntry& MetadataStore::device_entry_mut(const HeadKey& key, PageId slot) {
    return device_pages_.at_or_map(page_index(head_linear(key), slot));
}

PageId MetadataStore::alloc_device_slot(const HeadKey& key) {
    HeadState& hs = head_state(key);
    if (hs.used_slots >= hs.capacity)
        throw InsufficientBufferError("device buffer full for this head");
    if (device_pages_used_ >= cfg_.device_page_capacity)
        throw DeviceCapacityExceededError("device tier page capacity exhausted");
    const PageId slot = alloc_slot_unchecked(hs);
    ++hs.used_slots;
    ++device_pages_used_;
    return slot;
}

void MetadataStore::free_device_slot(const HeadKey& key, PageId slot) {
    HeadState& hs = head_state(key);
    hs.free_slots.push_back(slot);
    std::push_heap(hs.free_slots.begin(), hs.free_slots.end(), std::greater<PageId>{});
    --hs.used_slots;
    --device_pages_used_;
}

void MetadataStore::set_residency(const HeadKey& key, PartitionId id, Residency r) {
    const std::uint64_t head_lin = head_linear(key);
    if (id >= heads_[head_lin].partition_count) throw UnknownPartitionError(id);
    meta_.find_mut(meta_index(head_lin, id))->residency = r;
}

StepIndex MetadataStore::last_demote_step(const HeadKey& key) const {
    return head_state(key).last_demote_step;
}

void MetadataStore::set_last_demote_step(const HeadKey& key, StepIndex step) {
    head_state(key).last_demote_step = step;
}

void MetadataStore::offload_pinned_and_clear(const HeadKey& key) {
    const std::uint64_t head_lin = head_linear(key);
    HeadState& hs = heads_[head_lin];
    for (PartitionId id = 0; id < hs.partition_count; ++id) {
        auto* meta = meta_.find_mut(meta_index(head_lin, id));
        if (meta->pinned) {
            const auto* off = offsets_.find(meta_index(head_lin, id));
            if (off == nullptr || !off->has_pages) {
                const std::uint64_t pc = ceil_div(meta->token_count, cfg_.sparse.page_size);
                if (host_pages_used_ + pc > cfg_.host_page_capacity)
                    throw HostCapacityExceededError("host tier full while offloading pinned partitions");
                assign_host_pages(head_lin, hs, id, pc);
            }
            meta->pinned = false;
        }
        meta->residency = Residency::HostOnly;
    }
    for (std::uint64_t slot = 0; slot < hs.high_watermark; ++slot) {
        auto* e = device_pages_.find_mut(page_index(head_lin, static_cast<PageId>(slot)));
        if (e != nullptr && e->valid) e->valid = false;
    }
    device_pages_used_ -= hs.used_slots;
    hs.used_slots = 0;
    hs.pinned_pages = 0;
    hs.high_watermark = 0;
    hs.free_slots.clear();
    hs.capacity = 0;
    hs.last_demote_step = kNoStep;
}

std::vector<PartitionPages> MetadataStore::repin(const HeadKey& key, std::span<const PartitionId> ids) {
    const std::uint64_t head_lin = head_linear(key);
    HeadState& hs = heads_[head_lin];
    std::vector<PartitionPages> out;
    out.reserve(ids.size());
    for (PartitionId id : ids) {
        if (id >= hs.partition_count) throw UnknownPartitionError(id);
        auto* meta = meta_.find_mut(meta_index(head_lin, id));
        const std::uint64_t pc = ceil_div(meta->token_count, cfg_.sparse.page_size);
        if (hs.capacity < hs.used_slots + pc) hs.capacity = hs.used_slots + pc;
        PartitionPages pp;
        pp.id = id;
        for (std::uint64_t p = 0; p < pc; ++p) {
            const PageId slot = alloc_device_slot(key);
            auto& entry = device_pages_.at_or_map(page_index(head_lin, slot));
            entry.partition_id = id;
            entry.timestamp = 0;
            entry.valid = true;
            pp.pages.push_back(slot);
        }
        hs.pinned_pages += pc;
        meta->pinned = true;
        meta->residency = Residency::DeviceResident;
        out.push_back(std::move(pp));
    }
    return out;
}

std::uint64_t MetadataStore::partition_count(const HeadKey& key) const {
    return head_state(key).partition_count;
}

std::uint64_t MetadataStore::partitioned_tokens(const HeadKey& key) const {
    return head_state(key).partitioned_tokens;
}

// -- footprint ----------------------------------------------------------------

FootprintReport MetadataStore::footprint() const {
    const std::uint64_t dev_entry = device_entry_bytes(cfg_.n_buckets);
    const std::uint32_t eps = cfg_.settings.entries_per_segment;

    FootprintReport r;
    r.tables[0] = {"meta_partition", "device", meta_.logical_entries() * kMetaEntryBytes,
                   std::uint64_t(meta_.mapped_segments()) * eps * kMetaEntryBytes};
    r.tables[1] = {"device_page_table", "device", device_pages_.logical_entries() * dev_entry,
                   std::uint64_t(device_pages_.mapped_segments()) * eps * dev_entry};
    r.tables[2] = {"partition_offset", "host", offsets_.logical_entries() * kOffsetEntryBytes,
                   std::uint64_t(offsets_.mapped_segments()) * eps * kOffsetEntryBytes};
    r.tables[3] = {"host_page_array", "host", host_pages_.logical_entries() * kHostPageIdBytes,
                   std::uint64_t(host_pages_.mapped_segments()) * eps * kHostPageIdBytes};

    for (const auto& t : r.tables) {
        if (t.tier == "device") {
            r.device_logical += t.logical_bytes;
            r.device_physical += t.physical_bytes;
        } else {
            r.host_logical += t.logical_bytes;
            r.host_physical += t.physical_bytes;
        }
    }
    return r;
}

std::string FootprintReport::to_csv() const {
    std::ostringstream os;
    os << "table,tier,logical_bytes,physical_bytes\n";
    for (const auto& t : tables)
        os << t.table << ',' << t.tier << ',' << t.logical_bytes << ',' << t.physical_bytes << '\n';
    os << "total,all," << logical_total() << ',' << physical_total() << '\n';
    return os.str();
}

}  // namespace kvtier
