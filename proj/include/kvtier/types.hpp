// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>

namespace kvtier {

using RequestId = std::uint64_t;
using PartitionId = std::uint32_t;
// Per-head page index within one tier's arena (device slots or host pages).
using PageId = std::uint32_t;
using StepIndex = std::uint64_t;

constexpr StepIndex kNoStep = ~StepIndex(0);

/// One independently managed KV stream: (request, layer, head). All
/// placement, replacement and retrieval state is partitioned by this key.
struct HeadKey {
    RequestId request_id = 0;
    std::uint32_t layer = 0;
    std::uint32_t head = 0;

    friend bool operator==(const HeadKey&, const HeadKey&) = default;
    friend auto operator<=>(const HeadKey&, const HeadKey&) = default;
};

struct HeadKeyHash {
    std::size_t operator()(const HeadKey& k) const noexcept {
        std::uint64_t h = k.request_id * 0x9e3779b97f4a7c15ULL;
        h ^= ((std::uint64_t(k.layer) << 32) | k.head) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

enum class Residency : std::uint8_t { DeviceResident, HostOnly };

/// Half-open token interval [begin, end).
struct TokenRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    std::uint64_t size() const { return end - begin; }
    friend bool operator==(const TokenRange&, const TokenRange&) = default;
};

constexpr std::uint64_t ceil_div(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0 : (num + den - 1) / den;
}

}  // namespace kvtier
