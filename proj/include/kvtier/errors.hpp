// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvtier/types.hpp"

namespace kvtier {

/// Base class for every contract violation surfaced by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a configuration fails validation; carries one entry per
/// violated invariant, each prefixed with the offending field name.
struct InvalidConfigError : Error {
    std::vector<std::string> violations;

    explicit InvalidConfigError(std::vector<std::string> v)
        : Error("invalid configuration: " + join(v)), violations(std::move(v)) {}

  private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out;
        for (const auto& s : v) {
            if (!out.empty()) out += "; ";
            out += s;
        }
        return out;
    }
};

struct UnknownPartitionError : Error {
    PartitionId id;
    explicit UnknownPartitionError(PartitionId pid)
        : Error("unknown partition id " + std::to_string(pid)), id(pid) {}
};

/// Lookup of host pages for a pinned partition that was never offloaded.
struct NotOffloadedError : Error {
    PartitionId id;
    explicit NotOffloadedError(PartitionId pid)
        : Error("partition " + std::to_string(pid) + " is pinned and has no host pages"), id(pid) {}
};

struct OverlappingSpecError : Error {
    using Error::Error;
};

struct HostCapacityExceededError : Error {
    using Error::Error;
};

struct DeviceCapacityExceededError : Error {
    using Error::Error;
};

struct PoolExhaustedError : Error {
    using Error::Error;
};

struct DoubleFreeError : Error {
    using Error::Error;
};

/// Page demand exceeds what eviction can free; signals a scheduler contract
/// violation rather than a recoverable condition.
struct InsufficientBufferError : Error {
    using Error::Error;
};

struct InvalidSpecParamsError : Error {
    using Error::Error;
};

struct TraceExhaustedError : Error {
    using Error::Error;
};

struct ParseError : Error {
    std::size_t line;
    ParseError(std::size_t line_no, const std::string& reason)
        : Error("parse error at line " + std::to_string(line_no) + ": " + reason), line(line_no) {}
};

struct InstanceTooLargeError : Error {
    using Error::Error;
};

struct NothingReclaimableError : Error {
    using Error::Error;
};

struct BudgetTooLargeError : Error {
    using Error::Error;
};

}  // namespace kvtier
