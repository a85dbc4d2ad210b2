// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "kvtier/config.hpp"
#include "kvtier/errors.hpp"

using namespace kvtier;

namespace {

ModelShape qwen3_8b_shape() {
    return {36, 8, 128, 2, 131072};
}

SparseConfig shadowkv_sparse() {
    SparseConfig s;
    s.retrieval_budget = RetrievalBudget::from_fraction(0.0156);
    s.partition_granularity = 8;
    s.page_size = 8;
    s.summary_ratio = 0.125;
    s.update_interval = 256;
    return s;
}

TierParams a100_tiers() {
    TierParams t;
    t.device_capacity = 8ull << 30;
    t.host_capacity = 64ull << 30;
    t.bw_hbm = 2.0e12;
    t.bw_pcie = 32e9;
    t.t_mlp = 5e-3;
    t.per_transfer_latency = 1e-5;
    return t;
}

bool has_violation(const std::vector<std::string>& v, const std::string& field) {
    for (const auto& s : v)
        if (s.rfind(field, 0) == 0) return true;
    return false;
}

}  // namespace

TEST_SUITE_BEGIN("config");

TEST_CASE("shadowkv-style configuration is valid") {
    auto v = validate_config(qwen3_8b_shape(), shadowkv_sparse(), a100_tiers());
    CHECK(v.empty());
}

TEST_CASE("zero page size is rejected by name") {
    auto sparse = shadowkv_sparse();
    sparse.page_size = 0;
    auto v = validate_config(qwen3_8b_shape(), sparse, a100_tiers());
    CHECK(has_violation(v, "page_size"));
}

TEST_CASE("fractional budget below granularity at tiny context is rejected") {
    auto model = qwen3_8b_shape();
    model.max_context = 32;  // 0.0156 * 32 < 1 token
    auto v = validate_config(model, shadowkv_sparse(), a100_tiers());
    CHECK(has_violation(v, "retrieval_budget"));
}

TEST_CASE("every independent violation is reported") {
    ModelShape model{0, 8, 128, 3, 131072};
    auto sparse = shadowkv_sparse();
    sparse.page_size = 0;
    TierParams tiers = a100_tiers();
    tiers.device_capacity = 0;
    auto v = validate_config(model, sparse, tiers);
    CHECK(has_violation(v, "num_layers"));
    CHECK(has_violation(v, "bytes_per_element"));
    CHECK(has_violation(v, "page_size"));
    CHECK(has_violation(v, "device_capacity"));
}

TEST_CASE("validation is idempotent and pure") {
    auto model = qwen3_8b_shape();
    auto sparse = shadowkv_sparse();
    auto tiers = a100_tiers();
    auto v1 = validate_config(model, sparse, tiers);
    auto v2 = validate_config(model, sparse, tiers);
    CHECK(v1 == v2);
}

TEST_CASE("fractional budgets round up to whole partitions") {
    auto sparse = shadowkv_sparse();
    // 0.0156 * 32768 = 511.18 tokens -> 64 partitions of 8 tokens
    CHECK(sparse.budget_partitions(32768) == 64);
    CHECK(sparse.budget_partitions(131072) == 256);
}

TEST_CASE("json round trip preserves the configuration") {
    const char* text = R"({
      "model": {"num_layers": 36, "num_kv_heads": 8, "head_dim": 128,
                "bytes_per_element": 2, "max_context": 131072},
      "sparse": {"retrieval_budget": {"fraction": 0.0156}, "partition_granularity": 8,
                 "page_size": 8, "summary_ratio": 0.125, "update_interval": 256},
      "tiers": {"device_capacity": 8.0e9, "host_capacity": 6.4e10,
                "bw_hbm": 2.0e12, "bw_pcie": 3.2e10, "t_mlp": 5e-3,
                "per_transfer_latency": 1e-5}
    })";
    auto cfg = parse_config(text);
    CHECK(cfg.model.num_layers == 36);
    CHECK(cfg.sparse.page_size == 8);
    CHECK(cfg.tiers.device_capacity == 8000000000ull);
    auto cfg2 = parse_config(dump_config(cfg));
    CHECK(cfg2.model.max_context == cfg.model.max_context);
    CHECK(cfg2.sparse.retrieval_budget.fraction == doctest::Approx(0.0156));
    CHECK(cfg2.tiers.bw_pcie == cfg.tiers.bw_pcie);
}

TEST_CASE("variable granularity parses from the string form") {
    const char* text = R"({
      "model": {"num_layers": 1, "num_kv_heads": 1, "head_dim": 128,
                "bytes_per_element": 2, "max_context": 32768},
      "sparse": {"retrieval_budget": {"fraction": 0.018}, "partition_granularity": "variable",
                 "page_size": 8, "summary_ratio": 0.1},
      "tiers": {"device_capacity": 1e9, "host_capacity": 1e10,
                "bw_hbm": 2e12, "bw_pcie": 3.2e10}
    })";
    auto cfg = parse_config(text);
    CHECK(cfg.sparse.variable_granularity());
}

TEST_CASE("malformed config throws InvalidConfigError") {
    CHECK_THROWS_AS(parse_config("{"), InvalidConfigError);
    CHECK_THROWS_AS(parse_config("{}"), InvalidConfigError);
}

TEST_SUITE_END();
