// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kvtier/errors.hpp"

namespace kvtier {

std::vector<std::string> validate_config(const ModelShape& model, const SparseConfig& sparse,
                                         const TierParams& tiers) {
    std::vector<std::string> v;

    if (model.num_layers < 1) v.push_back("num_layers: must be >= 1");
    if (model.num_kv_heads < 1) v.push_back("num_kv_heads: must be >= 1");
    if (model.head_dim < 1) v.push_back("head_dim: must be >= 1");
    if (model.bytes_per_element != 1 && model.bytes_per_element != 2 && model.bytes_per_element != 4)
        v.push_back("bytes_per_element: must be one of {1, 2, 4}");
    if (model.max_context < 1) v.push_back("max_context: must be >= 1");

    if (sparse.page_size < 1) v.push_back("page_size: must be >= 1");
    if (sparse.partition_granularity.has_value() && *sparse.partition_granularity < 1)
        v.push_back("partition_granularity: must be >= 1 when fixed");
    if (sparse.summary_ratio < 0.0 || sparse.summary_ratio >= 1.0)
        v.push_back("summary_ratio: must lie in [0, 1)");
    if (sparse.update_interval < 1) v.push_back("update_interval: must be >= 1");

    switch (sparse.retrieval_budget.kind) {
        case RetrievalBudget::Kind::Fraction: {
            const double f = sparse.retrieval_budget.fraction;
            if (!(f > 0.0 && f <= 1.0)) v.push_back("retrieval_budget: fraction must lie in (0, 1]");
            break;
        }
        case RetrievalBudget::Kind::Tokens:
            if (sparse.retrieval_budget.tokens < 1)
                v.push_back("retrieval_budget: fixed token budget must be >= 1");
            break;
    }

    // Cross-field bounds evaluated only when the participating fields are
    // individually sane, so one root cause yields one violation.
    if (model.max_context >= 1 && sparse.page_size >= 1) {
        const std::uint64_t budget_toks = sparse.retrieval_budget.budget_tokens(model.max_context);
        if (budget_toks < 1) v.push_back("retrieval_budget: budget < 1 token at max_context");
        const std::uint64_t g = sparse.partition_granularity.value_or(sparse.page_size);
        if (g >= 1 && budget_toks < g)
            v.push_back("retrieval_budget: budget < granularity (budget tokens " +
                        std::to_string(budget_toks) + " < " + std::to_string(g) + ")");
    }

    if (tiers.device_capacity == 0) v.push_back("device_capacity: must be > 0");
    if (tiers.host_capacity == 0) v.push_back("host_capacity: must be > 0");
    if (!(tiers.bw_pcie > 0.0)) v.push_back("bw_pcie: must be > 0");
    if (!(tiers.bw_hbm > tiers.bw_pcie)) v.push_back("bw_hbm: must exceed bw_pcie");
    if (tiers.t_mlp < 0.0) v.push_back("t_mlp: must be >= 0");
    if (tiers.per_transfer_latency < 0.0) v.push_back("per_transfer_latency: must be >= 0");

    return v;
}

void validate_config_or_throw(const ModelShape& model, const SparseConfig& sparse,
                              const TierParams& tiers) {
    auto v = validate_config(model, sparse, tiers);
    if (!v.empty()) throw InvalidConfigError(std::move(v));
}

std::uint64_t SimConfig::device_page_budget() const {
    if (scheduler.device_page_budget > 0) return scheduler.device_page_budget;
    return tiers.device_capacity / page_bytes(model, sparse);
}

std::uint64_t SimConfig::host_page_capacity() const {
    return tiers.host_capacity / page_bytes(model, sparse);
}

namespace {

using nlohmann::json;

/// Integral byte/count fields accept either integers or doubles (capacities
/// are commonly written as `8.0e9` in configs).
std::uint64_t as_u64(const json& j, const char* field) {
    const json& v = j.at(field);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        auto n = v.get<std::int64_t>();
        if (n < 0) throw InvalidConfigError({std::string(field) + ": must be non-negative"});
        return static_cast<std::uint64_t>(n);
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d < 0.0) throw InvalidConfigError({std::string(field) + ": must be non-negative"});
        return static_cast<std::uint64_t>(d);
    }
    throw InvalidConfigError({std::string(field) + ": expected a number"});
}

ModelShape parse_model(const json& j) {
    ModelShape m;
    m.num_layers = as_u64(j, "num_layers");
    m.num_kv_heads = as_u64(j, "num_kv_heads");
    m.head_dim = as_u64(j, "head_dim");
    m.bytes_per_element = as_u64(j, "bytes_per_element");
    m.max_context = as_u64(j, "max_context");
    return m;
}

SparseConfig parse_sparse(const json& j) {
    SparseConfig s;
    const json& b = j.at("retrieval_budget");
    if (b.is_object() && b.contains("fraction")) {
        s.retrieval_budget = RetrievalBudget::from_fraction(b.at("fraction").get<double>());
    } else if (b.is_object() && b.contains("tokens")) {
        s.retrieval_budget = RetrievalBudget::from_tokens(as_u64(b, "tokens"));
    } else {
        throw InvalidConfigError({"retrieval_budget: expected {\"fraction\": x} or {\"tokens\": n}"});
    }
    const json& g = j.at("partition_granularity");
    if (g.is_string() && g.get<std::string>() == "variable") {
        s.partition_granularity = std::nullopt;
    } else {
        s.partition_granularity = as_u64(j, "partition_granularity");
    }
    s.page_size = as_u64(j, "page_size");
    if (!j.contains("summary_ratio"))
        throw InvalidConfigError({"summary_ratio: required, never defaulted"});
    s.summary_ratio = j.at("summary_ratio").get<double>();
    s.update_interval = j.contains("update_interval") ? as_u64(j, "update_interval") : 256;
    return s;
}

TierParams parse_tiers(const json& j) {
    TierParams t;
    t.device_capacity = as_u64(j, "device_capacity");
    t.host_capacity = as_u64(j, "host_capacity");
    t.bw_hbm = j.at("bw_hbm").get<double>();
    t.bw_pcie = j.at("bw_pcie").get<double>();
    t.t_mlp = j.value("t_mlp", 0.0);
    t.per_transfer_latency = j.value("per_transfer_latency", 0.0);
    return t;
}

}  // namespace

SimConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidConfigError({std::string("config: ") + e.what()});
    }

    SimConfig cfg;
    try {
        cfg.model = parse_model(j.at("model"));
        cfg.sparse = parse_sparse(j.at("sparse"));
        cfg.tiers = parse_tiers(j.at("tiers"));

        if (j.contains("replacement")) {
            const json& r = j["replacement"];
            cfg.replacement.n_buckets = static_cast<std::uint32_t>(r.value("n_buckets", 64));
            const std::string mode = r.value("eviction_mode", "bucket_exact");
            if (mode == "bucket_whole") {
                cfg.replacement.bucket_whole = true;
            } else if (mode != "bucket_exact") {
                throw InvalidConfigError({"eviction_mode: must be bucket_exact or bucket_whole"});
            }
        }
        if (j.contains("scheduler")) {
            const json& s = j["scheduler"];
            cfg.scheduler.min_buffer_ratio = s.value("min_buffer_ratio", 5.0);
            if (s.contains("device_page_budget")) cfg.scheduler.device_page_budget = as_u64(s, "device_page_budget");
        }
        if (j.contains("metadata")) {
            const json& m = j["metadata"];
            if (m.contains("max_batch_slots")) cfg.metadata.max_batch_slots = as_u64(m, "max_batch_slots");
            cfg.metadata.entries_per_segment = static_cast<std::uint32_t>(m.value("entries_per_segment", 256));
        }
        if (j.contains("pipeline")) {
            const json& p = j["pipeline"];
            if (p.contains("pinned_outlier_partitions"))
                cfg.pipeline.pinned_outlier_partitions = as_u64(p, "pinned_outlier_partitions");
            if (p.contains("pinned_window_partitions"))
                cfg.pipeline.pinned_window_partitions = as_u64(p, "pinned_window_partitions");
        }
        if (j.contains("workload")) {
            const json& w = j["workload"];
            if (w.contains("locality")) {
                cfg.locality.reuse_fraction = w["locality"].value("reuse_fraction", 0.7);
                cfg.locality.zipf_s = w["locality"].value("zipf_s", 0.8);
            }
            if (w.contains("arrivals")) {
                const json& a = w["arrivals"];
                cfg.arrivals.rate = a.value("rate", 1.0);
                if (a.contains("count")) cfg.arrivals.count = as_u64(a, "count");
                if (a.contains("input_len")) {
                    cfg.arrivals.input_len_min = a["input_len"].at(0).get<std::uint64_t>();
                    cfg.arrivals.input_len_max = a["input_len"].at(1).get<std::uint64_t>();
                }
                if (a.contains("output_len")) {
                    cfg.arrivals.output_len_min = a["output_len"].at(0).get<std::uint64_t>();
                    cfg.arrivals.output_len_max = a["output_len"].at(1).get<std::uint64_t>();
                }
            }
        }
    } catch (const json::exception& e) {
        throw InvalidConfigError({std::string("config: ") + e.what()});
    }

    if (cfg.replacement.n_buckets < 2) throw InvalidConfigError({"n_buckets: must be >= 2"});
    if (cfg.scheduler.min_buffer_ratio < 1.0)
        throw InvalidConfigError({"min_buffer_ratio: must be >= 1"});
    if (cfg.metadata.max_batch_slots < 1)
        throw InvalidConfigError({"max_batch_slots: must be >= 1"});
    if (cfg.metadata.entries_per_segment < 1)
        throw InvalidConfigError({"entries_per_segment: must be >= 1"});
    validate_config_or_throw(cfg.model, cfg.sparse, cfg.tiers);
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfigError({"config: cannot open " + path});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const SimConfig& cfg) {
    nlohmann::ordered_json j;
    j["model"] = {{"num_layers", cfg.model.num_layers},
                  {"num_kv_heads", cfg.model.num_kv_heads},
                  {"head_dim", cfg.model.head_dim},
                  {"bytes_per_element", cfg.model.bytes_per_element},
                  {"max_context", cfg.model.max_context}};
    nlohmann::ordered_json budget;
    if (cfg.sparse.retrieval_budget.kind == RetrievalBudget::Kind::Fraction)
        budget = {{"fraction", cfg.sparse.retrieval_budget.fraction}};
    else
        budget = {{"tokens", cfg.sparse.retrieval_budget.tokens}};
    nlohmann::ordered_json sparse = {{"retrieval_budget", budget},
                                     {"page_size", cfg.sparse.page_size},
                                     {"summary_ratio", cfg.sparse.summary_ratio},
                                     {"update_interval", cfg.sparse.update_interval}};
    if (cfg.sparse.partition_granularity.has_value())
        sparse["partition_granularity"] = *cfg.sparse.partition_granularity;
    else
        sparse["partition_granularity"] = "variable";
    j["sparse"] = sparse;
    j["tiers"] = {{"device_capacity", cfg.tiers.device_capacity},
                  {"host_capacity", cfg.tiers.host_capacity},
                  {"bw_hbm", cfg.tiers.bw_hbm},
                  {"bw_pcie", cfg.tiers.bw_pcie},
                  {"t_mlp", cfg.tiers.t_mlp},
                  {"per_transfer_latency", cfg.tiers.per_transfer_latency}};
    j["replacement"] = {{"n_buckets", cfg.replacement.n_buckets},
                        {"eviction_mode", cfg.replacement.bucket_whole ? "bucket_whole" : "bucket_exact"}};
    j["scheduler"] = {{"min_buffer_ratio", cfg.scheduler.min_buffer_ratio},
                      {"device_page_budget", cfg.scheduler.device_page_budget}};
    j["metadata"] = {{"max_batch_slots", cfg.metadata.max_batch_slots},
                     {"entries_per_segment", cfg.metadata.entries_per_segment}};
    j["pipeline"] = {{"pinned_outlier_partitions", cfg.pipeline.pinned_outlier_partitions},
                     {"pinned_window_partitions", cfg.pipeline.pinned_window_partitions}};
    j["workload"] = {{"locality", {{"reuse_fraction", cfg.locality.reuse_fraction}, {"zipf_s", cfg.locality.zipf_s}}},
                     {"arrivals",
                      {{"rate", cfg.arrivals.rate},
                       {"count", cfg.arrivals.count},
                       {"input_len", {cfg.arrivals.input_len_min, cfg.arrivals.input_len_max}},
                       {"output_len", {cfg.arrivals.output_len_min, cfg.arrivals.output_len_max}}}}};
    return j.dump(2);
}

}  // namespace kvtier
