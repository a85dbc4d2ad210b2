// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kvtier/config.hpp"
#include "kvtier/envelope.hpp"
#include "kvtier/errors.hpp"
#include "kvtier/metadata.hpp"
#include "kvtier/oracle.hpp"
#include "kvtier/pipeline.hpp"
#include "kvtier/replacement.hpp"
#include "kvtier/simulator.hpp"
#include "kvtier/workload.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitTraceError = 2;
constexpr int kExitInternalError = 3;

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw kvtier::Error("cannot open " + path + " for writing");
    out << text;
}

int cmd_validate(const std::string& config_path) {
    auto cfg = kvtier::load_config(config_path);
    auto violations = kvtier::validate_config(cfg.model, cfg.sparse, cfg.tiers);
    if (violations.empty()) {
        std::cout << "ok\n";
        return kExitOk;
    }
    for (const auto& v : violations) std::cout << v << "\n";
    return kExitConfigError;
}

int cmd_gen_trace(const std::string& config_path, std::uint64_t seed, std::uint64_t steps,
                  std::uint64_t context, const std::string& trace_out,
                  const std::string& arrivals_out) {
    auto cfg = kvtier::load_config(config_path);
    const std::uint64_t g = cfg.sparse.partition_granularity.value_or(cfg.sparse.page_size);
    const std::uint64_t ctx = context > 0 ? context : cfg.model.max_context;
    const std::uint64_t num_partitions = kvtier::ceil_div(ctx, g);

    if (!trace_out.empty()) {
        kvtier::workload::LocalityModel lm;
        lm.reuse_fraction = cfg.locality.reuse_fraction;
        lm.zipf_s = cfg.locality.zipf_s;
        lm.budget = cfg.sparse.budget_partitions(ctx);
        lm.seed = seed;
        auto trace = kvtier::workload::generate_multi_head_trace(
            lm, num_partitions, steps, static_cast<std::uint32_t>(cfg.model.num_layers),
            static_cast<std::uint32_t>(cfg.model.num_kv_heads));
        kvtier::workload::write_trace(trace, trace_out);
        std::cout << "trace: " << trace_out << " (" << trace.records.size() << " records)\n";
    }
    if (!arrivals_out.empty()) {
        kvtier::workload::ArrivalProcess proc;
        proc.rate = cfg.arrivals.rate;
        proc.count = cfg.arrivals.count;
        proc.seed = seed;
        proc.input_len_min = cfg.arrivals.input_len_min;
        proc.input_len_max = cfg.arrivals.input_len_max;
        proc.output_len_min = cfg.arrivals.output_len_min;
        proc.output_len_max = cfg.arrivals.output_len_max;
        auto arrivals = kvtier::workload::poisson_arrivals(proc);
        kvtier::workload::write_arrivals(arrivals, arrivals_out);
        std::cout << "arrivals: " << arrivals_out << " (" << arrivals.size() << " requests)\n";
    }
    return kExitOk;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const std::string& trace_path,
            const std::string& arrivals_path, const std::string& emit_steps,
            const std::string& evlog, const std::string& out_path, const std::string& mode) {
    auto cfg = kvtier::load_config(config_path);

    kvtier::sim::RunOptions opt;
    opt.seed = seed;
    opt.emit_steps_path = emit_steps;
    opt.eviction_log_path = evlog;
    if (mode == "no_cache")
        opt.cache_mode = kvtier::sim::CacheMode::NoCache;
    else if (mode == "mandatory_only")
        opt.cache_mode = kvtier::sim::CacheMode::MandatoryOnly;
    else if (mode == "buffered")
        opt.cache_mode = kvtier::sim::CacheMode::Buffered;
    else
        throw kvtier::InvalidConfigError({"cache mode: must be no_cache, mandatory_only or buffered"});
    if (!trace_path.empty()) opt.playback = kvtier::workload::read_trace(trace_path);

    std::vector<kvtier::workload::Arrival> arrivals;
    if (!arrivals_path.empty()) {
        arrivals = kvtier::workload::read_arrivals(arrivals_path);
    } else {
        kvtier::workload::ArrivalProcess proc;
        proc.rate = cfg.arrivals.rate;
        proc.count = cfg.arrivals.count;
        proc.seed = seed;
        proc.input_len_min = cfg.arrivals.input_len_min;
        proc.input_len_max = cfg.arrivals.input_len_max;
        proc.output_len_min = cfg.arrivals.output_len_min;
        proc.output_len_max = cfg.arrivals.output_len_max;
        arrivals = kvtier::workload::poisson_arrivals(proc);
    }

    kvtier::sim::Simulator sim(cfg, opt);
    auto report = sim.run(arrivals);
    write_text(out_path.empty() ? "-" : out_path, report.to_json() + "\n");
    return kExitOk;
}

int cmd_compare(const std::string& config_path, std::uint64_t seed, const std::string& sweep,
                std::uint64_t steps, const std::string& csv_path) {
    auto cfg = kvtier::load_config(config_path);
    std::vector<kvtier::sim::ComparePoint> points;
    if (sweep == "modes") {
        points = kvtier::sim::compare_cache_modes(cfg, seed, steps);
    } else if (sweep.rfind("ratios=", 0) == 0) {
        std::vector<double> ratios;
        std::string list = sweep.substr(7);
        std::size_t pos = 0;
        while (pos != std::string::npos) {
            const std::size_t comma = list.find(',', pos);
            ratios.push_back(std::stod(list.substr(pos, comma - pos)));
            pos = comma == std::string::npos ? comma : comma + 1;
        }
        points = kvtier::sim::compare_buffer_ratios(cfg, seed, ratios, steps);
    } else {
        throw kvtier::InvalidConfigError({"sweep: expected 'modes' or 'ratios=1,2,4,...'"});
    }
    write_text(csv_path, kvtier::sim::compare_csv(points));
    return kExitOk;
}

int cmd_envelope(const std::string& config_path, double miss_ratio, std::uint64_t batch_max,
                 const std::string& csv_path) {
    auto cfg = kvtier::load_config(config_path);
    if (cfg.sparse.summary_ratio < 0)
        throw kvtier::InvalidConfigError({"summary_ratio: required for the envelope"});
    std::ostringstream os;
    os << "B,qk_bytes,kv_bytes,hbm_s,pcie_s,mlp_s,tpot_s\n";
    os.precision(9);
    for (std::uint64_t b = 1; b <= batch_max; ++b) {
        kvtier::envelope::EnvelopeParams p;
        p.batch = b;
        p.num_layers = cfg.model.num_layers;
        p.num_kv_heads = cfg.model.num_kv_heads;
        p.head_dim = cfg.model.head_dim;
        p.bytes_per_element = cfg.model.bytes_per_element;
        p.context_tokens = cfg.model.max_context;
        p.summary_ratio = cfg.sparse.summary_ratio;
        const auto& budget = cfg.sparse.retrieval_budget;
        p.budget_fraction = budget.kind == kvtier::RetrievalBudget::Kind::Fraction
                                ? budget.fraction
                                : static_cast<double>(budget.tokens) /
                                      static_cast<double>(cfg.model.max_context);
        p.miss_ratio = miss_ratio;
        p.bw_hbm = cfg.tiers.bw_hbm;
        p.bw_pcie = cfg.tiers.bw_pcie;
        p.t_mlp = cfg.tiers.t_mlp;
        const auto t = kvtier::envelope::tpot(p);
        os << b << ',' << t.qk_score_bytes << ',' << t.kv_selected_bytes << ',' << t.hbm_s << ','
           << t.pcie_s << ',' << t.mlp_s << ',' << t.total_s << '\n';
    }
    write_text(csv_path, os.str());
    return kExitOk;
}

int cmd_footprint(const std::string& config_path, std::uint64_t requests, std::uint64_t warm_steps,
                  std::uint64_t seed, const std::string& csv_path) {
    auto cfg = kvtier::load_config(config_path);
    kvtier::StoreConfig scfg;
    scfg.model = cfg.model;
    scfg.sparse = cfg.sparse;
    scfg.settings = cfg.metadata;
    scfg.device_page_capacity = cfg.tiers.device_capacity / kvtier::page_bytes(cfg.model, cfg.sparse);
    scfg.host_page_capacity = cfg.host_page_capacity();
    scfg.n_buckets = cfg.replacement.n_buckets;
    kvtier::MetadataStore store(scfg);
    kvtier::ReplacementEngine engine(store, {cfg.replacement.n_buckets, kvtier::EvictionMode::BucketExact});

    // Register `requests` full-context requests and warm each head with
    // `warm_steps` disjoint selections so the device working set fills.
    const std::uint64_t budget = cfg.sparse.budget_partitions(cfg.model.max_context);
    for (std::uint64_t r = 1; r <= requests; ++r) {
        store.attach_request(r);
        auto spec = kvtier::pipeline::prefill_index(
            cfg.model.max_context, cfg.sparse,
            {cfg.pipeline.pinned_outlier_partitions, cfg.pipeline.pinned_window_partitions});
        for (std::uint32_t l = 0; l < cfg.model.num_layers; ++l) {
            for (std::uint32_t h = 0; h < cfg.model.num_kv_heads; ++h) {
                const kvtier::HeadKey key{r, l, h};
                store.register_partitions(key, spec);
                const std::uint64_t g = cfg.sparse.partition_granularity.value_or(cfg.sparse.page_size);
                const std::uint64_t pages_per_partition = kvtier::ceil_div(g, cfg.sparse.page_size);
                store.grow_buffer(key, store.pinned_device_pages(key) +
                                           warm_steps * budget * pages_per_partition);
                for (std::uint64_t s = 0; s < warm_steps; ++s) {
                    std::vector<kvtier::PartitionId> sel;
                    for (std::uint64_t i = 0; i < budget; ++i) {
                        const std::uint64_t id = (seed + s * budget + i) % store.partition_count(key);
                        sel.push_back(static_cast<kvtier::PartitionId>(id));
                    }
                    engine.replace(key, sel, s);
                }
            }
        }
    }
    write_text(csv_path, store.footprint().to_csv());
    return kExitOk;
}

int cmd_oracle(const std::string& trace_path, std::uint64_t capacity, std::uint32_t layer,
               std::uint32_t head, bool with_exhaustive, const std::string& evlog_path) {
    auto trace = kvtier::workload::read_trace(trace_path);
    auto projected = trace.project(layer, head, capacity);
    if (projected.steps.empty()) throw kvtier::TraceExhaustedError("no records for that layer/head");

    const auto lru = kvtier::oracle::lru_reference(projected);
    const auto opt = kvtier::oracle::belady(projected);
    std::cout << "accesses: " << projected.total_accesses() << "\n";
    std::cout << "lru_misses: " << lru.miss_count << "\n";
    std::cout << "belady_misses: " << opt << "\n";
    if (with_exhaustive) std::cout << "exhaustive_misses: " << kvtier::oracle::exhaustive_min(projected) << "\n";

    if (!evlog_path.empty()) {
        std::ofstream out(evlog_path);
        if (!out) throw kvtier::Error("cannot open " + evlog_path + " for writing");
        for (const auto& ev : lru.log) {
            nlohmann::ordered_json j;
            j["step"] = ev.step;
            j["layer"] = layer;
            j["head"] = head;
            j["evicted"] = ev.evicted;
            j["admitted"] = ev.admitted;
            out << j.dump() << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kvtier: hierarchical KV-cache management simulator for sparse-attention serving"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string trace_path;
    std::string arrivals_path;
    std::string emit_steps;
    std::string evlog;
    std::string out_path;
    std::string csv_path;

    auto* validate = app.add_subcommand("validate", "Validate a configuration file");
    validate->add_option("--config", config_path, "JSON configuration")->required();

    auto* gen = app.add_subcommand("gen-trace", "Generate a selection trace and arrival schedule");
    std::uint64_t gen_steps = 1000;
    std::uint64_t gen_context = 0;
    std::string gen_trace_out;
    std::string gen_arrivals_out;
    gen->add_option("--config", config_path)->required();
    gen->add_option("--seed", seed);
    gen->add_option("--steps", gen_steps, "Trace length in decoding steps");
    gen->add_option("--context", gen_context, "Prompt context for the trace (default max_context)");
    gen->add_option("--trace", gen_trace_out, "Trace output path");
    gen->add_option("--arrivals", gen_arrivals_out, "Arrival schedule output path (CSV)");

    auto* run = app.add_subcommand("run", "Run a serving simulation");
    std::string run_mode = "buffered";
    run->add_option("--config", config_path)->required();
    run->add_option("--seed", seed);
    run->add_option("--trace", trace_path, "Selection trace for playback (default: synthetic)");
    run->add_option("--arrivals", arrivals_path, "Arrival schedule CSV (default: Poisson from config)");
    run->add_option("--emit-steps", emit_steps, "Write line-delimited per-step metrics");
    run->add_option("--evlog", evlog, "Write line-delimited eviction log");
    run->add_option("--out", out_path, "Report JSON path (default stdout)");
    run->add_option("--mode", run_mode, "no_cache | mandatory_only | buffered");

    auto* cmp = app.add_subcommand("compare", "Sweep configurations against envelope and oracles");
    std::string sweep = "ratios=1,2,3,4,6,8";
    std::uint64_t cmp_steps = 10000;
    cmp->add_option("--config", config_path)->required();
    cmp->add_option("--seed", seed);
    cmp->add_option("--sweep", sweep, "'modes' or 'ratios=<list>'");
    cmp->add_option("--steps", cmp_steps, "Decode steps per point");
    cmp->add_option("--csv", csv_path, "CSV output path (default stdout)");

    auto* env = app.add_subcommand("envelope", "Print the ideal-envelope cost curve");
    double env_rho = 0.0;
    std::uint64_t env_bmax = 8;
    env->add_option("--config", config_path)->required();
    env->add_option("--rho", env_rho, "Miss ratio");
    env->add_option("--batch-max", env_bmax, "Sweep batch sizes 1..N");
    env->add_option("--csv", csv_path, "CSV output path (default stdout)");

    auto* fp = app.add_subcommand("footprint", "Report metadata footprint for a warmed store");
    std::uint64_t fp_requests = 1;
    std::uint64_t fp_warm = 6;
    fp->add_option("--config", config_path)->required();
    fp->add_option("--requests", fp_requests, "Concurrent requests to register");
    fp->add_option("--warm-steps", fp_warm, "Disjoint selection rounds per head");
    fp->add_option("--seed", seed);
    fp->add_option("--csv", csv_path, "CSV output path (default stdout)");

    auto* orc = app.add_subcommand("oracle", "Run reference replacement policies over a trace");
    std::uint64_t orc_capacity = 64;
    std::uint32_t orc_layer = 0;
    std::uint32_t orc_head = 0;
    bool orc_exhaustive = false;
    orc->add_option("--trace", trace_path)->required();
    orc->add_option("--capacity", orc_capacity, "Device pages for the projected head");
    orc->add_option("--layer", orc_layer);
    orc->add_option("--head", orc_head);
    orc->add_flag("--exhaustive", orc_exhaustive, "Also run the brute-force minimum");
    orc->add_option("--evlog", evlog, "Write the LRU eviction log");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(config_path);
        if (gen->parsed())
            return cmd_gen_trace(config_path, seed, gen_steps, gen_context, gen_trace_out, gen_arrivals_out);
        if (run->parsed())
            return cmd_run(config_path, seed, trace_path, arrivals_path, emit_steps, evlog, out_path, run_mode);
        if (cmp->parsed()) return cmd_compare(config_path, seed, sweep, cmp_steps, csv_path);
        if (env->parsed()) return cmd_envelope(config_path, env_rho, env_bmax, csv_path);
        if (fp->parsed()) return cmd_footprint(config_path, fp_requests, fp_warm, seed, csv_path);
        if (orc->parsed()) return cmd_oracle(trace_path, orc_capacity, orc_layer, orc_head, orc_exhaustive, evlog);
    } catch (const kvtier::InvalidConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const kvtier::ParseError& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kExitTraceError;
    } catch (const kvtier::TraceExhaustedError& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kExitTraceError;
    } catch (const kvtier::Error& e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return kExitInternalError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInternalError;
    }
    return kExitOk;
}
