// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/simulator.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "kvtier/envelope.hpp"
#include "kvtier/errors.hpp"
#include "kvtier/oracle.hpp"
#include "kvtier/replacement.hpp"
#include "kvtier/rng.hpp"

namespace kvtier::sim {

namespace {

const char* mode_name(CacheMode m) {
    switch (m) {
        case CacheMode::NoCache: return "no_cache";
        case CacheMode::MandatoryOnly: return "mandatory_only";
        case CacheMode::Buffered: return "buffered";
    }
    return "?";
}

struct SimRequest {
    enum class Status { Pending, Queued, Active, Done };
    pipeline::RequestState ps;
    Status status = Status::Pending;
    double admitted_s = 0.0;
    double completed_s = 0.0;
    double first_step_end_s = -1.0;
    double busy_s = 0.0;
    std::uint32_t preemptions = 0;
};

nlohmann::ordered_json footprint_json(const FootprintReport& fp) {
    nlohmann::ordered_json tables = nlohmann::ordered_json::array();
    for (const auto& t : fp.tables) {
        tables.push_back({{"table", t.table},
                          {"tier", t.tier},
                          {"logical_bytes", t.logical_bytes},
                          {"physical_bytes", t.physical_bytes}});
    }
    return {{"tables", tables},
            {"device_logical_bytes", fp.device_logical},
            {"device_physical_bytes", fp.device_physical},
            {"host_logical_bytes", fp.host_logical},
            {"host_physical_bytes", fp.host_physical}};
}

}  // namespace

Simulator::Simulator(SimConfig cfg, RunOptions opt) : cfg_(std::move(cfg)), opt_(std::move(opt)) {
    validate_config_or_throw(cfg_.model, cfg_.sparse, cfg_.tiers);
}

RunReport Simulator::run(const std::vector<workload::Arrival>& arrivals_in) {
    std::vector<workload::Arrival> arrivals = arrivals_in;
    std::stable_sort(arrivals.begin(), arrivals.end(),
                     [](const auto& a, const auto& b) { return a.time_s < b.time_s; });

    StoreConfig scfg;
    scfg.model = cfg_.model;
    scfg.sparse = cfg_.sparse;
    scfg.settings = cfg_.metadata;
    scfg.device_page_capacity = cfg_.tiers.device_capacity / page_bytes(cfg_.model, cfg_.sparse);
    scfg.host_page_capacity = cfg_.host_page_capacity();
    scfg.n_buckets = cfg_.replacement.n_buckets;
    MetadataStore store(scfg);

    ReplacementEngine engine(store, {cfg_.replacement.n_buckets,
                                     cfg_.replacement.bucket_whole ? EvictionMode::BucketWhole
                                                                   : EvictionMode::BucketExact});

    std::unique_ptr<pipeline::Selector> selector;
    if (opt_.playback.has_value()) {
        selector = std::make_unique<pipeline::PlaybackSelector>(*opt_.playback);
    } else {
        selector = std::make_unique<pipeline::SyntheticSelector>(
            cfg_.locality, opt_.seed, [&store](const HeadKey& key, PartitionId id) {
                return store.lookup_one(key, id).token_count;
            });
    }
    pipeline::Pipeline pipe(cfg_.model, cfg_.sparse, cfg_.tiers, store, engine, *selector);
    sched::Scheduler scheduler({cfg_.scheduler.min_buffer_ratio, cfg_.device_page_budget()});

    std::ofstream emit_steps;
    if (!opt_.emit_steps_path.empty()) {
        emit_steps.open(opt_.emit_steps_path);
        if (!emit_steps) throw Error("cannot open " + opt_.emit_steps_path + " for writing");
    }
    std::ofstream evlog;
    if (!opt_.eviction_log_path.empty()) {
        evlog.open(opt_.eviction_log_path);
        if (!evlog) throw Error("cannot open " + opt_.eviction_log_path + " for writing");
        pipe.set_eviction_log([&evlog](StepIndex step, const HeadKey& key,
                                       const std::vector<PartitionId>& evicted,
                                       const std::vector<PartitionId>& admitted) {
            nlohmann::ordered_json j;
            j["step"] = step;
            j["request"] = key.request_id;
            j["layer"] = key.layer;
            j["head"] = key.head;
            j["evicted"] = evicted;
            j["admitted"] = admitted;
            evlog << j.dump() << "\n";
        });
    }

    std::vector<SimRequest> reqs(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        reqs[i].ps.id = static_cast<RequestId>(i + 1);
        reqs[i].ps.prompt_tokens = arrivals[i].input_tokens;
        reqs[i].ps.output_target = arrivals[i].output_tokens;
        reqs[i].ps.arrival_s = arrivals[i].time_s;
        reqs[i].ps.index_params = {cfg_.pipeline.pinned_outlier_partitions,
                                   cfg_.pipeline.pinned_window_partitions};
    }
    auto req_of = [&reqs](RequestId id) -> SimRequest& { return reqs[id - 1]; };

    const std::uint64_t heads = cfg_.model.heads_per_request();
    auto head_keys = [&](const SimRequest& r) {
        std::vector<HeadKey> keys;
        keys.reserve(heads);
        for (std::uint32_t l = 0; l < cfg_.model.num_layers; ++l)
            for (std::uint32_t h = 0; h < cfg_.model.num_kv_heads; ++h)
                keys.push_back({r.ps.id, l, h});
        return keys;
    };

    std::deque<RequestId> queue;
    std::vector<RequestId> actives;  // admission order; back() is the youngest
    std::size_t next_arrival = 0;
    std::uint64_t completed = 0;
    double clock = 0.0;
    StepIndex step = 0;

    RunReport report;
    report.seed = opt_.seed;
    report.cache_mode = mode_name(opt_.cache_mode);
    report.config_echo = dump_config(cfg_);
    double batch_size_accum = 0.0;

    auto preempt = [&](RequestId id, std::vector<nlohmann::ordered_json>* events) {
        SimRequest& r = req_of(id);
        scheduler.release(id);
        for (const HeadKey& key : head_keys(r)) {
            store.shrink_buffer(key, store.pinned_device_pages(key), {});
        }
        r.status = SimRequest::Status::Queued;
        ++r.preemptions;
        ++report.preemptions;
        actives.erase(std::find(actives.begin(), actives.end(), id));
        queue.push_front(id);
        if (events)
            events->push_back({{"event", "preempt"}, {"request", id}});
    };

    while (completed < reqs.size()) {
        std::vector<nlohmann::ordered_json> events;

        // Arrivals: attach, index, offload; then wait in the queue. When all
        // batch slots are attached, later arrivals stay pending until a
        // completion frees one (attachment is FIFO too).
        while (next_arrival < arrivals.size() && arrivals[next_arrival].time_s <= clock &&
               store.attached_requests() < cfg_.metadata.max_batch_slots) {
            SimRequest& r = reqs[next_arrival];
            store.attach_request(r.ps.id);
            r.ps.spec = pipeline::prefill_index(r.ps.prompt_tokens, cfg_.sparse, r.ps.index_params);
            pipe.offload(r.ps);
            r.status = SimRequest::Status::Queued;
            queue.push_back(r.ps.id);
            ++next_arrival;
        }

        // Admission, FIFO: stop at the first request that does not fit.
        while (!queue.empty()) {
            SimRequest& r = req_of(queue.front());
            const std::uint64_t mandatory = pipe.estimate_mandatory_pages(r.ps);
            bool admitted = false;
            if (opt_.cache_mode == CacheMode::Buffered) {
                admitted = scheduler.try_admit(r.ps.id, mandatory, r.ps.context_len()) ==
                           sched::AdmitOutcome::Admitted;
                if (admitted)
                    events.push_back({{"event", "admit"},
                                      {"request", r.ps.id},
                                      {"granted_pages", scheduler.grant(r.ps.id).total()}});
            } else {
                // Mode baselines bypass grants; admit within physical capacity.
                const std::uint64_t free_phys =
                    scfg.device_page_capacity - store.total_device_pages_used();
                admitted = mandatory <= free_phys;
            }
            if (!admitted) {
                events.push_back({{"event", "queue"}, {"request", r.ps.id}});
                break;
            }
            r.status = SimRequest::Status::Active;
            r.admitted_s = clock;
            actives.push_back(r.ps.id);
            queue.pop_front();
        }

        if (actives.empty()) {
            if (next_arrival < arrivals.size()) {
                clock = std::max(clock, arrivals[next_arrival].time_s);
                continue;
            }
            if (!queue.empty())
                throw InsufficientBufferError(
                    "request " + std::to_string(queue.front()) +
                    " can never be admitted within the device page budget");
            break;  // nothing left
        }

        // Phase 1: selections for every active request.
        std::map<RequestId, std::vector<std::vector<PartitionId>>> selections;
        std::map<RequestId, std::uint64_t> mandatory;
        for (RequestId id : actives) {
            SimRequest& r = req_of(id);
            selections[id] = pipe.select_request(r.ps, step);
            mandatory[id] = pipe.mandatory_pages(r.ps, selections[id]);
            scheduler.record_seq_len(id, r.ps.context_len());
        }

        // Phase 2: buffer elasticity. Reclaims shrink victims' heads with the
        // victims' own current-step selections protected.
        auto protect_set_of = [&](RequestId id, std::size_t head_idx) {
            const auto& sel = selections[id][head_idx];
            return std::unordered_set<PartitionId>(sel.begin(), sel.end());
        };
        auto apply_head_capacities = [&](RequestId id, const sched::BufferGrant& grant) {
            SimRequest& r = req_of(id);
            const auto keys = head_keys(r);
            const auto& sels = selections[id];
            std::uint64_t buff_base = grant.buffering_pages / heads;
            std::uint64_t buff_rem = grant.buffering_pages % heads;
            for (std::size_t i = 0; i < keys.size(); ++i) {
                std::uint64_t mand_h = store.pinned_device_pages(keys[i]);
                for (PartitionId pid : sels[i]) {
                    const MetaView m = store.lookup_one(keys[i], pid);
                    if (!m.pinned) mand_h += m.page_count;
                }
                const std::uint64_t cap = mand_h + buff_base + (i < buff_rem ? 1 : 0);
                if (cap >= store.buffer_capacity(keys[i]))
                    store.grow_buffer(keys[i], cap);
                else
                    store.shrink_buffer(keys[i], cap, protect_set_of(id, i));
            }
        };
        auto apply_reclaims = [&](const std::vector<sched::ReclaimShare>& plan) {
            for (const auto& share : plan) {
                ++report.reclaim_events;
                events.push_back(
                    {{"event", "reclaim"}, {"request", share.request}, {"pages", share.pages}});
                apply_head_capacities(share.request, scheduler.grant(share.request));
            }
        };

        const std::vector<RequestId> step_order = actives;
        for (RequestId id : step_order) {
            if (req_of(id).status != SimRequest::Status::Active) continue;
            if (opt_.cache_mode != CacheMode::Buffered) {
                apply_head_capacities(id, {mandatory[id], 0});
                continue;
            }
            for (;;) {
                auto action = scheduler.buffer_target(id, mandatory[id]);
                if (!action.preempt) {
                    apply_reclaims(action.reclaims);
                    apply_head_capacities(id, action.grant);
                    break;
                }
                // Mandatory unmet even after full reclamation: the youngest
                // active request yields and re-queues.
                const RequestId victim = actives.back();
                preempt(victim, &events);
                if (victim == id) break;
                if (actives.empty())
                    throw InsufficientBufferError("single request exceeds the device page budget");
            }
        }

        if (opt_.cache_mode == CacheMode::Buffered &&
            scheduler.granted_total() > cfg_.device_page_budget())
            throw Error("invariant violated: granted pages exceed the device page budget");

        // Phase 3: retrieval and cost accounting.
        std::vector<pipeline::RequestStepMetrics> rows;
        std::vector<RequestId> stepped;
        for (RequestId id : step_order) {
            SimRequest& r = req_of(id);
            if (r.status != SimRequest::Status::Active) continue;
            rows.push_back(pipe.retrieve_request(r.ps, step, selections[id]));
            stepped.push_back(id);
        }
        pipeline::StepMetrics sm = pipe.finalize_step(step, std::move(rows));
        clock += sm.step_time_s;

        if (opt_.cache_mode == CacheMode::NoCache) {
            // Baseline without GPU caching: nothing survives the step.
            for (RequestId id : stepped)
                for (const HeadKey& key : head_keys(req_of(id)))
                    store.shrink_buffer(key, store.pinned_device_pages(key), {});
        }

        for (const auto& row : sm.per_request) {
            report.selected_partitions += row.selected;
            report.hit_partitions += row.hits;
            report.missed_partitions += row.misses;
        }
        report.transferred_bytes += sm.transferred_bytes;
        batch_size_accum += static_cast<double>(stepped.size());
        ++report.decode_steps;

        for (RequestId id : stepped) {
            SimRequest& r = req_of(id);
            r.busy_s += sm.step_time_s;
            if (r.first_step_end_s < 0) r.first_step_end_s = clock;
            pipe.append_tokens(r.ps, 1, step);
            report.total_output_tokens += 1;
        }

        if (emit_steps.is_open()) {
            nlohmann::ordered_json j;
            j["step"] = step;
            j["time_s"] = clock;
            j["batch"] = stepped.size();
            j["step_time_s"] = sm.step_time_s;
            j["hbm_bytes"] = sm.hbm_bytes;
            j["transferred_bytes"] = sm.transferred_bytes;
            j["transfer_plans"] = sm.transfer_plans;
            j["realized_miss_ratio"] = sm.realized_miss_ratio;
            j["events"] = events;
            emit_steps << j.dump() << "\n";
        }

        // Completions release grants, device pages and metadata segments.
        for (RequestId id : stepped) {
            SimRequest& r = req_of(id);
            if (!r.ps.finished()) continue;
            r.status = SimRequest::Status::Done;
            r.completed_s = clock;
            if (opt_.cache_mode == CacheMode::Buffered) scheduler.release(id);
            report.footprint = store.footprint();  // snapshot while state is live
            store.release_request(id);
            pipe.forget_request(id);
            actives.erase(std::find(actives.begin(), actives.end(), id));
            ++completed;
        }
        ++step;
    }

    report.simulated_seconds = clock;
    report.throughput_tokens_per_s =
        clock > 0 ? static_cast<double>(report.total_output_tokens) / clock : 0.0;
    const std::uint64_t classified = report.hit_partitions + report.missed_partitions;
    report.hit_ratio =
        classified == 0 ? 0.0 : static_cast<double>(report.hit_partitions) / static_cast<double>(classified);
    report.mean_batch_size =
        report.decode_steps == 0 ? 0.0 : batch_size_accum / static_cast<double>(report.decode_steps);

    double ttft_sum = 0.0;
    double tpot_sum = 0.0;
    std::uint64_t finished = 0;
    for (const auto& r : reqs) {
        if (r.status != SimRequest::Status::Done) continue;
        RequestReport rr;
        rr.id = r.ps.id;
        rr.arrival_s = r.ps.arrival_s;
        rr.admitted_s = r.admitted_s;
        rr.completed_s = r.completed_s;
        rr.ttft_proxy_s = r.first_step_end_s - r.ps.arrival_s;
        rr.mean_tpot_s = r.ps.generated == 0 ? 0.0 : r.busy_s / static_cast<double>(r.ps.generated);
        rr.output_tokens = r.ps.generated;
        rr.preemptions = r.preemptions;
        report.requests.push_back(rr);
        ttft_sum += rr.ttft_proxy_s;
        tpot_sum += rr.mean_tpot_s;
        ++finished;
    }
    if (finished > 0) {
        report.mean_ttft_proxy_s = ttft_sum / static_cast<double>(finished);
        report.mean_tpot_s = tpot_sum / static_cast<double>(finished);
    }
    return report;
}

std::string RunReport::to_json() const {
    nlohmann::ordered_json j;
    j["seed"] = seed;
    j["cache_mode"] = cache_mode;
    j["config"] = nlohmann::ordered_json::parse(config_echo);
    j["totals"] = {{"output_tokens", total_output_tokens},
                   {"simulated_seconds", simulated_seconds},
                   {"throughput_tokens_per_s", throughput_tokens_per_s},
                   {"mean_ttft_proxy_s", mean_ttft_proxy_s},
                   {"mean_tpot_s", mean_tpot_s},
                   {"mean_batch_size", mean_batch_size},
                   {"hit_ratio", hit_ratio},
                   {"selected_partitions", selected_partitions},
                   {"hit_partitions", hit_partitions},
                   {"missed_partitions", missed_partitions},
                   {"transferred_bytes", transferred_bytes},
                   {"decode_steps", decode_steps},
                   {"preemptions", preemptions},
                   {"reclaim_events", reclaim_events}};
    // TTFT is a queueing proxy: prefill compute is not modeled.
    j["metric_notes"] = {{"ttft", "proxy: queueing delay + one scheduling quantum"}};
    j["footprint"] = footprint_json(footprint);
    nlohmann::ordered_json rs = nlohmann::ordered_json::array();
    for (const auto& r : requests) {
        rs.push_back({{"id", r.id},
                      {"arrival_s", r.arrival_s},
                      {"admitted_s", r.admitted_s},
                      {"completed_s", r.completed_s},
                      {"ttft_proxy_s", r.ttft_proxy_s},
                      {"mean_tpot_s", r.mean_tpot_s},
                      {"output_tokens", r.output_tokens},
                      {"preemptions", r.preemptions}});
    }
    j["requests"] = rs;
    return j.dump(2);
}

// -- compare sweeps -----------------------------------------------------------

namespace {

struct SweepWorkload {
    workload::Trace trace;
    std::vector<workload::Arrival> arrivals;
    std::uint64_t budget_partitions = 0;
    std::uint64_t num_partitions = 0;
};

SweepWorkload build_sweep_workload(const SimConfig& cfg, std::uint64_t seed, std::uint64_t steps,
                                   std::uint64_t prompt_tokens) {
    SweepWorkload w;
    // Leave decode headroom below max_context when the caller does not pin a
    // prompt length.
    const std::uint64_t prompt =
        prompt_tokens > 0 ? prompt_tokens
                          : (cfg.model.max_context > steps ? cfg.model.max_context - steps : 1);
    if (prompt + steps > cfg.model.max_context)
        throw InvalidConfigError({"max_context: prompt plus decode steps exceeds it"});
    const std::uint64_t g = cfg.sparse.partition_granularity.value_or(cfg.sparse.page_size);
    w.num_partitions = ceil_div(prompt, g);
    w.budget_partitions = cfg.sparse.budget_partitions(prompt);

    workload::LocalityModel lm;
    lm.reuse_fraction = cfg.locality.reuse_fraction;
    lm.zipf_s = cfg.locality.zipf_s;
    lm.budget = w.budget_partitions;
    lm.seed = seed;
    w.trace = workload::generate_multi_head_trace(
        lm, w.num_partitions, steps, static_cast<std::uint32_t>(cfg.model.num_layers),
        static_cast<std::uint32_t>(cfg.model.num_kv_heads));

    w.arrivals = {{0.0, prompt, steps}};
    return w;
}

envelope::EnvelopeParams envelope_params_from(const SimConfig& cfg, std::uint64_t prompt) {
    envelope::EnvelopeParams p;
    p.batch = 1;
    p.num_layers = cfg.model.num_layers;
    p.num_kv_heads = cfg.model.num_kv_heads;
    p.head_dim = cfg.model.head_dim;
    p.bytes_per_element = cfg.model.bytes_per_element;
    p.context_tokens = prompt;
    p.summary_ratio = cfg.sparse.summary_ratio;
    const auto& b = cfg.sparse.retrieval_budget;
    p.budget_fraction = b.kind == RetrievalBudget::Kind::Fraction
                            ? b.fraction
                            : static_cast<double>(b.tokens) / static_cast<double>(p.context_tokens);
    p.bw_hbm = cfg.tiers.bw_hbm;
    p.bw_pcie = cfg.tiers.bw_pcie;
    p.t_mlp = cfg.tiers.t_mlp;
    return p;
}

struct OracleRatios {
    double belady = 0.0;
    double lru = 0.0;
};

OracleRatios oracle_ratios(const SweepWorkload& w, const SimConfig& cfg,
                           std::uint64_t capacity_pages_per_head) {
    std::uint64_t accesses = 0;
    std::uint64_t belady_misses = 0;
    std::uint64_t lru_misses = 0;
    for (std::uint32_t l = 0; l < cfg.model.num_layers; ++l) {
        for (std::uint32_t h = 0; h < cfg.model.num_kv_heads; ++h) {
            oracle::AccessTrace t = w.trace.project(l, h, capacity_pages_per_head);
            accesses += t.total_accesses();
            belady_misses += oracle::belady(t);
            lru_misses += oracle::lru_reference(t).miss_count;
        }
    }
    OracleRatios r;
    if (accesses > 0) {
        r.belady = static_cast<double>(belady_misses) / static_cast<double>(accesses);
        r.lru = static_cast<double>(lru_misses) / static_cast<double>(accesses);
    }
    return r;
}

ComparePoint run_point(const SimConfig& cfg, const SweepWorkload& w, std::uint64_t seed,
                       CacheMode mode) {
    RunOptions opt;
    opt.seed = seed;
    opt.cache_mode = mode;
    opt.playback = w.trace;
    Simulator s(cfg, opt);
    RunReport rep = s.run(w.arrivals);

    ComparePoint pt;
    pt.hit_ratio = rep.hit_ratio;
    pt.realized_tpot_s = rep.mean_tpot_s;
    pt.throughput_tokens_per_s = rep.throughput_tokens_per_s;
    const std::uint64_t classified = rep.hit_partitions + rep.missed_partitions;
    pt.realized_miss_ratio =
        classified == 0 ? 0.0
                        : static_cast<double>(rep.missed_partitions) / static_cast<double>(classified);
    return pt;
}

}  // namespace

std::vector<ComparePoint> compare_buffer_ratios(const SimConfig& cfg, std::uint64_t seed,
                                                const std::vector<double>& ratios,
                                                std::uint64_t steps, std::uint64_t prompt_tokens) {
    SweepWorkload w = build_sweep_workload(cfg, seed, steps, prompt_tokens);
    const std::uint64_t g = cfg.sparse.partition_granularity.value_or(cfg.sparse.page_size);
    const std::uint64_t pages_per_partition = ceil_div(g, cfg.sparse.page_size);
    const std::uint64_t mandatory_per_head = w.budget_partitions * pages_per_partition;
    const envelope::EnvelopeParams base = envelope_params_from(cfg, w.arrivals[0].input_tokens);

    std::vector<ComparePoint> points;
    for (double ratio : ratios) {
        SimConfig point_cfg = cfg;
        point_cfg.scheduler.min_buffer_ratio = ratio;
        ComparePoint pt = run_point(point_cfg, w, seed, CacheMode::Buffered);
        pt.buffer_ratio = ratio;
        pt.label = "ratio_" + std::to_string(ratio);

        const auto capacity = static_cast<std::uint64_t>(
            std::ceil(static_cast<double>(mandatory_per_head) * (1.0 + ratio)));
        const OracleRatios oracle = oracle_ratios(w, cfg, capacity);
        pt.belady_miss_ratio = oracle.belady;
        pt.lru_miss_ratio = oracle.lru;
        envelope::EnvelopeParams p = base;
        p.miss_ratio = oracle.belady;
        pt.envelope_tpot_s = envelope::tpot(p).total_s;
        points.push_back(pt);
    }
    return points;
}

std::vector<ComparePoint> compare_cache_modes(const SimConfig& cfg, std::uint64_t seed,
                                              std::uint64_t steps, std::uint64_t prompt_tokens) {
    SweepWorkload w = build_sweep_workload(cfg, seed, steps, prompt_tokens);
    const std::uint64_t g = cfg.sparse.partition_granularity.value_or(cfg.sparse.page_size);
    const std::uint64_t mandatory_per_head = w.budget_partitions * ceil_div(g, cfg.sparse.page_size);
    const envelope::EnvelopeParams base = envelope_params_from(cfg, w.arrivals[0].input_tokens);

    std::vector<ComparePoint> points;
    for (CacheMode mode : {CacheMode::NoCache, CacheMode::MandatoryOnly, CacheMode::Buffered}) {
        ComparePoint pt = run_point(cfg, w, seed, mode);
        pt.label = mode_name(mode);
        pt.buffer_ratio = mode == CacheMode::Buffered ? cfg.scheduler.min_buffer_ratio : 0.0;
        const auto capacity = static_cast<std::uint64_t>(std::ceil(
            static_cast<double>(mandatory_per_head) * (1.0 + cfg.scheduler.min_buffer_ratio)));
        const OracleRatios oracle = oracle_ratios(w, cfg, capacity);
        pt.belady_miss_ratio = oracle.belady;
        pt.lru_miss_ratio = oracle.lru;
        envelope::EnvelopeParams p = base;
        p.miss_ratio = oracle.belady;
        pt.envelope_tpot_s = envelope::tpot(p).total_s;
        points.push_back(pt);
    }
    return points;
}

std::string compare_csv(const std::vector<ComparePoint>& points) {
    std::ostringstream os;
    os << "label,buffer_ratio,hit_ratio,realized_tpot_s,realized_miss_ratio,envelope_tpot_s,"
          "belady_miss_ratio,lru_miss_ratio,throughput_tokens_per_s\n";
    os.precision(9);
    for (const auto& p : points) {
        os << p.label << ',' << p.buffer_ratio << ',' << p.hit_ratio << ',' << p.realized_tpot_s
           << ',' << p.realized_miss_ratio << ',' << p.envelope_tpot_s << ',' << p.belady_miss_ratio
           << ',' << p.lru_miss_ratio << ',' << p.throughput_tokens_per_s << '\n';
    }
    return os.str();
}

}  // namespace kvtier::sim
