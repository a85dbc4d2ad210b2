// Copyright (c) 2026 The kvtier Authors
// SPDX-License-Identifier: Apache-2.0

#include "kvtier/workload.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "kvtier/errors.hpp"
#include "kvtier/rng.hpp"

namespace kvtier::workload {

namespace {

std::uint64_t derive_warm_window(double reuse_fraction, std::uint64_t budget, std::uint64_t num_ids) {
    // Re-reference horizon of the keep process: a selected id survives for a
    // geometric number of steps with mean 1 / (1 - p).
    double chain = reuse_fraction >= 1.0 ? 1.0 : 1.0 / (1.0 - reuse_fraction);
    const auto window = budget * static_cast<std::uint64_t>(std::ceil(chain));
    return std::min(window, num_ids);
}

}  // namespace

WorkingSetSampler::WorkingSetSampler(std::uint64_t num_ids, double reuse_fraction, double zipf_s,
                                     std::uint64_t budget)
    : num_ids_(num_ids),
      reuse_fraction_(reuse_fraction),
      zipf_s_(zipf_s),
      warm_window_(derive_warm_window(reuse_fraction, budget, num_ids)),
      zipf_(num_ids, zipf_s) {
    if (budget > num_ids)
        throw BudgetTooLargeError("budget " + std::to_string(budget) + " exceeds " +
                                  std::to_string(num_ids) + " partitions");
}

void WorkingSetSampler::grow_universe(std::uint64_t num_ids) {
    if (num_ids <= num_ids_) return;
    num_ids_ = num_ids;
    zipf_ = ZipfSampler(num_ids, zipf_s_);
}

void WorkingSetSampler::touch(PartitionId id) {
    auto it = recency_pos_.find(id);
    if (it != recency_pos_.end()) recency_.erase(it->second);
    recency_.push_front(id);
    recency_pos_[id] = recency_.begin();
}

std::vector<PartitionId> WorkingSetSampler::next(
    std::mt19937_64& rng, std::uint64_t count_budget, std::uint64_t token_budget,
    const std::unordered_set<PartitionId>* exclude,
    const std::function<std::uint64_t(PartitionId)>& token_count) {
    const std::uint64_t excluded = exclude == nullptr ? 0 : exclude->size();
    std::vector<PartitionId> sel;
    std::unordered_set<PartitionId> picked;
    std::uint64_t token_sum = 0;
    auto tokens_of = [&](PartitionId id) { return token_count ? token_count(id) : std::uint64_t(1); };
    auto budget_met = [&] {
        if (token_budget > 0) return token_sum >= token_budget;
        return sel.size() >= count_budget;
    };
    auto take = [&](PartitionId id) {
        sel.push_back(id);
        picked.insert(id);
        token_sum += tokens_of(id);
    };

    // Keep pass over the previous selection.
    for (PartitionId id : prev_) {
        if (budget_met()) break;
        if (exclude != nullptr && exclude->count(id)) continue;
        if (id >= num_ids_) continue;
        if (uniform01(rng) < reuse_fraction_) take(id);
    }

    // Refill: with propensity p the draw re-references the sliding working
    // set (uniform over the last warm_window distinct ids); otherwise it is a
    // fresh Zipf(s) draw over the id space.
    std::vector<PartitionId> warm(recency_.begin(),
                                  std::next(recency_.begin(),
                                            static_cast<long>(std::min<std::uint64_t>(
                                                warm_window_, recency_.size()))));
    while (!budget_met() && picked.size() + excluded < num_ids_) {
        PartitionId candidate;
        if (!warm.empty() && uniform01(rng) < reuse_fraction_) {
            candidate = warm[uniform_index(rng, warm.size())];
        } else {
            candidate = static_cast<PartitionId>(zipf_.sample(rng));
        }
        if (candidate >= num_ids_) continue;
        if (exclude != nullptr && exclude->count(candidate)) continue;
        if (picked.count(candidate)) continue;
        take(candidate);
    }

    // Selection refreshes recency, most recent first.
    for (auto it = sel.rbegin(); it != sel.rend(); ++it) touch(*it);
    prev_ = sel;
    return sel;
}

namespace {

std::vector<std::vector<PartitionId>> generate_steps(const LocalityModel& model,
                                                     std::uint64_t num_partitions, std::uint64_t steps,
                                                     std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    WorkingSetSampler sampler(num_partitions, model.reuse_fraction, model.zipf_s, model.budget);
    std::vector<std::vector<PartitionId>> out;
    out.reserve(steps);
    for (std::uint64_t s = 0; s < steps; ++s) out.push_back(sampler.next(rng, model.budget));
    return out;
}

}  // namespace

oracle::AccessTrace generate_trace(const LocalityModel& model, std::uint64_t num_partitions,
                                   std::uint64_t steps) {
    oracle::AccessTrace t;
    t.steps = generate_steps(model, num_partitions, steps, model.seed);
    t.capacity_pages = model.budget;  // callers override; must cover max step demand
    return t;
}

Trace generate_multi_head_trace(const LocalityModel& model, std::uint64_t num_partitions,
                                std::uint64_t steps, std::uint32_t layers, std::uint32_t heads) {
    Trace t;
    t.num_partitions = num_partitions;
    t.budget = model.budget;
    for (std::uint32_t l = 0; l < layers; ++l) {
        for (std::uint32_t h = 0; h < heads; ++h) {
            auto sel = generate_steps(model, num_partitions, steps, derive_seed(model.seed, l, h));
            for (std::uint64_t s = 0; s < steps; ++s)
                t.records.push_back({s, l, h, std::move(sel[s])});
        }
    }
    // Step-major order so playback consumes records sequentially.
    std::stable_sort(t.records.begin(), t.records.end(), [](const TraceRecord& a, const TraceRecord& b) {
        if (a.step != b.step) return a.step < b.step;
        if (a.layer != b.layer) return a.layer < b.layer;
        return a.head < b.head;
    });
    return t;
}

oracle::AccessTrace Trace::project(std::uint32_t layer, std::uint32_t head,
                                   std::uint64_t capacity_pages) const {
    oracle::AccessTrace t;
    t.capacity_pages = capacity_pages;
    for (const auto& r : records)
        if (r.layer == layer && r.head == head) t.steps.push_back(r.selected);
    return t;
}

std::vector<Arrival> poisson_arrivals(const ArrivalProcess& proc) {
    if (proc.count > 0 && !(proc.rate > 0.0)) throw Error("poisson_arrivals: rate must be > 0");
    std::mt19937_64 rng(proc.seed);
    std::vector<Arrival> out;
    out.reserve(proc.count);
    double t = 0.0;
    for (std::uint64_t i = 0; i < proc.count; ++i) {
        t += exponential(rng, proc.rate);
        Arrival a;
        a.time_s = t;
        a.input_tokens =
            proc.input_len_min + uniform_index(rng, proc.input_len_max - proc.input_len_min + 1);
        a.output_tokens =
            proc.output_len_min + uniform_index(rng, proc.output_len_max - proc.output_len_min + 1);
        out.push_back(a);
    }
    return out;
}

// -- trace file format --------------------------------------------------------
//
// UTF-8, line-delimited. Header:
//   #kvtier-trace v1 num_partitions=<n> budget=<k>
// then one JSON object per line:
//   {"step":int,"layer":int,"head":int,"sel":[ids...]}

void write_trace(const Trace& trace, std::ostream& out) {
    out << "#kvtier-trace v1 num_partitions=" << trace.num_partitions << " budget=" << trace.budget
        << "\n";
    for (const auto& r : trace.records) {
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["layer"] = r.layer;
        j["head"] = r.head;
        j["sel"] = r.selected;
        out << j.dump() << "\n";
    }
}

void write_trace(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_trace(trace, out);
}

Trace read_trace(std::istream& in) {
    Trace trace;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) throw ParseError(1, "empty trace file");
    ++line_no;
    {
        // header layout: "#kvtier-trace v1 num_partitions=<n> budget=<k>"
        std::istringstream hs(line);
        std::string magic, version, np, budget;
        hs >> magic >> version >> np >> budget;
        if (magic != "#kvtier-trace" || version != "v1")
            throw ParseError(line_no, "expected header '#kvtier-trace v1 ...'");
        if (np.rfind("num_partitions=", 0) != 0 || budget.rfind("budget=", 0) != 0)
            throw ParseError(line_no, "malformed header fields");
        try {
            trace.num_partitions = std::stoull(np.substr(15));
            trace.budget = std::stoull(budget.substr(7));
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed header numbers");
        }
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        TraceRecord r;
        try {
            r.step = j.at("step").get<StepIndex>();
            r.layer = j.at("layer").get<std::uint32_t>();
            r.head = j.at("head").get<std::uint32_t>();
            r.selected = j.at("sel").get<std::vector<PartitionId>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line_no, e.what());
        }
        for (PartitionId id : r.selected)
            if (id >= trace.num_partitions)
                throw ParseError(line_no, "partition id " + std::to_string(id) +
                                              " out of declared range " +
                                              std::to_string(trace.num_partitions));
        trace.records.push_back(std::move(r));
    }
    return trace;
}

Trace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    return read_trace(in);
}

void write_arrivals(const std::vector<Arrival>& arrivals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "arrival_s,input_tokens,output_tokens\n";
    out.precision(9);
    out << std::fixed;
    for (const auto& a : arrivals)
        out << a.time_s << ',' << a.input_tokens << ',' << a.output_tokens << '\n';
}

std::vector<Arrival> read_arrivals(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(0, "cannot open " + path);
    std::vector<Arrival> out;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "empty arrival file");
    ++line_no;
    if (line != "arrival_s,input_tokens,output_tokens")
        throw ParseError(line_no, "expected arrival CSV header");
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Arrival a;
        std::istringstream ls(line);
        std::string f0, f1, f2;
        if (!std::getline(ls, f0, ',') || !std::getline(ls, f1, ',') || !std::getline(ls, f2))
            throw ParseError(line_no, "expected three comma-separated fields");
        try {
            a.time_s = std::stod(f0);
            a.input_tokens = std::stoull(f1);
            a.output_tokens = std::stoull(f2);
        } catch (const std::exception&) {
            throw ParseError(line_no, "malformed arrival record");
        }
        out.push_back(a);
    }
    return out;
}

}  // namespace kvtier::workload
