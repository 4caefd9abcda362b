/*
 * Copyright (c) 2026, The sacm Authors.  All rights reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Command-line front end with one function per subcommand.
// Exit codes: 0 success, 1 configuration error, 2 denoiser/protocol error,
// 3 IO error.

#include "sacm/sacm.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sacm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kDenoiserError = 2, kIoError = 3 };

/// Maps an in-flight exception to its exit code and writes the message.
inline int report_exception(std::ostream& err) {
    try {
        throw;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const ContractError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DenoiserError& e) {
        err << "denoiser error: " << e.what() << '\n';
        return kDenoiserError;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return kIoError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
}

/// Raw decode options as given on the command line; unset values fall back
/// to the config file, then to built-in defaults.
struct DecodeFlags {
    std::string config_file;
    std::optional<std::string> model;
    std::optional<std::size_t> length;
    std::optional<std::size_t> steps;
    std::optional<std::string> strategy;
    std::optional<std::string> anchor_file;
    std::optional<std::vector<std::uint32_t>> anchor_tokens;
    std::optional<std::size_t> anchor_offset;
    std::optional<double> kappa;
    std::optional<double> beta;
    std::optional<double> gamma;
    bool no_modulation = false;
    bool force_modulation = false;
    bool no_progress = false;
    bool eot_suppress = false;
    bool eot_hard_ban = false;
    std::optional<std::size_t> semi_ar;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> tie_break;
    std::optional<std::size_t> top_k;
    std::optional<std::uint32_t> vocab_size;
    std::optional<std::uint32_t> mask_id;
    std::optional<std::uint32_t> eot_id;
    std::optional<std::vector<std::uint32_t>> prompt;
    std::optional<std::string> trace;
    std::optional<std::string> record_table;
    std::optional<std::size_t> repeat;
    std::optional<std::vector<std::uint64_t>> seeds;
    std::size_t jobs = 1;
};

inline void add_decode_options(CLI::App& app, DecodeFlags& f) {
    app.add_option("--config", f.config_file, "Run-config file (JSON object keyed like the flags)");
    app.add_option("--model", f.model, "synthetic:<cfg.json> | table:<file> | remote:<host:port>");
    app.add_option("--length", f.length, "Response length L");
    app.add_option("--steps", f.steps, "Step budget T (default L/2)");
    app.add_option("--strategy", f.strategy, "top-prob | top-margin | random");
    app.add_option("--anchor-file", f.anchor_file, "Anchor JSON: {tokens, offset_from_end, display}");
    app.add_option("--anchor-tokens", f.anchor_tokens, "Anchor token ids (alternative to --anchor-file)")->delimiter(',');
    app.add_option("--anchor-offset", f.anchor_offset, "Masked positions after the anchor (default 20)");
    app.add_option("--kappa", f.kappa, "Spatial decay (default 14)");
    app.add_option("--beta", f.beta, "Modulation strength (default 1.3)");
    app.add_option("--gamma", f.gamma, "Relaxation exponent (default 0.85)");
    app.add_flag("--no-modulation", f.no_modulation, "Suffix anchor without confidence modulation");
    app.add_flag("--modulation", f.force_modulation, "Force modulation on");
    app.add_flag("--no-progress-dependence", f.no_progress, "Use the constant factor (1 - w)");
    app.add_flag("--eot-suppress", f.eot_suppress, "Order argmax-EOT positions last");
    app.add_flag("--eot-hard-ban", f.eot_hard_ban, "EOT suppression that also never decodes EOT");
    app.add_option("--semi-ar", f.semi_ar, "Semi-AR decoding with this block size");
    app.add_option("--seed", f.seed, "Seed for random scores and random tie-breaks");
    app.add_option("--tie-break", f.tie_break, "lowest_index | random");
    app.add_option("--top-k", f.top_k, "Predictions requested per position (>= 2)");
    app.add_option("--vocab-size", f.vocab_size, "Vocabulary size (remote backend)");
    app.add_option("--mask-id", f.mask_id, "Mask token id (remote backend)");
    app.add_option("--eot-id", f.eot_id, "EOT token id (remote backend)");
    app.add_option("--prompt", f.prompt, "Prompt token ids passed to the denoiser")->delimiter(',');
    app.add_option("--trace", f.trace, "Trace output path (JSONL)");
    app.add_option("--record-table", f.record_table, "Write every denoiser exchange to a prediction table");
    app.add_option("--repeat", f.repeat, "Number of repeats (seeds seed, seed+1, ...)");
    app.add_option("--seeds", f.seeds, "Explicit seed list")->delimiter(',');
    app.add_option("--jobs", f.jobs, "Concurrent decodes")->check(CLI::PositiveNumber);
}

inline AnchorSpec load_anchor_file(const std::string& path) {
    const auto j = detail::load_json_file(path, "anchor file");
    AnchorSpec a;
    try {
        a.tokens = detail::tokens_from(j.at("tokens"));
        if (j.contains("offset_from_end")) {
            a.offset_from_end = j.at("offset_from_end").get<std::size_t>();
        } else if (j.contains("offset")) {
            a.offset_from_end = j.at("offset").get<std::size_t>();
        }
        a.display = j.value("display", std::string{});
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed anchor file '" + path + "': " + e.what());
    }
    return a;
}

inline RunConfig build_run_config(const DecodeFlags& f) {
    nlohmann::json file = nlohmann::json::object();
    if (!f.config_file.empty()) {
        file = detail::load_json_file(f.config_file, "run config");
        if (!file.is_object()) {
            throw ConfigError("run config '" + f.config_file + "' must be a JSON object");
        }
    }
    // Flags override file keys; the merged object feeds config_from_json.
    auto set = [&](const char* key, const auto& opt) {
        if (opt) {
            file[key] = *opt;
        }
    };
    set("model", f.model);
    set("length", f.length);
    set("steps", f.steps);
    set("strategy", f.strategy);
    set("anchor_file", f.anchor_file);
    set("anchor_tokens", f.anchor_tokens);
    set("anchor_offset", f.anchor_offset);
    set("kappa", f.kappa);
    set("beta", f.beta);
    set("gamma", f.gamma);
    set("seed", f.seed);
    set("tie_break", f.tie_break);
    set("top_k", f.top_k);
    set("vocab_size", f.vocab_size);
    set("mask_id", f.mask_id);
    set("eot_id", f.eot_id);
    set("prompt", f.prompt);
    set("trace", f.trace);
    set("record_table", f.record_table);
    set("repeat", f.repeat);
    set("seeds", f.seeds);
    set("semi_ar", f.semi_ar);
    if (f.no_modulation) {
        file["modulation"] = false;
    } else if (f.force_modulation) {
        file["modulation"] = true;
    }
    if (f.no_progress) {
        file["progress_dependent"] = false;
    }
    if (f.eot_suppress || f.eot_hard_ban) {
        file["eot_suppression"] = true;
    }
    if (f.eot_hard_ban) {
        file["eot_hard_ban"] = true;
    }

    RunConfig rc;
    try {
        if (!file.contains("model")) {
            throw ConfigError("no model backend selected (use --model)");
        }
        rc.model = ModelSpec::parse(file.at("model").get<std::string>());
        rc.model.load();
        if (rc.model.backend == Backend::remote) {
            if (!file.contains("vocab_size") || !file.contains("mask_id") || !file.contains("eot_id")) {
                throw ConfigError("remote backend needs --vocab-size, --mask-id and --eot-id");
            }
            Vocabulary v;
            v.size = file.at("vocab_size").get<std::uint32_t>();
            v.mask_id = token(file.at("mask_id").get<std::uint32_t>());
            v.eot_id = token(file.at("eot_id").get<std::uint32_t>());
            v.validate();
            rc.model.vocab = v;
        }

        const bool modulation_given = file.contains("modulation");
        nlohmann::json decode_keys = file;
        decode_keys.erase("modulation");
        rc.decode = config_from_json(decode_keys);
        if (file.contains("anchor_file")) {
            auto anchor = load_anchor_file(file.at("anchor_file").get<std::string>());
            if (file.contains("anchor_offset")) {
                anchor.offset_from_end = file.at("anchor_offset").get<std::size_t>();
            }
            rc.decode.anchor = std::move(anchor);
        }
        if (file.contains("semi_ar")) {
            rc.decode.mode = DecodeMode::semi_ar;
            rc.decode.block_size = file.at("semi_ar").get<std::size_t>();
        }
        if (rc.decode.length == 0 && rc.model.synthetic) {
            rc.decode.length = rc.model.synthetic->length();
        }
        if (rc.decode.steps == 0) {
            rc.decode.steps = default_steps(rc.decode.length);
        }
        const bool modulation_on =
            modulation_given ? file.at("modulation").get<bool>() : !rc.decode.anchor.tokens.empty();
        if (modulation_on) {
            ModulationParams m;
            m.kappa = file.value("kappa", m.kappa);
            m.beta = file.value("beta", m.beta);
            m.gamma = file.value("gamma", m.gamma);
            m.progress_dependent = file.value("progress_dependent", m.progress_dependent);
            rc.decode.modulation = m;
        } else {
            rc.decode.modulation.reset();
        }
        rc.trace_path = file.value("trace", std::string{});
        rc.record_table = file.value("record_table", std::string{});
        rc.repeat = file.value("repeat", std::size_t{1});
        if (file.contains("seeds")) {
            rc.seeds = file.at("seeds").get<std::vector<std::uint64_t>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad run config value: ") + e.what());
    }
    rc.decode.validate();
    return rc;
}

/// Trace path for repeat k of n: "out.jsonl" becomes "out.<k>.jsonl" when n > 1.
inline std::string repeat_path(const std::string& path, std::size_t k, std::size_t n) {
    if (n <= 1 || path.empty()) {
        return path;
    }
    const auto dot = path.rfind('.');
    const auto slash = path.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return path + "." + std::to_string(k);
    }
    return path.substr(0, dot) + "." + std::to_string(k) + path.substr(dot);
}

/// Runs task(i) for i in [0, n) on up to `jobs` threads. Exceptions are
/// captured per task.
inline std::vector<std::exception_ptr> run_parallel(std::size_t n, std::size_t jobs,
                                                    const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                task(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(n, 1));
    if (threads <= 1) {
        worker();
        return errors;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
    return errors;
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write '" + path + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for '" + path + "'");
    }
}

inline int cmd_decode(const RunConfig& rc, std::size_t jobs, std::ostream& out, std::ostream& err) {
    const auto seeds = rc.run_seeds();
    std::vector<std::string> summaries(seeds.size());
    const auto errors = run_parallel(seeds.size(), jobs, [&](std::size_t k) {
        auto cfg = rc.decode;
        cfg.seed = seeds[k];
        auto denoiser = make_denoiser(rc.model);
        std::optional<RecordingDenoiser> recorder;
        Denoiser* active = denoiser.get();
        if (!rc.record_table.empty()) {
            recorder.emplace(*denoiser);
            active = &*recorder;
        }
        const auto result = decode(cfg, *active);
        if (!rc.trace_path.empty()) {
            write_text_file(repeat_path(rc.trace_path, k, seeds.size()),
                            trace_to_string(result.trace, model_fields(rc.model)));
        }
        if (recorder) {
            std::ostringstream os;
            recorder->table().write(os);
            write_text_file(repeat_path(rc.record_table, k, seeds.size()), os.str());
        }
        nlohmann::ordered_json j;
        j["seed"] = cfg.seed;
        j["tokens"] = detail::token_ints(result.tokens);
        j["eot_ratio"] = eot_ratio(result.tokens, result.trace.vocab.eot_id);
        j["steps"] = result.trace.steps.size();
        summaries[k] = j.dump();
    });
    int code = kOk;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        if (errors[k]) {
            try {
                std::rethrow_exception(errors[k]);
            } catch (...) {
                const int c = report_exception(err);
                if (code == kOk) {
                    code = c;
                }
            }
        } else {
            out << summaries[k] << '\n';
        }
    }
    return code;
}

struct SweepGrid {
    std::vector<double> kappa;
    std::vector<double> beta;
    std::vector<double> gamma;

    std::size_t cells() const noexcept { return kappa.size() * beta.size() * gamma.size(); }

    static SweepGrid load(const std::string& path) {
        const auto j = detail::load_json_file(path, "sweep grid");
        SweepGrid g;
        try {
            g.kappa = j.value("kappa", std::vector<double>{});
            g.beta = j.value("beta", std::vector<double>{});
            g.gamma = j.value("gamma", std::vector<double>{});
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("malformed sweep grid '" + path + "': " + e.what());
        }
        if (g.cells() == 0) {
            throw ConfigError("sweep grid '" + path + "' is empty");
        }
        return g;
    }
};

struct SweepRow {
    double kappa = 0;
    double beta = 0;
    double gamma = 0;
    std::size_t runs = 0;
    double eot_ratio = 0;
    double anchor_concentration = 0;
    double runtime_ms = 0;
    std::string status = "ok";
    int code = kOk;
};

inline std::string sweep_csv_header() { return "kappa,beta,gamma,runs,eot_ratio,anchor_concentration,runtime_ms,status"; }

inline std::string sweep_csv_row(const SweepRow& r) {
    std::string status = r.status;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    return format_float9(r.kappa) + "," + format_float9(r.beta) + "," + format_float9(r.gamma) + "," +
           std::to_string(r.runs) + "," + format_float9(r.eot_ratio) + "," + format_float9(r.anchor_concentration) +
           "," + format_float9(r.runtime_ms) + "," + status;
}

/// Runs every (kappa, beta, gamma) cell over the run seeds. Cells fail
/// independently; the exit code is that of the first failing cell.
inline int cmd_sweep(const RunConfig& base, const SweepGrid& grid, std::size_t jobs, std::size_t bins,
                     double early, std::ostream& out, std::ostream& err) {
    std::vector<SweepRow> rows;
    for (double k : grid.kappa) {
        for (double b : grid.beta) {
            for (double g : grid.gamma) {
                SweepRow r;
                r.kappa = k;
                r.beta = b;
                r.gamma = g;
                rows.push_back(r);
            }
        }
    }
    const auto seeds = base.run_seeds();
    const auto errors = run_parallel(rows.size(), jobs, [&](std::size_t c) {
        auto& row = rows[c];
        const auto t0 = std::chrono::steady_clock::now();
        try {
            auto cfg = base.decode;
            auto m = cfg.modulation.value_or(ModulationParams{});
            m.kappa = row.kappa;
            m.beta = row.beta;
            m.gamma = row.gamma;
            cfg.modulation = m;
            cfg.validate();
            double eot = 0;
            std::vector<PositionHistogram> hs;
            for (auto s : seeds) {
                cfg.seed = s;
                auto denoiser = make_denoiser(base.model);
                const auto result = decode(cfg, *denoiser);
                eot += eot_ratio(result.tokens, result.trace.vocab.eot_id);
                hs.push_back(early_decode_histogram(result.trace, bins, early));
            }
            row.runs = seeds.size();
            row.eot_ratio = eot / static_cast<double>(seeds.size());
            row.anchor_concentration = average_histograms(hs).anchor_concentration();
        } catch (...) {
            std::ostringstream msg;
            row.code = report_exception(msg);
            row.status = "error: " + msg.str();
            while (!row.status.empty() && row.status.back() == '\n') {
                row.status.pop_back();
            }
        }
        row.runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });
    (void)errors; // every task catches its own exceptions
    out << sweep_csv_header() << '\n';
    int code = kOk;
    for (const auto& r : rows) {
        out << sweep_csv_row(r) << '\n';
        if (r.code != kOk) {
            err << "sweep cell kappa=" << r.kappa << " beta=" << r.beta << " gamma=" << r.gamma << ": " << r.status
                << '\n';
            if (code == kOk) {
                code = r.code;
            }
        }
    }
    return code;
}

inline TraceFile load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open trace '" + path + "'");
    }
    return read_trace(in, path);
}

inline nlohmann::ordered_json histogram_json(const PositionHistogram& h) {
    nlohmann::ordered_json j;
    j["bins"] = h.bins;
    j["bin_count"] = h.bin_count;
    j["early_fraction"] = h.early_fraction;
    j["early_tokens"] = h.early_tokens;
    j["anchor_bins"] = h.anchor_bins;
    j["anchor_mass"] = h.anchor_mass();
    j["anchor_concentration"] = h.anchor_concentration();
    return j;
}

inline int cmd_stats(const std::vector<std::string>& paths, bool compare, std::size_t bins, double early,
                     const std::string& csv_path, std::ostream& out) {
    if (paths.empty()) {
        throw ConfigError("stats needs at least one trace file");
    }
    if (compare && paths.size() != 2) {
        throw ConfigError("--compare needs exactly two trace files");
    }
    std::vector<TraceFile> traces;
    traces.reserve(paths.size());
    for (const auto& p : paths) {
        traces.push_back(load_trace_file(p));
    }
    std::vector<PositionHistogram> hs;
    for (std::size_t k = 0; k < traces.size(); ++k) {
        const auto& t = traces[k].trace;
        const auto tokens = t.final_tokens();
        const auto h = early_decode_histogram(t, bins, early);
        hs.push_back(h);
        nlohmann::ordered_json j;
        j["trace"] = paths[k];
        j["length"] = t.config.length;
        j["steps"] = t.steps.size();
        j["eot_ratio"] = eot_ratio(tokens, t.vocab.eot_id);
        j["histogram"] = histogram_json(h);
        out << j.dump() << '\n';
    }
    if (traces.size() > 1 && !compare) {
        bool same_length = std::all_of(hs.begin(), hs.end(), [&](const auto& h) { return h.length == hs[0].length; });
        if (same_length) {
            nlohmann::ordered_json j;
            j["average_of"] = paths.size();
            j["histogram"] = histogram_json(average_histograms(hs));
            out << j.dump() << '\n';
        }
    }
    if (compare) {
        const auto r = compare_runs(traces[0].trace, traces[1].trace, bins, early);
        nlohmann::ordered_json j;
        j["compare"] = paths;
        j["eot_ratio_a"] = r.eot_ratio_a;
        j["eot_ratio_b"] = r.eot_ratio_b;
        j["eot_ratio_delta"] = r.eot_ratio_delta;
        j["decided_at_delta"] = r.decided_at_delta;
        j["histogram_delta"] = r.histogram_delta;
        j["identical"] = r.all_zero();
        out << j.dump() << '\n';
    }
    if (!csv_path.empty()) {
        std::ostringstream csv;
        csv << "bin,start";
        for (std::size_t k = 0; k < paths.size(); ++k) {
            csv << ",trace" << k;
        }
        csv << ",anchor\n";
        for (std::size_t b = 0; b < bins; ++b) {
            csv << b << ',' << b * (hs[0].length / bins);
            for (const auto& h : hs) {
                csv << ',' << (b < h.bins.size() ? format_float9(h.bins[b]) : "");
            }
            csv << ',' << (hs[0].anchor_bins.count(b) ? 1 : 0) << '\n';
        }
        write_text_file(csv_path, csv.str());
    }
    return kOk;
}

/// Re-runs a trace from its header and compares the output byte-for-byte.
inline int cmd_replay(const std::string& path, const std::string& out_path, std::ostream& out, std::ostream& err) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open trace '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    const auto original = buf.str();
    const auto tf = read_trace_string(original, path);
    const auto rc = run_config_from_header(tf.header);
    const auto replayed = run_to_trace_text(rc);
    if (!out_path.empty()) {
        write_text_file(out_path, replayed);
    }
    const bool same = replayed == original;
    out << (same ? "identical" : "differs") << '\n';
    if (!same) {
        err << "replayed trace differs from " << path << '\n';
        return kConfigError;
    }
    return kOk;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Suffix-anchored confidence-modulated decoding for masked diffusion LMs"};
    app.require_subcommand(1);

    DecodeFlags decode_flags;
    auto* decode_cmd = app.add_subcommand("decode", "Run decodes and write traces");
    add_decode_options(*decode_cmd, decode_flags);

    DecodeFlags sweep_flags;
    std::string grid_path;
    std::string sweep_out;
    std::size_t sweep_bins = PositionHistogram::kDefaultBins;
    double sweep_early = PositionHistogram::kDefaultEarlyFraction;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a (kappa, beta, gamma) grid");
    add_decode_options(*sweep_cmd, sweep_flags);
    sweep_cmd->add_option("--grid", grid_path, "Grid JSON: {kappa:[...], beta:[...], gamma:[...]}")->required();
    sweep_cmd->add_option("--out", sweep_out, "Write the summary CSV here instead of stdout");
    sweep_cmd->add_option("--bins", sweep_bins, "Histogram bins");
    sweep_cmd->add_option("--early", sweep_early, "Early-step fraction");

    std::vector<std::string> stats_paths;
    bool stats_compare = false;
    std::size_t stats_bins = PositionHistogram::kDefaultBins;
    double stats_early = PositionHistogram::kDefaultEarlyFraction;
    std::string stats_csv;
    auto* stats_cmd = app.add_subcommand("stats", "EOT ratio and early-decode histograms from traces");
    stats_cmd->add_option("traces", stats_paths, "Trace files")->required();
    stats_cmd->add_flag("--compare", stats_compare, "Paired comparison of two traces");
    stats_cmd->add_option("--bins", stats_bins, "Histogram bins");
    stats_cmd->add_option("--early", stats_early, "Early-step fraction");
    stats_cmd->add_option("--csv", stats_csv, "Also write the histogram table as CSV");

    std::string replay_path;
    std::string replay_out;
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a trace from its header and compare");
    replay_cmd->add_option("trace", replay_path, "Trace file")->required();
    replay_cmd->add_option("--out", replay_out, "Write the replayed trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << e.what() << '\n';
        if (auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        }
        return kConfigError;
    }

    try {
        if (decode_cmd->parsed()) {
            return cmd_decode(build_run_config(decode_flags), decode_flags.jobs, out, err);
        }
        if (sweep_cmd->parsed()) {
            const auto base = build_run_config(sweep_flags);
            const auto grid = SweepGrid::load(grid_path);
            if (sweep_out.empty()) {
                return cmd_sweep(base, grid, sweep_flags.jobs, sweep_bins, sweep_early, out, err);
            }
            std::ostringstream csv;
            const int code = cmd_sweep(base, grid, sweep_flags.jobs, sweep_bins, sweep_early, csv, err);
            write_text_file(sweep_out, csv.str());
            return code;
        }
        if (stats_cmd->parsed()) {
            return cmd_stats(stats_paths, stats_compare, stats_bins, stats_early, stats_csv, out);
        }
        if (replay_cmd->parsed()) {
            return cmd_replay(replay_path, replay_out, out, err);
        }
    } catch (...) {
        return report_exception(err);
    }
    return kConfigError;
}

} // namespace sacm::cli
