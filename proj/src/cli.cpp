#include "auralrl/cli.h"

#include "auralrl/audio.h"
#include "auralrl/config.h"
#include "auralrl/dataset.h"
#include "auralrl/decode.h"
#include "auralrl/error.h"
#include "auralrl/eval.h"
#include "auralrl/reward.h"
#include "auralrl/toy_env.h"
#include "auralrl/trace.h"
#include "auralrl/wav.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace auralrl {

namespace fs = std::filesystem;
using ojson  = nlohmann::ordered_json;

namespace {

struct common_opts {
    uint64_t    seed = 0;
    std::string config;
    std::string out;
    size_t      jobs = 1;
};

void add_common(CLI::App * sub, common_opts & c) {
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--config", c.config, "JSON configuration file");
    sub->add_option("--out", c.out, "output path");
    sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

app_config load(const common_opts & c) {
    return c.config.empty() ? app_config{} : load_config(c.config);
}

std::vector<ojson> read_json_lines(const fs::path & path) {
    std::ifstream in(path);
    if (!in) {
        throw error(errc::io_error, "cannot open " + path.string());
    }
    std::vector<ojson> out;
    std::string        line;
    size_t             lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            out.push_back(ojson::parse(line));
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::ofstream open_out(const fs::path & path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw error(errc::io_error, "cannot write " + path.string());
    }
    return f;
}

void write_lines(const fs::path & path, const std::vector<std::string> & lines) {
    auto f = open_out(path);
    for (const auto & l : lines) {
        f << l << '\n';
    }
    if (!f) {
        throw error(errc::io_error, "write failed for " + path.string());
    }
}

// Runs fn(i) for i in [0, n) on `jobs` threads; results keep index order.
template <typename T, typename F> std::vector<T> parallel_map(size_t n, size_t jobs, F fn) {
    std::vector<T> out(n);
    jobs = std::max<size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (size_t i = 0; i < n; ++i) {
            out[i] = fn(i);
        }
        return out;
    }
    std::vector<std::future<void>> workers;
    for (size_t w = 0; w < jobs; ++w) {
        workers.push_back(std::async(std::launch::async, [&, w] {
            for (size_t i = w; i < n; i += jobs) {
                out[i] = fn(i);
            }
        }));
    }
    for (auto & f : workers) {
        f.get();
    }
    return out;
}

std::vector<choice> parse_choices(const ojson & j) {
    std::vector<choice> out;
    for (const auto & c : j) {
        if (c.is_string()) {
            out.push_back({ std::string(1, static_cast<char>('A' + out.size())), c.get<std::string>() });
        } else {
            out.push_back({ c.at("label").get<std::string>(), c.value("text", std::string()) });
        }
    }
    return out;
}

qa_spec parse_qa(const ojson & j) {
    qa_spec qa;
    qa.question = j.at("question").get<std::string>();
    qa.choices  = parse_choices(j.at("choices"));
    qa.gold     = j.at("gold").get<std::string>();
    const auto qt = j.value("question_type", std::string("speech"));
    if (qt == "speech") {
        qa.qtype = question_type::speech;
    } else if (qt == "environment") {
        qa.qtype = question_type::environment;
    } else {
        throw error(errc::invalid_argument, "unknown question_type '" + qt + "'");
    }
    return qa;
}

fs::path resolve(const fs::path & base, const std::string & p) {
    fs::path path(p);
    return path.is_relative() ? base / path : path;
}

std::map<std::string, paqa_item> index_items(const std::vector<paqa_item> & items) {
    std::map<std::string, paqa_item> out;
    for (const auto & it : items) {
        out.emplace(it.id, it);
    }
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << std::fixed << v;
    return ss.str();
}

// ---- subcommands ----

int run_mix(const common_opts & c, const std::string & speech_path, const std::string & noise_path, double snr,
            bool truncate, std::ostream & out) {
    load(c);
    validate_snr(snr);
    if (c.out.empty()) {
        throw error(errc::invalid_argument, "mix needs --out");
    }
    const audio_clip speech = read_wav(speech_path);
    const audio_clip noise  = read_wav(noise_path);
    mix_spec         spec{ snr, c.seed, truncate ? noise_alignment::truncate_noise : noise_alignment::loop_noise };
    const mix_result mix = mix_at_snr(speech, noise, spec);

    const fs::path dst(c.out);
    write_wav(dst, mix.mixture);
    write_wav(stem_path(dst, "speech"), mix.speech);
    audio_clip noise_out = mix.scaled_noise;
    for (double & s : noise_out.samples) {
        s *= mix.master_gain;
    }
    write_wav(stem_path(dst, "noise"), noise_out);

    ojson j;
    j["out"]          = dst.string();
    j["snr_db"]       = snr;
    j["measured_snr"] = measure_snr(mix.speech, noise_out);
    j["noise_gain"]   = mix.noise_gain;
    j["master_gain"]  = mix.master_gain;
    j["noise_offset"] = mix.noise_offset;
    out << j.dump() << '\n';
    return k_exit_ok;
}

int run_forge(const common_opts & c, const std::string & manifest_path, const std::string & review_path,
              const std::string & hook_cmd, std::ostream & out) {
    const app_config cfg = load(c);
    if (c.out.empty()) {
        throw error(errc::invalid_argument, "forge needs --out");
    }
    const fs::path manifest(manifest_path);
    const fs::path base = manifest.parent_path();
    const auto     rows = read_json_lines(manifest);
    fs::path       root = c.config.empty() ? fs::path(c.out).parent_path() / "forge" : cfg.dataset.root;
    forge          f(root);

    std::mt19937_64                        rng(c.seed);
    std::uniform_real_distribution<double> snr_dist(k_min_snr_db, k_max_snr_db);
    std::optional<reflection_hook>         hook;
    if (!hook_cmd.empty()) {
        hook = reflection_hook{ hook_cmd };
    }

    std::vector<paqa_item>   items;
    std::vector<std::string> bad_responses;
    for (const auto & row : rows) {
        try {
            const std::string id    = row.at("id").get<std::string>();
            const std::string level = row.value("level", std::string("se"));
            const qa_spec     qa    = parse_qa(row);
            const uint64_t    item_seed = rng();
            paqa_item         item;
            if (level == "se") {
                const double snr = row.contains("snr_db") ? row.at("snr_db").get<double>() : snr_dist(rng);
                item = f.build_se_item(id, read_wav(resolve(base, row.at("speech").get<std::string>())),
                                       read_wav(resolve(base, row.at("noise").get<std::string>())), qa,
                                       row.at("env_tag").get<std::string>(),
                                       mix_spec{ snr, item_seed,
                                                 row.value("truncate", false) ? noise_alignment::truncate_noise
                                                                              : noise_alignment::loop_noise });
            } else if (level == "ss") {
                std::vector<turn_clip> turns;
                for (const auto & t : row.at("turns")) {
                    const std::string clip = t.at("clip").get<std::string>();
                    turns.push_back({ t.at("speaker_id").get<std::string>(), clip, read_wav(resolve(base, clip)),
                                      t.at("transcript").get<std::string>() });
                }
                item = f.build_ss_item(id, turns, qa, row.value("gap_ms", 300.0),
                                       row.value("asr_reference", std::vector<std::string>{}));
            } else {
                throw error(errc::invalid_argument, "unknown level '" + level + "' for item " + id);
            }
            items.push_back(std::move(item));
            bad_responses.push_back(row.value("bad_response", std::string()));
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::invalid_argument, std::string("bad manifest row: ") + e.what());
        }
    }

    // Reflection triplets are built before filtering so the review log covers
    // every item that had a bad response.
    std::vector<std::string> review;
    for (size_t i = 0; i < items.size(); ++i) {
        if (bad_responses[i].empty()) {
            continue;
        }
        const trace_document doc    = parse_trace(bad_responses[i]);
        const error_report   report = detect_errors(items[i], doc);
        ojson                entry;
        entry["id"] = items[i].id;
        ojson kinds = ojson::array();
        for (auto k : report.kinds) {
            kinds.push_back(std::string(error_kind_name(k)));
        }
        entry["errors"] = kinds;
        if (report.empty() && !hook) {
            entry["reflection"] = nullptr;
        } else {
            const reflection_triplet t = build_reflection_triplet(items[i], bad_responses[i], report, hook);
            entry["reflection"]        = render_triplet(t);
        }
        review.push_back(entry.dump());
    }

    const qpt_partition part = qpt_filter(items, cfg.dataset.qpt_threshold);
    write_jsonl(c.out, part.kept);
    const fs::path review_out = review_path.empty() ? fs::path(c.out + ".reflections.jsonl") : fs::path(review_path);
    write_lines(review_out, review);

    ojson summary;
    summary["built"]       = items.size();
    summary["kept"]        = part.kept.size();
    summary["dropped"]     = part.dropped.size();
    summary["reflections"] = review.size();
    out << summary.dump() << '\n';
    return k_exit_ok;
}

int run_score(const common_opts & c, const std::string & in_path, const std::string & items_path, std::ostream & out) {
    const app_config cfg = load(c);
    std::optional<fs::path> items_file;
    if (!items_path.empty()) {
        items_file = items_path;
    } else {
        items_file = cfg.dataset.items;
    }
    if (!items_file) {
        throw error(errc::invalid_argument, "score needs --items or dataset.items in the config");
    }
    const auto items = index_items(read_jsonl(*items_file));
    const auto rows  = read_json_lines(in_path);

    struct job {
        std::string     trace;
        const paqa_item * item;
        long            tokens;
        std::optional<bool> trailing;
    };
    std::vector<job> jobs;
    for (const auto & row : rows) {
        try {
            const std::string id = row.at("item_id").get<std::string>();
            auto              it = items.find(id);
            if (it == items.end()) {
                throw error(errc::invalid_argument, "unknown item_id '" + id + "'");
            }
            job j{ row.at("trace").get<std::string>(), &it->second, 0, std::nullopt };
            if (row.contains("token_count") && !row.at("token_count").is_null()) {
                j.tokens = row.at("token_count").get<long>();
            } else {
                j.tokens = static_cast<long>(split_words(normalize_text(j.trace)).size());
            }
            if (row.contains("trailing") && !row.at("trailing").is_null()) {
                j.trailing = row.at("trailing").get<bool>();
            }
            jobs.push_back(std::move(j));
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::invalid_argument, std::string("bad score row: ") + e.what());
        }
    }

    const auto lines = parallel_map<std::string>(jobs.size(), c.jobs, [&](size_t i) {
        const auto &         j   = jobs[i];
        const trace_document doc = parse_trace(j.trace);
        const bool           trailing = j.trailing ? *j.trailing : has_trailing_after_final(doc);
        return breakdown_to_json(total_reward(doc, *j.item, cfg.weights, cfg.length, j.tokens, trailing)).dump();
    });
    if (c.out.empty()) {
        for (const auto & l : lines) {
            out << l << '\n';
        }
    } else {
        write_lines(c.out, lines);
    }
    return k_exit_ok;
}

int run_decode_sim(const common_opts & c, const std::string & script, std::ostream & out) {
    const app_config cfg   = load(c);
    scripted_model   model = scripted_model::from_file(script);
    const auto       rec   = run_decode(model, decode_state{}, cfg.decode, c.seed);
    const std::string dump = trajectory_to_json(rec, model.vocab()).dump(2);
    if (c.out.empty()) {
        out << dump << '\n';
    } else {
        write_lines(c.out, { dump });
    }
    return k_exit_ok;
}

int run_train_toy(const common_opts & c, std::optional<size_t> steps, std::optional<double> tau_abort,
                  const std::string & checkpoint, std::ostream & out) {
    app_config cfg = load(c);
    if (steps) {
        cfg.trainer.steps = *steps;
    }
    if (tau_abort) {
        cfg.decode.tau_abort = *tau_abort;
        cfg.decode.tau_pause = std::max(cfg.decode.tau_pause, *tau_abort);
    }
    cfg.validate();
    const toy_train_result res = train_toy(cfg.toy_config(c.seed, c.jobs));

    std::vector<std::string> lines;
    for (const auto & s : res.log) {
        lines.push_back(step_log_to_json(s).dump());
    }
    if (c.out.empty()) {
        for (const auto & l : lines) {
            out << l << '\n';
        }
    } else {
        write_lines(c.out, lines);
    }
    if (!checkpoint.empty()) {
        write_lines(checkpoint, { res.policy.to_json().dump() });
    }
    const size_t tail = std::min<size_t>(100, res.log.size());
    double       acc = 0.0, fmt = 0.0;
    for (size_t i = res.log.size() - tail; i < res.log.size(); ++i) {
        acc += res.log[i].acc_rate;
        fmt += res.log[i].fmt_rate;
    }
    if (!c.out.empty()) {
        out << "steps " << res.log.size() << "  last-" << tail << " acc " << fmt_double(acc / tail) << "  fmt "
            << fmt_double(fmt / tail) << '\n';
    }
    return k_exit_ok;
}

int run_eval(const common_opts & c, const std::string & items_path, const std::string & traces_path,
             const std::string & tags_path, std::ostream & out) {
    const app_config cfg = load(c);
    fs::path         items_file;
    if (!items_path.empty()) {
        items_file = items_path;
    } else if (cfg.dataset.items) {
        items_file = *cfg.dataset.items;
    } else {
        throw error(errc::invalid_argument, "eval needs --items or dataset.items in the config");
    }
    const auto all   = read_jsonl(items_file);
    const auto index = index_items(all);
    const auto rows  = read_json_lines(traces_path);

    std::vector<paqa_item>      items;
    std::vector<trace_document> docs;
    for (const auto & row : rows) {
        try {
            const std::string id = row.at("item_id").get<std::string>();
            auto              it = index.find(id);
            if (it == index.end()) {
                throw error(errc::invalid_argument, "unknown item_id '" + id + "'");
            }
            items.push_back(it->second);
            docs.push_back(parse_trace(row.at("trace").get<std::string>()));
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::invalid_argument, std::string("bad trace row: ") + e.what());
        }
    }
    eval_report report = evaluate(items, docs);
    if (!tags_path.empty()) {
        std::ifstream in(tags_path);
        if (!in) {
            throw error(errc::io_error, "cannot open " + tags_path);
        }
        try {
            const ojson j = ojson::parse(in);
            report.map    = map_multilabel(j.at("scores").get<std::vector<std::vector<double>>>(),
                                           j.at("labels").get<std::vector<std::vector<bool>>>());
        } catch (const nlohmann::json::exception & e) {
            throw error(errc::parse_error, std::string("bad tag score file: ") + e.what());
        }
    }
    out << report_table(report);
    if (!c.out.empty()) {
        write_lines(c.out, { report_to_json(report).dump(2) });
    }
    return k_exit_ok;
}

} // namespace

int dispatch(const std::vector<std::string> & args, std::ostream & out, std::ostream & err) {
    CLI::App app{ "auralrl: perception-aware reasoning data, rewards and toy training", "auralrl" };
    app.require_subcommand(0, 1);

    common_opts c;

    auto *      mix = app.add_subcommand("mix", "mix speech and noise at a target SNR");
    std::string mix_speech, mix_noise;
    double      mix_snr      = 10.0;
    bool        mix_truncate = false;
    mix->add_option("--speech", mix_speech, "speech WAV")->required();
    mix->add_option("--noise", mix_noise, "noise WAV")->required();
    mix->add_option("--snr", mix_snr, "target SNR in dB (0..20)")->required();
    mix->add_flag("--truncate", mix_truncate, "truncate noise instead of looping it");
    add_common(mix, c);

    auto *      frg = app.add_subcommand("forge", "build PAQA JSONL with QPT filtering and reflections");
    std::string manifest, review, hook;
    frg->add_option("--manifest", manifest, "JSONL item manifest")->required();
    frg->add_option("--review", review, "reflection review log (default <out>.reflections.jsonl)");
    frg->add_option("--hook", hook, "shell command producing reflection text");
    add_common(frg, c);

    auto *      score = app.add_subcommand("score", "batch reward breakdowns");
    std::string score_in, score_items;
    score->add_option("--in", score_in, "JSONL of {trace, item_id, token_count, trailing}")->required();
    score->add_option("--items", score_items, "PAQA JSONL (overrides dataset.items)");
    add_common(score, c);

    auto *      dsim = app.add_subcommand("decode-sim", "run the decode controller against a scripted model");
    std::string script;
    dsim->add_option("--script", script, "JSONL mock-model script")->required();
    add_common(dsim, c);

    auto *                train = app.add_subcommand("train-toy", "SFT then GRPO on the synthetic environment");
    std::optional<size_t> train_steps;
    std::optional<double> train_tau_abort;
    std::string           checkpoint;
    train->add_option("--steps", train_steps, "override trainer.steps");
    train->add_option("--tau-abort", train_tau_abort, "override decode.tau_abort");
    train->add_option("--checkpoint", checkpoint, "write the final policy here");
    add_common(train, c);

    auto *      ev = app.add_subcommand("eval", "accuracy, consistency, WER/CER and mAP reports");
    std::string ev_items, ev_traces, ev_tags;
    ev->add_option("--items", ev_items, "PAQA JSONL (overrides dataset.items)");
    ev->add_option("--traces", ev_traces, "JSONL of {item_id, trace}")->required();
    ev->add_option("--tags", ev_tags, "JSON {scores, labels} for multi-label mAP");
    add_common(ev, c);

    if (args.empty()) {
        err << app.help();
        return k_exit_validation;
    }

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return k_exit_ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return k_exit_ok;
    } catch (const CLI::ParseError & e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return k_exit_validation;
    }
    if (app.get_subcommands().empty()) {
        err << app.help();
        return k_exit_validation;
    }

    try {
        if (mix->parsed()) {
            return run_mix(c, mix_speech, mix_noise, mix_snr, mix_truncate, out);
        }
        if (frg->parsed()) {
            return run_forge(c, manifest, review, hook, out);
        }
        if (score->parsed()) {
            return run_score(c, score_in, score_items, out);
        }
        if (dsim->parsed()) {
            return run_decode_sim(c, script, out);
        }
        if (train->parsed()) {
            return run_train_toy(c, train_steps, train_tau_abort, checkpoint, out);
        }
        if (ev->parsed()) {
            return run_eval(c, ev_items, ev_traces, ev_tags, out);
        }
    } catch (const error & e) {
        err << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
        return e.code() == errc::io_error ? k_exit_io : k_exit_validation;
    } catch (const std::exception & e) {
        err << "error: " << e.what() << '\n';
        return k_exit_validation;
    }
    err << app.help();
    return k_exit_validation;
}

} // namespace auralrl
