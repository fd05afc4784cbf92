#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capsep/engine.hpp"
#include "capsep/errors.hpp"
#include "capsep/gnn.hpp"
#include "capsep/instance.hpp"
#include "capsep/neural_sep.hpp"
#include "capsep/training.hpp"

namespace capsep::cli {

inline CvrpInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance " + path);
    return parse_cvrplib(in);
}

inline std::vector<CvrpInstance> load_instances(const std::vector<std::string>& paths) {
    std::vector<CvrpInstance> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(load_instance(p));
    return out;
}

inline SeparatorConfig make_separator(const std::string& name, const std::string& checkpoint,
                                      GnnParams& params_slot) {
    SeparatorConfig sep;
    sep.kind = separator_from_string(name);
    if (sep.kind == SeparatorKind::Neural) {
        if (checkpoint.empty())
            throw ValidationError("separator 'neural' requires --checkpoint");
        nn::load_checkpoint_file(params_slot.store, checkpoint);
        sep.params = &params_slot;
    }
    return sep;
}

inline std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

/// Entry point shared by the binary and the in-process CLI tests.
/// Exit status: 0 success, 2 usage/validation error, 1 internal error.
inline int run(int argc, const char* const* argv) {
    CLI::App app{"Cutting-plane lower bounds for CVRP with exact, heuristic, and learned "
                 "rounded-capacity-inequality separation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::uint64_t seed = 0;
    int max_iter = -1; // negative: size-bucketed default
    double time_limit = std::numeric_limits<double>::infinity();
    std::string checkpoint, out_path;
    app.add_option("--seed", seed, "random seed");
    app.add_option("--max-iter", max_iter, "cutting-plane iteration limit");
    app.add_option("--time-limit", time_limit, "wall-clock limit in seconds");
    app.add_option("--checkpoint", checkpoint, "parameter checkpoint file");
    app.add_option("--out", out_path, "output path");

    // generate
    auto* gen = app.add_subcommand("generate", "write random CVRP instances");
    int gen_n = 50, gen_count = 1;
    gen->add_option("--n", gen_n, "customers per instance");
    gen->add_option("--count", gen_count, "number of instances");

    // labels
    auto* labels = app.add_subcommand("labels", "collect exact separation labels");
    std::vector<std::string> label_instances;
    labels->add_option("--instance", label_instances, "instance file (repeatable)")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train the separation policy");
    std::string train_dataset;
    int epochs = 20;
    train_cmd->add_option("--dataset", train_dataset, "dataset file")->required();
    train_cmd->add_option("--epochs", epochs, "training epochs");

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "run the cutting-plane loop on one instance");
    std::string solve_instance, solve_separator = "exact", export_lp_path;
    solve_cmd->add_option("--instance", solve_instance, "instance file")->required();
    solve_cmd->add_option("--separator", solve_separator, "exact|components|greedy|neural");
    solve_cmd->add_option("--export-lp", export_lp_path,
                          "write the final LP (with cut pool) in LP format");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "run several separators on several instances");
    std::vector<std::string> compare_instances;
    std::string compare_separators = "exact,components";
    std::string ub_file;
    int threads = 2;
    compare_cmd->add_option("--instance", compare_instances, "instance file (repeatable)")
        ->required();
    compare_cmd->add_option("--separators", compare_separators, "comma-separated separator list");
    compare_cmd->add_option("--ub-file", ub_file, "best-known upper bounds (name,value lines)");
    compare_cmd->add_option("--threads", threads, "worker threads");

    // sepbench
    auto* bench = app.add_subcommand("sepbench", "separation metrics on a recorded dataset");
    std::string bench_dataset, bench_separators = "exact,components,greedy";
    bench->add_option("--dataset", bench_dataset, "dataset file")->required();
    bench->add_option("--separators", bench_separators, "comma-separated separator list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help();
        return 2;
    }

    try {
        if (gen->parsed()) {
            const std::string dir = out_path.empty() ? "." : out_path;
            std::filesystem::create_directories(dir);
            for (int i = 0; i < gen_count; ++i) {
                const CvrpInstance inst = generate_random(gen_n, seed + static_cast<std::uint64_t>(i));
                std::ofstream out(dir + "/" + inst.name + ".vrp");
                if (!out) throw ValidationError("cannot write instance in " + dir);
                write_cvrplib(inst, out);
                std::cout << dir + "/" + inst.name + ".vrp" << "\n";
            }
            return 0;
        }

        if (labels->parsed()) {
            if (out_path.empty()) throw ValidationError("labels requires --out");
            CollectLimits limits;
            if (max_iter >= 0) limits.max_iter = max_iter;
            if (std::isfinite(time_limit)) limits.sep_time_limit_s = time_limit;
            const Dataset ds = collect_labels(load_instances(label_instances), limits);
            save_dataset_file(ds, out_path);
            std::cout << "collected " << ds.size() << " samples\n";
            return 0;
        }

        if (train_cmd->parsed()) {
            if (out_path.empty()) throw ValidationError("train requires --out");
            const Dataset ds = load_dataset_file(train_dataset);
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.seed = seed;
            cfg.checkpoint_prefix = out_path;
            const TrainResult res = train(ds, cfg);
            nn::save_checkpoint_file(res.params.store, out_path);
            std::cout << "epochs " << res.epoch_loss.size() << " first-loss "
                      << res.epoch_loss.front() << " last-loss " << res.epoch_loss.back() << "\n";
            return 0;
        }

        if (solve_cmd->parsed()) {
            const CvrpInstance inst = load_instance(solve_instance);
            GnnParams params;
            const SeparatorConfig sep = make_separator(solve_separator, checkpoint, params);
            RunLimits limits;
            limits.max_iter = max_iter; // negative picks the size-bucketed default
            limits.time_limit_s = time_limit;
            LpModel final_model;
            const RunTrace trace = cutting_plane(inst, sep, limits,
                                                 export_lp_path.empty() ? nullptr : &final_model);
            if (!export_lp_path.empty()) {
                std::ofstream lp_out(export_lp_path);
                if (!lp_out) throw ValidationError("cannot write LP export " + export_lp_path);
                final_model.write_lp(lp_out);
            }
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) throw ValidationError("cannot write trace " + out_path);
                write_trace_csv(trace, out);
            }
            std::cout << inst.name << " lb " << trace.final_lb << " iterations "
                      << trace.records.size() << " termination " << trace.termination << "\n";
            return 0;
        }

        if (compare_cmd->parsed()) {
            const auto instances = load_instances(compare_instances);
            std::vector<GnnParams> params_slots;
            std::vector<SeparatorConfig> seps;
            const auto names = split_list(compare_separators);
            params_slots.reserve(names.size());
            for (const auto& name : names) {
                params_slots.emplace_back();
                seps.push_back(make_separator(name, checkpoint, params_slots.back()));
            }
            std::map<std::string, double> ubs;
            if (!ub_file.empty()) {
                std::ifstream in(ub_file);
                if (!in) throw ValidationError("cannot read ub file " + ub_file);
                ubs = load_ub_file(in);
            }
            RunLimits limits;
            limits.max_iter = max_iter;
            limits.time_limit_s = time_limit;
            const auto rows =
                run_compare(instances, seps, limits, ubs, static_cast<unsigned>(threads));
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) throw ValidationError("cannot write summary " + out_path);
                write_summary_csv(rows, out);
            } else {
                write_summary_csv(rows, std::cout);
            }
            return 0;
        }

        if (bench->parsed()) {
            const Dataset ds = load_dataset_file(bench_dataset);
            const auto cases = support_cases(ds);
            std::ostringstream csv;
            csv << "separator,avg_violation,cut_count,success_rate\n";
            csv.precision(10);
            for (const auto& name : split_list(bench_separators)) {
                GnnParams params;
                const SeparatorConfig sep = make_separator(name, checkpoint, params);
                const SeparationMetrics m = separation_metrics(cases, sep);
                csv << name << "," << m.avg_violation << "," << m.cut_count << ","
                    << m.success_rate << "\n";
            }
            if (!out_path.empty()) {
                std::ofstream out(out_path);
                if (!out) throw ValidationError("cannot write metrics " + out_path);
                out << csv.str();
            } else {
                std::cout << csv.str();
            }
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ShapeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace capsep::cli
