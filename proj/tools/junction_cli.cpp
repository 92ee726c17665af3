// Command-line driver for the thin-junction asymptotics pipeline.
//
// Subcommands:
//   validate  check the configuration against the standing assumptions
//   limit     solve the limit problem on the graph
//   expand    regular terms w_k / u_k up to a given order (optionally
//             evaluate the composite on a point grid)
//   node      solve one inner (node) term with diagnostics
//   verify    residual norms over an eps sweep with rate verdicts
//   run       full pipeline; writes a manifest
//
// Exit codes: 0 success, 1 validation failure, 2 solver failure,
// 3 verification verdict failure.

#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "junction/pipeline.hpp"

namespace {

using namespace junction;

std::vector<double> parse_eps_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw CLI::ValidationError("--eps", "empty eps list");
    return out;
}

std::vector<int> parse_order_range(const std::string& s) {
    auto dots = s.find("..");
    std::vector<int> out;
    if (dots == std::string::npos) {
        out.push_back(std::stoi(s));
        return out;
    }
    int a = std::stoi(s.substr(0, dots));
    int b = std::stoi(s.substr(dots + 2));
    for (int k = a; k <= b; ++k) out.push_back(k);
    return out;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double lap() {
        auto t1 = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(t1 - t0).count();
        t0 = t1;
        return s;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Asymptotic expansion pipeline for convection-dominated transport in a thin junction"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    app.add_option("--config", config_path, "configuration file (JSON)")->required();
    app.add_option("--out", out_dir, "output directory");

    auto* cmd_validate = app.add_subcommand("validate", "check the standing assumptions");
    std::string eps_str = "0.2,0.1,0.05,0.025";
    cmd_validate->add_option("--eps", eps_str, "comma separated eps values");

    auto* cmd_limit = app.add_subcommand("limit", "solve the limit problem on the graph");

    auto* cmd_expand = app.add_subcommand("expand", "regular expansion terms");
    int order = 1;
    std::string eval_file;
    double eval_eps = 0.1;
    cmd_expand->add_option("--order", order, "expansion order m");
    cmd_expand->add_option("--eval", eval_file, "CSV of points x1,x2,x3 to evaluate the composite at");
    cmd_expand->add_option("--eps", eval_eps, "eps for --eval");

    auto* cmd_node = app.add_subcommand("node", "solve one inner term");
    int node_order = 0;
    double trunc = 8.0;
    int resolution = 16;
    cmd_node->add_option("--order", node_order, "inner term order k");
    cmd_node->add_option("--trunc", trunc, "truncation length L");
    cmd_node->add_option("--resolution", resolution, "cells per ell0");

    auto* cmd_verify = app.add_subcommand("verify", "residual norms and rate verdicts");
    std::string orders_str = "0..2";
    cmd_verify->add_option("--orders", orders_str, "order range A..B");
    cmd_verify->add_option("--eps", eps_str, "comma separated eps values");
    cmd_verify->add_option("--trunc", trunc, "truncation length L");
    cmd_verify->add_option("--resolution", resolution, "cells per ell0");

    auto* cmd_run = app.add_subcommand("run", "full pipeline");
    cmd_run->add_option("--order", order, "expansion order m");
    cmd_run->add_option("--eps", eps_str, "comma separated eps values");
    cmd_run->add_option("--trunc", trunc, "truncation length L");
    cmd_run->add_option("--resolution", resolution, "cells per ell0");

    CLI11_PARSE(app, argc, argv);

    try {
        Config cfg = load_spec(config_path);
        PipelineOptions opts;
        opts.eps_list = parse_eps_list(eps_str);
        opts.trunc_length = trunc;
        opts.resolution = resolution;
        opts.out_dir = out_dir;

        if (cmd_validate->parsed()) {
            ValidationReport rep = validate_assumptions(cfg, opts.eps_list);
            OutputWriter out(out_dir);
            out.write_json("validation.json", validation_to_json(rep));
            for (const auto& c : rep.checks)
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.id << ": " << c.detail << "\n";
            if (!rep.all_pass()) return 1;
            std::cout << "all assumptions hold\n";
            return 0;
        }

        if (cmd_limit->parsed()) {
            ValidationReport rep = validate_assumptions(cfg, opts.eps_list);
            if (!rep.all_pass()) {
                for (const auto& c : rep.checks)
                    if (!c.pass) std::cerr << "FAIL " << c.id << ": " << c.detail << "\n";
                return 1;
            }
            LimitSolution limit = solve_limit(cfg);
            OutputWriter out(out_dir);
            write_limit_outputs(out, cfg, limit);
            std::cout << "C = (" << limit.C[0] << ", " << limit.C[1] << ", " << limit.C[2] << ")\n";
            std::cout << "kirchhoff residual = "
                      << kirchhoff_residual(limit.w0_at_zero(), cfg.spec, cfg.velocity) << "\n";
            return 0;
        }

        if (cmd_expand->parsed()) {
            opts.order = order;
            bool need_node = !eval_file.empty();
            PipelineState st = prepare_state(std::move(cfg), opts, need_node);
            OutputWriter out(out_dir);
            write_limit_outputs(out, st.cfg, st.expansion.limit);
            write_expand_outputs(out, st.cfg, st.expansion);
            if (!eval_file.empty()) {
                CompositeApproximation approx = make_composite(st, order, eval_eps);
                std::ifstream in(eval_file);
                if (!in) throw ConfigError("cannot open eval grid file " + eval_file);
                auto csv = out.open("composite_eval.csv");
                csv << "x1,x2,x3,value\n";
                std::string line;
                while (std::getline(in, line)) {
                    if (line.empty() || line[0] == 'x' || line[0] == '#') continue;
                    std::stringstream ss(line);
                    std::string tok;
                    Vec3 x;
                    for (int d = 0; d < 3; ++d) {
                        std::getline(ss, tok, ',');
                        x[d] = std::stod(tok);
                    }
                    csv << x[0] << "," << x[1] << "," << x[2] << "," << approx.evaluate(x) << "\n";
                }
                auto avg = out.open("cross_section_averages.csv");
                avg << "edge,x,average\n";
                for (int j = 0; j < 3; ++j)
                    for (int i = 0; i <= 128; ++i) {
                        double lo = eval_eps * st.cfg.spec.ell0 * 1.01;
                        double x = lo + (st.cfg.spec.ell[static_cast<std::size_t>(j)] - lo) * i / 128.0;
                        avg << j + 1 << "," << x << "," << approx.cross_section_average(j, x) << "\n";
                    }
            }
            std::cout << "expansion up to order " << order << " written to " << out_dir << "\n";
            return 0;
        }

        if (cmd_node->parsed()) {
            opts.order = node_order;
            PipelineState st = prepare_state(std::move(cfg), opts, true);
            OutputWriter out(out_dir);
            write_node_outputs(out, st, node_order);
            const NodeTerm& term = *st.node_terms[static_cast<std::size_t>(node_order)];
            std::cout << "order " << node_order << ": solvability residual " << term.solvability_residual
                      << ", cap mismatch " << term.cap_mismatch << "\n";
            return 0;
        }

        if (cmd_verify->parsed() || cmd_run->parsed()) {
            Timer timer;
            RunManifest manifest;
            manifest.config_hash = fnv1a64(cfg.raw.dump());
            std::vector<int> orders =
                cmd_verify->parsed() ? parse_order_range(orders_str) : std::vector<int>{};
            if (cmd_run->parsed())
                for (int k = 0; k <= order; ++k) orders.push_back(k);
            opts.order = 0;
            for (int k : orders) opts.order = std::max(opts.order, k);
            manifest.parameters = {{"orders", orders},
                                   {"eps", opts.eps_list},
                                   {"trunc", opts.trunc_length},
                                   {"resolution", opts.resolution}};
            PipelineState st = prepare_state(std::move(cfg), opts, true);
            manifest.timings_seconds["prepare"] = timer.lap();
            OutputWriter out(out_dir);
            out.write_json("validation.json", validation_to_json(st.validation));
            write_limit_outputs(out, st.cfg, st.expansion.limit);
            write_expand_outputs(out, st.cfg, st.expansion);
            for (int k = 0; k <= opts.order; ++k) write_node_outputs(out, st, k);
            manifest.timings_seconds["outputs"] = timer.lap();
            VerifyResult vr = run_verification(st, orders, opts.eps_list, opts.verification);
            manifest.timings_seconds["verification"] = timer.lap();
            write_verify_outputs(out, vr);
            manifest.outputs = out.outputs();
            if (cmd_run->parsed()) {
                OutputWriter mout(out_dir);
                mout.write_json("manifest.json", manifest.to_json());
            }
            std::cout << (vr.all_pass ? "verification PASS" : "verification FAIL") << "\n";
            for (const auto& r : vr.reports)
                std::cout << "  m=" << r.order << " eps=" << r.eps << "  |R1|=" << r.r1[0] << "/" << r.r1[1]
                          << "/" << r.r1[2] << "  |R4|=" << r.r4[0] << "/" << r.r4[1] << "/" << r.r4[2]
                          << "\n";
            return vr.all_pass ? 0 : 3;
        }
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
