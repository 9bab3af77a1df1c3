#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "fdctmc/io.hpp"
#include "fdctmc/models.hpp"
#include "fdctmc/simulator.hpp"

namespace fdctmc {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::validation, "cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::validation, "cannot write file '" + path + "'");
    out << text;
}

struct PreparedModel {
    FdCtmc model;
    StateClassification cls;
};

PreparedModel prepare(const std::string& path) {
    FdCtmc c = parse_model(slurp(path)).to_fdctmc();
    StateClassification cls = classify(c);
    FdCtmc pruned = prune_unreachable(c, cls);
    StateClassification cls2 = classify(pruned);
    return {std::move(pruned), std::move(cls2)};
}

int run_synth(const std::string& model_path, double epsilon, double delta, double tau_max,
              double kappa, const std::string& mode, const std::string& out_path) {
    PreparedModel pm = prepare(model_path);
    DiscretizationParams params;
    params.epsilon = epsilon;
    params.delta = delta;
    params.tau_max = tau_max;
    params.kappa = kappa > 0 ? kappa : epsilon / 100.0;

    PolicyOptions opts;
    opts.mode = mode == "explicit" ? ImproveMode::explicit_enumeration : ImproveMode::symbolic;

    auto t0 = std::chrono::steady_clock::now();
    SynthesisReport rep = synthesize(pm.model, params, opts);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "states: " << pm.model.num_states() << "  mdp states: " << pm.cls.mdp_size()
              << "  I: " << rep.trunc_index << "  grid: " << params.grid_count() << "\n";
    std::cout << "mode: " << mode << "  iterations: " << rep.iterations << "  time: " << secs
              << " s\n";
    for (size_t i = 0; i < rep.per_iteration.size(); ++i) {
        const IterationStats& st = rep.per_iteration[i];
        std::cout << "  iter " << (i + 1) << ": value " << st.value_at_initial << "  max degree "
                  << st.max_degree << "  roots " << st.num_roots << "  candidates " << st.candidates
                  << "\n";
    }
    if (rep.initial_is_target)
        std::cout << "note: the initial state is a target; the value counts one transition\n";
    std::cout << "value: " << rep.value_at_initial << "\n";
    for (int s = 0; s < pm.model.num_states(); ++s)
        if (rep.delays.has(s) && !std::isinf(rep.delays.tau[s]))
            std::cout << "d(" << pm.model.states[s] << ") = " << rep.delays.tau[s] << "\n";
    if (!out_path.empty()) spit(out_path, report_to_json(rep, params, pm.model));
    return 0;
}

int run_eval(const std::string& model_path, const std::string& delays_path, double tau_max,
             double kappa) {
    PreparedModel pm = prepare(model_path);
    DelayFunction d = parse_delays(slurp(delays_path), pm.model, pm.cls);
    double max_delay = 0;
    for (int s = 0; s < pm.model.num_states(); ++s)
        if (pm.cls.s_set[s]) max_delay = std::max(max_delay, d.tau[s]);
    DiscretizationParams params;
    params.tau_max = tau_max > 0 ? tau_max : std::max(max_delay, 1e-9);
    params.delta = params.tau_max;
    params.kappa = kappa;
    params.epsilon = 1.0;

    EmbeddedKernel kernel(pm.model, pm.cls, params);
    ValueVector x = policy_evaluate(kernel, pm.model, d);
    std::cout << "value: " << report_value(kernel, pm.model, d, x) << "\n";
    return 0;
}

int run_simulate(const std::string& model_path, const std::string& delays_path, long runs,
                 std::uint64_t seed, long step_cap, double cost_cap, const std::string& out_path) {
    PreparedModel pm = prepare(model_path);
    DelayFunction d = parse_delays(slurp(delays_path), pm.model, pm.cls);
    double fallback = 1.0;
    for (int s = 0; s < pm.model.num_states(); ++s)
        if (pm.cls.s_set[s]) fallback = std::max(fallback, d.tau[s]);
    d = extend_delays(pm.model, pm.cls, std::move(d), fallback);

    SimConfig cfg;
    cfg.runs = runs;
    cfg.seed = seed;
    cfg.step_cap = step_cap;
    cfg.cost_cap = cost_cap;
    SimEstimate est = estimate(pm.model, d, cfg);
    std::cout << "mean: " << est.mean << "\nstd_error: " << est.std_error
              << "\ntruncated_runs: " << est.truncated_runs << " of " << est.runs << "\n";
    if (!out_path.empty()) {
        char buf[256];
        std::snprintf(buf, sizeof buf,
                      "{\n  \"format\": 1,\n  \"mean\": %.9g,\n  \"std_error\": %.9g,\n"
                      "  \"truncated_runs\": %ld,\n  \"runs\": %ld\n}\n",
                      est.mean, est.std_error, est.truncated_runs, est.runs);
        spit(out_path, buf);
    }
    return 0;
}

void emit_model(const RateModel& m, const std::string& out_path) {
    std::string text = serialize_model(m);
    if (out_path.empty())
        std::cout << text;
    else
        spit(out_path, text);
}

int run_bench(const std::string& suite) {
    auto one = [](const RateModel& rm, double epsilon, double delta, double tau_max) {
        FdCtmc c = uniformize(rm);
        StateClassification cls = classify(c);
        c = prune_unreachable(c, cls);
        DiscretizationParams params;
        params.epsilon = epsilon;
        params.delta = delta;
        params.tau_max = tau_max;
        params.kappa = epsilon / 100.0;
        long roots = 0, deg = 0;
        double t_sym = 0, t_exp = 0;
        double value = 0;
        {
            PolicyOptions opts;
            opts.mode = ImproveMode::symbolic;
            auto t0 = std::chrono::steady_clock::now();
            SynthesisReport rep = synthesize(c, params, opts);
            t_sym = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            for (const auto& st : rep.per_iteration) {
                roots = std::max(roots, st.num_roots);
                deg = std::max(deg, st.max_degree);
            }
            value = rep.value_at_initial;
        }
        {
            PolicyOptions opts;
            opts.mode = ImproveMode::explicit_enumeration;
            auto t0 = std::chrono::steady_clock::now();
            (void)synthesize(c, params, opts);
            t_exp = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        std::printf("%8d %8ld %10ld %8ld %10.2f %10.2f %14.6f\n", c.num_states(), roots, deg,
                    params.grid_count(), t_sym, t_exp, value);
    };

    std::printf("%8s %8s %10s %8s %10s %10s %14s\n", "states", "roots", "max.deg", "grid",
                "sym[s]", "expl[s]", "value");
    if (suite == "protocol") {
        for (int n = 1; n <= 3; ++n) {
            ProtocolParams pp;
            pp.n_bobs = n;
            one(gen_protocol(pp), 1e-2, 0.01, 20.0);
        }
    } else if (suite == "dpm") {
        for (int n : {2, 4}) {
            DpmParams dp;
            dp.n = n;
            one(gen_dpm(dp), 5e-3, 0.01, 10.0);
        }
    } else {
        raise(ErrorCode::validation, "unknown bench suite '" + suite + "' (use protocol or dpm)");
    }
    return 0;
}

}  // namespace

int cli_main(int argc, char** argv) {
    CLI::App app{"Timeout synthesis for CTMCs with fixed-delay transitions"};
    app.require_subcommand(1);

    std::string model_path, delays_path, out_path, mode = "symbolic", suite;
    double epsilon = 1e-2, delta = 0, tau_max = 0, kappa = 0;
    long runs = 1000000, step_cap = 10000000;
    std::uint64_t seed = 0;
    double cost_cap = 1e12;

    CLI::App* synth = app.add_subcommand("synth", "synthesize epsilon-optimal timeouts");
    synth->add_option("model", model_path)->required();
    synth->add_option("--epsilon", epsilon)->required();
    synth->add_option("--delta", delta)->required();
    synth->add_option("--tau-max", tau_max)->required();
    synth->add_option("--kappa", kappa);
    synth->add_option("--mode", mode)->check(CLI::IsMember({"symbolic", "explicit"}));
    synth->add_option("--out", out_path);

    CLI::App* eval = app.add_subcommand("eval", "evaluate a fixed delay function");
    eval->add_option("model", model_path)->required();
    eval->add_option("--delays", delays_path)->required();
    eval->add_option("--tau-max", tau_max);
    eval->add_option("--kappa", kappa)->default_val(1e-9);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of the expected cost");
    simulate->add_option("model", model_path)->required();
    simulate->add_option("--delays", delays_path)->required();
    simulate->add_option("--runs", runs);
    simulate->add_option("--seed", seed);
    simulate->add_option("--step-cap", step_cap);
    simulate->add_option("--cost-cap", cost_cap);
    simulate->add_option("--out", out_path);

    CLI::App* gen = app.add_subcommand("gen", "generate a benchmark model");
    ProtocolParams pp;
    DpmParams dp;
    CLI::App* gen_proto = gen->add_subcommand("protocol", "connection establishment protocol");
    gen_proto->add_option("--n-bobs", pp.n_bobs);
    gen_proto->add_option("--p", pp.p);
    gen_proto->add_option("--q", pp.q);
    gen_proto->add_option("--lambda", pp.lambda);
    gen_proto->add_option("--rate-cost", pp.rate_cost);
    gen_proto->add_option("--fd-impulse", pp.fd_impulse);
    gen_proto->add_option("--out", out_path);
    CLI::App* gen_dpm_cmd = gen->add_subcommand("dpm", "disk power manager queue");
    gen_dpm_cmd->add_option("--n", dp.n);
    gen_dpm_cmd->add_option("--arrival", dp.arrival_rate);
    gen_dpm_cmd->add_option("--service", dp.service_rate);
    gen_dpm_cmd->add_option("--energy-busy", dp.energy_busy);
    gen_dpm_cmd->add_option("--energy-idle", dp.energy_idle);
    gen_dpm_cmd->add_option("--energy-sleep", dp.energy_sleep);
    gen_dpm_cmd->add_option("--energy-acc", dp.energy_acc);
    gen_dpm_cmd->add_option("--out", out_path);
    gen->require_subcommand(1);

    CLI::App* bench = app.add_subcommand("bench", "timing sweeps over the benchmark families");
    bench->add_option("suite", suite)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return run_synth(model_path, epsilon, delta, tau_max, kappa, mode, out_path);
        if (eval->parsed()) return run_eval(model_path, delays_path, tau_max, kappa);
        if (simulate->parsed())
            return run_simulate(model_path, delays_path, runs, seed, step_cap, cost_cap, out_path);
        if (gen->parsed()) {
            if (gen_proto->parsed()) emit_model(gen_protocol(pp), out_path);
            if (gen_dpm_cmd->parsed()) emit_model(gen_dpm(dp), out_path);
            return 0;
        }
        if (bench->parsed()) return run_bench(suite);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

}  // namespace fdctmc
