// Command-line harness: synthetic data generation, single solves, sweeps,
// plot emission and the entropic-approximation diagnostics.

#include "lrot/experiments.hpp"
#include "lrot/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <omp.h>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace lrot;

namespace {

int cmd_gen(const ExperimentConfig& cfg, unsigned long seed)
{
    const GeneratedProblem prob = generate(cfg, seed);
    fs::create_directories(cfg.out_dir);
    const fs::path out(cfg.out_dir);
    if (prob.cost.has_value())
        io::write_csv(out / "cost.csv", *prob.cost);
    if (prob.X.points.size() > 0) {
        io::write_csv(out / "X.csv", prob.X.points);
        io::write_csv(out / "Y.csv", prob.Y.points);
    }
    io::write_csv(out / "a.csv", prob.a.w());
    io::write_csv(out / "b.csv", prob.b.w());
    std::cout << "wrote " << cfg.family << " instance (n=" << cfg.n << ", m=" << cfg.m
              << ") to " << cfg.out_dir << "\n";
    return 0;
}

CostOperator load_cost(const std::string& cost_csv, const std::string& factor_a,
                       const std::string& factor_b)
{
    if (!cost_csv.empty())
        return CostOperator::dense(io::read_matrix_csv(cost_csv));
    require(!factor_a.empty() && !factor_b.empty(),
            "solve: provide --cost or both --factor-a and --factor-b");
    return CostOperator::factored(io::read_matrix_csv(factor_a),
                                  io::read_matrix_csv(factor_b));
}

int cmd_solve(const std::string& method, const std::string& cost_csv,
              const std::string& factor_a, const std::string& factor_b,
              const std::string& a_csv, const std::string& b_csv, Index rank,
              double epsilon, double alpha, double gamma, long max_outer,
              unsigned long seed, const std::string& out_dir)
{
    const CostOperator C = load_cost(cost_csv, factor_a, factor_b);
    const Histogram a(io::read_vector_csv(a_csv));
    const Histogram b(io::read_vector_csv(b_csv));
    fs::create_directories(out_dir);
    const fs::path out(out_dir);

    auto finish_lot = [&](const LotResult& res) {
        io::FactoredCouplingManifest manifest;
        manifest.rank = res.coupling.rank();
        manifest.epsilon = epsilon;
        manifest.alpha = alpha;
        manifest.seed = seed;
        manifest.cost = res.cost;
        io::write_factored_coupling(out, res.coupling, manifest);
        io::write_report(out / "report.json", res.report);
        std::cout << "cost " << io::format_double(res.cost) << " ("
                  << res.report.objective.size() << " outer iterations)\n";
    };

    LotConfig cfg;
    cfg.rank = rank;
    cfg.epsilon = epsilon;
    cfg.alpha = std::min(alpha, 1.0 / static_cast<double>(std::max<Index>(rank, 1)));
    cfg.max_outer = max_outer;
    cfg.seed = seed;
    if (gamma > 0.0) {
        cfg.step_rule = StepRule::Constant;
        cfg.gamma = gamma;
    }

    if (method == "lot") {
        finish_lot(lot_solve(C, a, b, cfg));
        return 0;
    }
    if (method == "lot-ibp") {
        finish_lot(lot_ibp_solve(C, a, b, cfg));
        return 0;
    }
    if (method == "lot-f") {
        FixedMarginalConfig fm;
        fm.epsilon = epsilon;
        fm.gamma = gamma;
        fm.max_outer = max_outer;
        fm.seed = seed;
        const Histogram g = Histogram::uniform(rank);
        auto res = lot_fixed_marginal(C, a, b, g, fm);
        FactoredCoupling fc{res.Q, res.R, g.w()};
        io::FactoredCouplingManifest manifest;
        manifest.rank = rank;
        manifest.epsilon = epsilon;
        manifest.alpha = 0.0;
        manifest.seed = seed;
        manifest.cost = res.cost;
        io::write_factored_coupling(out, fc, manifest);
        io::write_report(out / "report.json", res.report);
        std::cout << "cost " << io::format_double(res.cost) << "\n";
        return 0;
    }
    if (method == "sinkhorn") {
        auto res = entropic_ot(C, a, b, epsilon, 1e-9);
        io::write_csv(out / "coupling.csv", res.coupling);
        io::write_report(out / "report.json", res.report);
        std::cout << "cost " << io::format_double(res.cost) << "\n";
        return 0;
    }
    if (method == "gw" || method == "gw-quad") {
        // cost.csv holds D and b-side factors/matrix hold D'
        GwProblem prob =
            method == "gw"
                ? GwProblem::dense(io::read_matrix_csv(cost_csv),
                                   io::read_matrix_csv(factor_b), a, b)
                : GwProblem::factored(io::read_matrix_csv(factor_a),
                                      io::read_matrix_csv(factor_b), a, b);
        GwSchedule sched;
        sched.outer_iterations = max_outer;
        sched.sinkhorn_precisions = {1e-9};
        if (epsilon > 0.0)
            sched.steps.assign(1, 1.0 / epsilon);
        auto res = method == "gw" ? gw_mirror_descent(prob, sched)
                                  : gw_quadratic(prob, sched);
        io::write_csv(out / "coupling.csv", res.coupling);
        io::write_report(out / "report.json", res.report);
        std::cout << "energy " << io::format_double(res.energy) << "\n";
        return 0;
    }
    if (method == "gw-lr") {
        GwProblem prob = GwProblem::factored(io::read_matrix_csv(factor_a),
                                             io::read_matrix_csv(factor_b), a, b);
        GwLowRankConfig lr;
        lr.max_outer = max_outer;
        lr.gamma = gamma;
        lr.seed = seed;
        const Histogram g = Histogram::uniform(rank);
        auto res = gw_lowrank_fixed_marginal(prob, g, lr);
        FactoredCoupling fc{res.Q, res.R, g.w()};
        io::FactoredCouplingManifest manifest;
        manifest.rank = rank;
        manifest.epsilon = epsilon;
        manifest.alpha = 0.0;
        manifest.seed = seed;
        manifest.cost = res.energy;
        io::write_factored_coupling(out, fc, manifest);
        io::write_report(out / "report.json", res.report);
        std::cout << "energy " << io::format_double(res.energy) << "\n";
        return 0;
    }
    std::cerr << "unknown method " << method << "\n";
    return 2;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"low-rank optimal transport toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "OpenMP thread count (0: library default)");

    std::string config_path;
    std::string out_dir = "results";
    unsigned long seed = 0;

    auto* gen = app.add_subcommand("gen", "generate a synthetic instance");
    std::string family = "gmm-2d";
    Index gen_n = 100, gen_m = 100;
    gen->add_option("--family", family,
                    "gmm-1d-grid | gaussian-2d | gmm-2d | gmm-10d | graph-split");
    gen->add_option("--n", gen_n, "source size");
    gen->add_option("--m", gen_m, "target size");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--out", out_dir, "output directory");

    auto* solve = app.add_subcommand("solve", "run one solver on files");
    std::string method = "lot", cost_csv, fa_csv, fb_csv, a_csv, b_csv;
    Index rank = 2;
    double epsilon = 0.0, alpha = 1e-5, gamma = 0.0;
    long max_outer = 2000;
    solve->add_option("--method", method,
                      "sinkhorn | lot | lot-f | lot-ibp | gw | gw-quad | gw-lr");
    solve->add_option("--cost", cost_csv, "dense cost CSV (D for gw)");
    solve->add_option("--factor-a", fa_csv, "left cost factor CSV");
    solve->add_option("--factor-b", fb_csv, "right cost factor CSV (D' for gw)");
    solve->add_option("--a", a_csv, "source histogram CSV")->required();
    solve->add_option("--b", b_csv, "target histogram CSV")->required();
    solve->add_option("--rank", rank, "coupling rank");
    solve->add_option("--epsilon", epsilon, "entropic regularization");
    solve->add_option("--alpha", alpha, "lower bound on the inner marginal");
    solve->add_option("--gamma", gamma, "mirror-descent step (0: theoretical)");
    solve->add_option("--max-outer", max_outer, "outer iteration cap");
    solve->add_option("--seed", seed, "RNG seed");
    solve->add_option("--out", out_dir, "output directory");

    auto* sweep = app.add_subcommand("sweep", "run a configured solver sweep");
    sweep->add_option("--config", config_path, "JSON experiment config")->required();
    std::string sweep_out;
    sweep->add_option("--out", sweep_out, "output directory override");

    auto* plot = app.add_subcommand("plot", "emit SVG charts from a results table");
    std::string results_dir;
    plot->add_option("--results", results_dir, "sweep output directory")->required();

    auto* check = app.add_subcommand("check", "run the lemma-inequality diagnostics");
    check->add_option("--seed", seed, "RNG seed");

    CLI11_PARSE(app, argc, argv);
    if (threads > 0)
        omp_set_num_threads(threads);

    try {
        if (gen->parsed()) {
            ExperimentConfig cfg;
            cfg.family = family;
            cfg.n = gen_n;
            cfg.m = family == "graph-split" ? gen_n : gen_m;
            cfg.out_dir = out_dir;
            cfg.validate();
            return cmd_gen(cfg, seed);
        }
        if (solve->parsed())
            return cmd_solve(method, cost_csv, fa_csv, fb_csv, a_csv, b_csv, rank,
                             epsilon, alpha, gamma, max_outer, seed, out_dir);
        if (sweep->parsed()) {
            ExperimentConfig cfg = ExperimentConfig::from_json_file(config_path);
            if (!sweep_out.empty())
                cfg.out_dir = sweep_out;
            const SweepResult res = run_sweep(cfg);
            write_sweep_outputs(cfg, res);
            long failed = 0;
            for (const auto& row : res.rows)
                if (!row.ok())
                    ++failed;
            std::cout << res.rows.size() << " cells, " << failed << " failed; results in "
                      << cfg.out_dir << "\n";
            return res.all_ok ? 0 : 1;
        }
        if (plot->parsed()) {
            // rebuild the chart files from a previously written results.csv
            const fs::path dir(results_dir);
            SweepResult res;
            std::ifstream in(dir / "results.csv");
            require(in.good(), "plot: cannot open " + (dir / "results.csv").string());
            std::string line;
            std::getline(in, line);  // header
            while (std::getline(in, line)) {
                if (line.empty())
                    continue;
                SweepRow row;
                size_t pos = 0;
                auto next = [&]() {
                    const size_t c = line.find(',', pos);
                    std::string tok = line.substr(pos, c - pos);
                    pos = c == std::string::npos ? line.size() : c + 1;
                    return tok;
                };
                row.method = next();
                row.rank = std::stol(next());
                row.epsilon = std::stod(next());
                row.seed = std::stoul(next());
                row.cost = std::stod(next());
                const std::string ratio_tok = next();
                row.ratio = ratio_tok == "nan" ? 0.0 : std::stod(ratio_tok);
                row.coupling_l1 = std::stod(next());
                row.wall_seconds = std::stod(next());
                row.iterations = std::stol(next());
                row.error = pos < line.size() ? line.substr(pos) : "";
                res.rows.push_back(std::move(row));
            }
            require(!res.rows.empty(), "plot: empty results table");
            if (fs::exists(dir / "manifest.json")) {
                std::ifstream mf(dir / "manifest.json");
                std::string text((std::istreambuf_iterator<char>(mf)),
                                 std::istreambuf_iterator<char>());
                const auto j = nlohmann::json::parse(text);
                res.reference_cost = j.value("reference_cost", 0.0);
            }
            emit_plots(res, dir / "plots");
            std::cout << "plots written to " << (dir / "plots").string() << "\n";
            return 0;
        }
        if (check->parsed()) {
            const auto checks = run_lemma_checks(seed);
            bool all = true;
            for (const auto& c : checks) {
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name
                          << "  lhs=" << io::format_double(c.lhs)
                          << " rhs=" << io::format_double(c.rhs) << "\n";
                all = all && c.pass;
            }
            return all ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
