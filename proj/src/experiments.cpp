#include "lrot/experiments.hpp"

#include "lrot/io.hpp"
#include "lrot/kernels.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace lrot {

using nlohmann::json;

namespace {

Matrix sample_mixture(Index count, const std::vector<Vector>& means, double var,
                      Index dim, std::mt19937_64& rng, std::vector<int>& labels)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(var));
    std::uniform_int_distribution<size_t> pick(0, means.size() - 1);
    Matrix pts(count, dim);
    labels.resize(static_cast<size_t>(count));
    for (Index i = 0; i < count; ++i) {
        const size_t c = pick(rng);
        labels[static_cast<size_t>(i)] = static_cast<int>(c);
        for (Index k = 0; k < dim; ++k) {
            const double mean = k < means[c].size() ? means[c][k] : 0.0;
            pts(i, k) = mean + normal(rng);
        }
    }
    return pts;
}

Vector make2(double x, double y)
{
    Vector v(2);
    v << x, y;
    return v;
}

}  // namespace

GeneratedProblem gen_gaussian_mixture(Index n, Index m, Index dim, unsigned long seed)
{
    require(n >= 2 && m >= 2, "gen_gaussian_mixture: sizes must be >= 2");
    require(dim >= 2, "gen_gaussian_mixture: dimension must be >= 2");
    std::mt19937_64 rng(seed);
    const std::vector<Vector> source{make2(0.0, 0.0), make2(0.0, 1.0), make2(1.0, 1.0)};
    const std::vector<Vector> target{make2(0.5, 0.5), make2(-0.5, 0.5)};
    GeneratedProblem prob{PointCloud{}, PointCloud{}, Histogram::uniform(n),
                          Histogram::uniform(m), std::nullopt, {}, {}};
    prob.X.points = sample_mixture(n, source, 0.05, dim, rng, prob.labels_x);
    prob.Y.points = sample_mixture(m, target, 0.05, dim, rng, prob.labels_y);
    return prob;
}

GeneratedProblem gen_gaussian_pair(Index n, Index m, Index dim, unsigned long seed)
{
    require(n >= 2 && m >= 2, "gen_gaussian_pair: sizes must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    GeneratedProblem prob{PointCloud{}, PointCloud{}, Histogram::uniform(n),
                          Histogram::uniform(m), std::nullopt, {}, {}};
    prob.X.points.resize(n, dim);
    prob.Y.points.resize(m, dim);
    for (Index i = 0; i < n; ++i)
        for (Index k = 0; k < dim; ++k)
            prob.X.points(i, k) = 1.0 + normal(rng);
    const double sd = std::sqrt(0.1);
    for (Index j = 0; j < m; ++j)
        for (Index k = 0; k < dim; ++k)
            prob.Y.points(j, k) = sd * normal(rng);
    return prob;
}

GeneratedProblem gen_gmm_grid_1d(Index n, Index m)
{
    require(n >= 2 && m >= 2, "gen_gmm_grid_1d: sizes must be >= 2");
    auto density = [](double x, const std::vector<double>& means, double sd) {
        double acc = 0.0;
        for (double mu : means)
            acc += std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd));
        return acc / static_cast<double>(means.size());
    };
    const std::vector<double> source_means{0.2, 0.5, 0.8};
    const std::vector<double> target_means{0.35, 0.65};

    GeneratedProblem prob{PointCloud{}, PointCloud{}, Histogram::uniform(n),
                          Histogram::uniform(m), std::nullopt, {}, {}};
    prob.X.points.resize(n, 1);
    prob.Y.points.resize(m, 1);
    Vector wa(n), wb(m);
    for (Index i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n - 1);
        prob.X.points(i, 0) = x;
        wa[i] = density(x, source_means, 0.08);
    }
    for (Index j = 0; j < m; ++j) {
        const double y = static_cast<double>(j) / static_cast<double>(m - 1);
        prob.Y.points(j, 0) = y;
        wb[j] = density(y, target_means, 0.1);
    }
    prob.a = Histogram(wa / wa.sum());
    prob.b = Histogram(wb / wb.sum());
    return prob;
}

GeneratedProblem gen_graph_split(Index n, unsigned long seed)
{
    require(n >= 2, "gen_graph_split: n must be >= 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index total = 2 * n;
    Matrix pts(total, 2);
    for (Index i = 0; i < total; ++i) {
        pts(i, 0) = normal(rng);
        pts(i, 1) = normal(rng);
    }
    Matrix W = kernels::pairwise_sqeuclid(pts, pts);
    kernels::floyd_warshall(W);

    std::vector<Index> order(static_cast<size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);

    Matrix block(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            block(i, j) = W(order[static_cast<size_t>(i)],
                            order[static_cast<size_t>(n + j)]);

    GeneratedProblem prob{PointCloud{}, PointCloud{}, Histogram::uniform(n),
                          Histogram::uniform(n), std::move(block), {}, {}};
    prob.X.points.resize(n, 2);
    prob.Y.points.resize(n, 2);
    for (Index i = 0; i < n; ++i) {
        prob.X.points.row(i) = pts.row(order[static_cast<size_t>(i)]);
        prob.Y.points.row(i) = pts.row(order[static_cast<size_t>(n + i)]);
    }
    return prob;
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text)
{
    const json j = json::parse(text);
    ExperimentConfig cfg;
    cfg.family = j.value("family", cfg.family);
    cfg.n = j.value("n", cfg.n);
    cfg.m = j.value("m", cfg.m);
    cfg.cost = j.value("cost", cfg.cost);
    cfg.p = j.value("p", cfg.p);
    cfg.out_dir = j.value("out", cfg.out_dir);
    cfg.dump_couplings = j.value("dump_couplings", cfg.dump_couplings);
    cfg.max_outer = j.value("max_outer", cfg.max_outer);
    cfg.gamma_scale = j.value("gamma_scale", cfg.gamma_scale);
    cfg.sinkhorn_tol = j.value("sinkhorn_tol", cfg.sinkhorn_tol);
    if (j.contains("seeds"))
        cfg.seeds = j["seeds"].get<std::vector<unsigned long>>();
    if (j.contains("solvers")) {
        cfg.solvers.clear();
        for (const auto& s : j["solvers"]) {
            SolverSpec spec;
            spec.method = s.at("method").get<std::string>();
            spec.rank = s.value("rank", spec.rank);
            spec.epsilon = s.value("epsilon", spec.epsilon);
            spec.alpha = s.value("alpha", spec.alpha);
            spec.log_domain = s.value("log_domain", spec.log_domain);
            cfg.solvers.push_back(std::move(spec));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_text(text);
}

std::string ExperimentConfig::to_json() const
{
    json j;
    j["family"] = family;
    j["n"] = n;
    j["m"] = m;
    j["cost"] = cost;
    j["p"] = p;
    j["out"] = out_dir;
    j["dump_couplings"] = dump_couplings;
    j["max_outer"] = max_outer;
    j["gamma_scale"] = gamma_scale;
    j["sinkhorn_tol"] = sinkhorn_tol;
    j["seeds"] = seeds;
    j["solvers"] = json::array();
    for (const auto& s : solvers) {
        json js;
        js["method"] = s.method;
        js["rank"] = s.rank;
        js["epsilon"] = s.epsilon;
        js["alpha"] = s.alpha;
        js["log_domain"] = s.log_domain;
        j["solvers"].push_back(std::move(js));
    }
    return j.dump(2) + "\n";
}

void ExperimentConfig::validate() const
{
    require(n >= 2 && m >= 2, "ExperimentConfig: sizes must be >= 2");
    static const std::vector<std::string> families{"gmm-1d-grid", "gaussian-2d", "gmm-2d",
                                                   "gmm-10d", "graph-split"};
    require(std::find(families.begin(), families.end(), family) != families.end(),
            "ExperimentConfig: unknown family '" + family + "'");
    static const std::vector<std::string> costs{"sq-euclid", "euclid", "p-norm",
                                                "shortest-path"};
    require(std::find(costs.begin(), costs.end(), cost) != costs.end(),
            "ExperimentConfig: unknown cost '" + cost + "'");
    static const std::vector<std::string> methods{"sinkhorn", "lot", "lot-f", "lot-ibp"};
    for (const auto& s : solvers)
        require(std::find(methods.begin(), methods.end(), s.method) != methods.end(),
                "ExperimentConfig: unknown solver '" + s.method + "'");
    require(!seeds.empty(), "ExperimentConfig: at least one seed is required");
}

GeneratedProblem generate(const ExperimentConfig& cfg, unsigned long seed)
{
    if (cfg.family == "gmm-1d-grid")
        return gen_gmm_grid_1d(cfg.n, cfg.m);
    if (cfg.family == "gaussian-2d")
        return gen_gaussian_pair(cfg.n, cfg.m, 2, seed);
    if (cfg.family == "gmm-2d")
        return gen_gaussian_mixture(cfg.n, cfg.m, 2, seed);
    if (cfg.family == "gmm-10d")
        return gen_gaussian_mixture(cfg.n, cfg.m, 10, seed);
    if (cfg.family == "graph-split") {
        require(cfg.n == cfg.m, "graph-split: n and m must match");
        return gen_graph_split(cfg.n, seed);
    }
    throw std::invalid_argument("generate: unknown family " + cfg.family);
}

CostOperator build_cost(const ExperimentConfig& cfg, const GeneratedProblem& prob)
{
    if (cfg.cost == "shortest-path") {
        require(prob.cost.has_value(), "shortest-path cost requires a graph family");
        return CostOperator::dense(*prob.cost);
    }
    if (cfg.cost == "sq-euclid")
        return sqeuclid_factorization(prob.X, prob.Y);
    if (cfg.cost == "euclid")
        return pnorm_cost(prob.X, prob.Y, 2.0);
    if (cfg.cost == "p-norm")
        return pnorm_cost(prob.X, prob.Y, cfg.p);
    throw std::invalid_argument("build_cost: unknown cost " + cfg.cost);
}

double reference_ot_cost(const CostOperator& C, const Histogram& a, const Histogram& b,
                         Matrix* coupling_out, double delta)
{
    const Matrix Cd = C.to_dense();
    const double eps = 1e-3 * Cd.cwiseAbs().mean();
    require(eps > 0.0, "reference_ot_cost: zero cost matrix");
    SinkhornOptions opts;
    opts.log_domain = true;
    opts.check_every = 50;
    auto res = entropic_ot(C, a, b, eps, delta, opts);
    if (coupling_out)
        *coupling_out = res.coupling;
    return res.cost;
}

namespace {

struct CellOutcome {
    double cost = 0.0;
    Matrix coupling;
    long iterations = 0;
};

CellOutcome run_cell(const ExperimentConfig& cfg, const SolverSpec& spec,
                     const CostOperator& C, const Histogram& a, const Histogram& b,
                     unsigned long seed)
{
    CellOutcome out;
    if (spec.method == "sinkhorn") {
        SinkhornOptions opts;
        opts.log_domain = spec.log_domain;
        auto res = entropic_ot(C, a, b, spec.epsilon, cfg.sinkhorn_tol, opts);
        out.cost = res.cost;
        out.coupling = std::move(res.coupling);
        out.iterations = res.report.inner_iterations.front();
        return out;
    }

    const double cmax = C.to_dense().cwiseAbs().maxCoeff();
    LotConfig lot_cfg;
    lot_cfg.rank = spec.rank;
    lot_cfg.epsilon = spec.epsilon;
    lot_cfg.alpha = std::min(spec.alpha, 1.0 / static_cast<double>(spec.rank));
    lot_cfg.max_outer = cfg.max_outer;
    lot_cfg.seed = seed;
    lot_cfg.step_rule = StepRule::Constant;
    lot_cfg.gamma = cmax > 0.0 ? cfg.gamma_scale / cmax : 1.0;

    if (spec.method == "lot") {
        auto res = lot_solve(C, a, b, lot_cfg);
        out.cost = res.cost;
        out.coupling = assemble_coupling(res.coupling);
        out.iterations = static_cast<long>(res.report.objective.size());
        return out;
    }
    if (spec.method == "lot-ibp") {
        auto res = lot_ibp_solve(C, a, b, lot_cfg);
        out.cost = res.cost;
        out.coupling = assemble_coupling(res.coupling);
        out.iterations = static_cast<long>(res.report.objective.size());
        return out;
    }
    if (spec.method == "lot-f") {
        FixedMarginalConfig fm;
        fm.epsilon = spec.epsilon;
        fm.gamma = lot_cfg.gamma;
        fm.sinkhorn_tol = cfg.sinkhorn_tol;
        fm.max_outer = cfg.max_outer;
        fm.seed = seed;
        const Histogram g = Histogram::uniform(spec.rank);
        auto res = lot_fixed_marginal(C, a, b, g, fm);
        out.cost = res.cost;
        FactoredCoupling fc{std::move(res.Q), std::move(res.R), g.w()};
        out.coupling = assemble_coupling(fc);
        out.iterations = static_cast<long>(res.report.objective.size());
        return out;
    }
    throw std::invalid_argument("run_cell: unknown method " + spec.method);
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& cfg)
{
    cfg.validate();
    SweepResult result;
    const GeneratedProblem prob = generate(cfg, cfg.seeds.front());
    const CostOperator C = build_cost(cfg, prob);
    result.reference_cost = reference_ot_cost(C, prob.a, prob.b, &result.reference_coupling);

    for (const auto& spec : cfg.solvers) {
        for (unsigned long seed : cfg.seeds) {
            SweepRow row;
            row.method = spec.method;
            row.rank = spec.rank;
            row.epsilon = spec.epsilon;
            row.seed = seed;
            Matrix coupling;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                CellOutcome out = run_cell(cfg, spec, C, prob.a, prob.b, seed);
                row.cost = out.cost;
                row.ratio = result.reference_cost != 0.0
                                ? out.cost / result.reference_cost
                                : std::numeric_limits<double>::quiet_NaN();
                row.coupling_l1 = (out.coupling - result.reference_coupling).lpNorm<1>();
                row.iterations = out.iterations;
                coupling = std::move(out.coupling);
            } catch (const std::exception& e) {
                row.error = e.what();
                result.all_ok = false;
            }
            row.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                    .count();
            result.rows.push_back(std::move(row));
            if (cfg.dump_couplings)
                result.couplings.push_back(std::move(coupling));
        }
    }
    return result;
}

std::string sweep_to_csv(const SweepResult& res)
{
    std::string out =
        "method,rank,epsilon,seed,cost,ratio,coupling_l1,wall_seconds,iterations,error\n";
    for (const auto& row : res.rows) {
        out += row.method;
        out += ',' + std::to_string(row.rank);
        out += ',' + io::format_double(row.epsilon);
        out += ',' + std::to_string(row.seed);
        out += ',' + io::format_double(row.cost);
        out += ',' + io::format_double(row.ratio);
        out += ',' + io::format_double(row.coupling_l1);
        out += ',' + io::format_double(row.wall_seconds);
        out += ',' + std::to_string(row.iterations);
        out += ',' + row.error;
        out += '\n';
    }
    return out;
}

void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res)
{
    namespace fs = std::filesystem;
    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "results.csv");
    csv << sweep_to_csv(res);

    json manifest;
    manifest["config"] = json::parse(cfg.to_json());
    manifest["reference_cost"] = res.reference_cost;
    manifest["rows"] = res.rows.size();
    manifest["all_ok"] = res.all_ok;
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << "\n";

    if (cfg.dump_couplings) {
        fs::create_directories(out_dir / "couplings");
        for (size_t i = 0; i < res.couplings.size(); ++i) {
            if (res.couplings[i].size() == 0)
                continue;
            const auto& row = res.rows[i];
            const std::string name = row.method + "_r" + std::to_string(row.rank) +
                                     "_eps" + io::format_double(row.epsilon) + "_s" +
                                     std::to_string(row.seed) + ".csv";
            io::write_csv(out_dir / "couplings" / name, res.couplings[i]);
        }
        io::write_csv(out_dir / "couplings" / "reference.csv", res.reference_coupling);
    }
    emit_plots(res, out_dir / "plots");
}

namespace {

std::string svg_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '&')
            out += "&amp;";
        else if (c == '<')
            out += "&lt;";
        else if (c == '>')
            out += "&gt;";
        else
            out += c;
    }
    return out;
}

}  // namespace

std::string line_chart_svg(
    const std::string& title, const std::string& x_label, const std::string& y_label,
    const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series)
{
    require(!series.empty(), "line_chart_svg: empty series list");
    bool any_point = false;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    for (const auto& [name, pts] : series)
        for (const auto& [x, y] : pts) {
            if (!any_point) {
                xmin = xmax = x;
                ymin = ymax = y;
                any_point = true;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    require(any_point, "line_chart_svg: no data points");
    if (xmax == xmin)
        xmax = xmin + 1.0;
    if (ymax == ymin)
        ymax = ymin + 1.0;

    const double w = 640, h = 420, lpad = 70, rpad = 20, tpad = 40, bpad = 50;
    auto sx = [&](double x) {
        return lpad + (x - xmin) / (xmax - xmin) * (w - lpad - rpad);
    };
    auto sy = [&](double y) {
        return h - bpad - (y - ymin) / (ymax - ymin) * (h - tpad - bpad);
    };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b"};

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
                      "height=\"420\" viewBox=\"0 0 640 420\">\n";
    svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + svg_escape(title) + "</text>\n";
    svg += "<line x1=\"" + io::format_double(lpad) + "\" y1=\"" + io::format_double(h - bpad) +
           "\" x2=\"" + io::format_double(w - rpad) + "\" y2=\"" + io::format_double(h - bpad) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + io::format_double(lpad) + "\" y1=\"" + io::format_double(tpad) +
           "\" x2=\"" + io::format_double(lpad) + "\" y2=\"" + io::format_double(h - bpad) +
           "\" stroke=\"black\"/>\n";
    svg += "<text x=\"320\" y=\"410\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">" + svg_escape(x_label) + "</text>\n";
    svg += "<text x=\"16\" y=\"210\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\" transform=\"rotate(-90 16 210)\">" + svg_escape(y_label) +
           "</text>\n";
    svg += "<text x=\"" + io::format_double(lpad) + "\" y=\"" + io::format_double(h - bpad + 16) +
           "\" font-family=\"sans-serif\" font-size=\"10\">" + io::format_double(xmin) +
           "</text>\n";
    svg += "<text x=\"" + io::format_double(w - rpad) + "\" y=\"" +
           io::format_double(h - bpad + 16) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           io::format_double(xmax) + "</text>\n";
    svg += "<text x=\"" + io::format_double(lpad - 6) + "\" y=\"" + io::format_double(h - bpad) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           io::format_double(ymin) + "</text>\n";
    svg += "<text x=\"" + io::format_double(lpad - 6) + "\" y=\"" + io::format_double(tpad + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" +
           io::format_double(ymax) + "</text>\n";

    size_t ci = 0;
    double legend_y = tpad + 8;
    for (const auto& [name, pts] : series) {
        const char* color = colors[ci % 6];
        if (pts.size() > 1) {
            std::string poly = "<polyline fill=\"none\" stroke=\"";
            poly += color;
            poly += "\" stroke-width=\"1.5\" points=\"";
            for (const auto& [x, y] : pts)
                poly += io::format_double(sx(x)) + "," + io::format_double(sy(y)) + " ";
            poly += "\"/>\n";
            svg += poly;
        }
        for (const auto& [x, y] : pts)
            svg += "<circle cx=\"" + io::format_double(sx(x)) + "\" cy=\"" +
                   io::format_double(sy(y)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + io::format_double(w - rpad - 120) + "\" y=\"" +
               io::format_double(legend_y) + "\" font-family=\"sans-serif\" "
               "font-size=\"11\" fill=\"" + color + "\">" + svg_escape(name) + "</text>\n";
        legend_y += 14;
        ++ci;
    }
    svg += "</svg>\n";
    return svg;
}

std::string heatmap_pgm(const Matrix& P)
{
    require(P.size() > 0, "heatmap_pgm: empty matrix");
    const double max = P.maxCoeff();
    std::string out = "P2\n" + std::to_string(P.cols()) + " " + std::to_string(P.rows()) +
                      "\n255\n";
    for (Index i = 0; i < P.rows(); ++i) {
        for (Index j = 0; j < P.cols(); ++j) {
            const int level =
                max > 0.0 ? static_cast<int>(std::lround(P(i, j) / max * 255.0)) : 0;
            out += std::to_string(level);
            out += j + 1 == P.cols() ? '\n' : ' ';
        }
    }
    return out;
}

void emit_plots(const SweepResult& res, const std::filesystem::path& out_dir)
{
    require(!res.rows.empty(), "emit_plots: empty result table");
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    using Series = std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>;
    Series ratio_time;
    for (const auto& row : res.rows) {
        if (!row.ok())
            continue;
        auto it = std::find_if(ratio_time.begin(), ratio_time.end(),
                               [&](const auto& s) { return s.first == row.method; });
        if (it == ratio_time.end()) {
            ratio_time.push_back({row.method, {}});
            it = std::prev(ratio_time.end());
        }
        it->second.push_back({row.wall_seconds, row.ratio});
    }
    if (!ratio_time.empty()) {
        std::ofstream f(out_dir / "ratio_vs_time.svg");
        f << line_chart_svg("cost ratio vs wall time", "seconds", "ratio", ratio_time);
    }

    Series gap_rank, gap_eps;
    for (const auto& row : res.rows) {
        if (!row.ok())
            continue;
        const double gap = std::abs(row.cost - res.reference_cost);
        if (row.rank > 0) {
            auto it = std::find_if(gap_rank.begin(), gap_rank.end(),
                                   [&](const auto& s) { return s.first == row.method; });
            if (it == gap_rank.end()) {
                gap_rank.push_back({row.method, {}});
                it = std::prev(gap_rank.end());
            }
            it->second.push_back({static_cast<double>(row.rank), gap});
        } else {
            auto it = std::find_if(gap_eps.begin(), gap_eps.end(),
                                   [&](const auto& s) { return s.first == row.method; });
            if (it == gap_eps.end()) {
                gap_eps.push_back({row.method, {}});
                it = std::prev(gap_eps.end());
            }
            it->second.push_back({row.epsilon, gap});
        }
    }
    if (!gap_rank.empty()) {
        std::ofstream f(out_dir / "gap_vs_rank.svg");
        f << line_chart_svg("OT gap vs rank", "rank", "|cost - reference|", gap_rank);
    }
    if (!gap_eps.empty()) {
        std::ofstream f(out_dir / "gap_vs_epsilon.svg");
        f << line_chart_svg("OT gap vs epsilon", "epsilon", "|cost - reference|", gap_eps);
    }

    for (size_t i = 0; i < res.couplings.size(); ++i) {
        if (res.couplings[i].size() == 0)
            continue;
        const auto& row = res.rows[i];
        std::ofstream f(out_dir / (row.method + "_r" + std::to_string(row.rank) + "_s" +
                                   std::to_string(row.seed) + ".pgm"));
        f << heatmap_pgm(res.couplings[i]);
    }
}

std::vector<LemmaCheckResult> run_lemma_checks(unsigned long seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.1, 1.0);
    const Index n = 6;
    const double eps = 0.5;

    auto random_feasible = [&](const Histogram& a, const Histogram& b) {
        Matrix P(a.size(), b.size());
        for (Index i = 0; i < P.rows(); ++i)
            for (Index j = 0; j < P.cols(); ++j)
                P(i, j) = unif(rng);
        P /= P.sum();
        // scale onto Pi(a,b)
        const CostOperator K = CostOperator::dense(P);
        auto s = sinkhorn(K, a, b, 1e-13);
        return Matrix(s.u.asDiagonal() * P * s.v.asDiagonal());
    };

    Matrix A(n, 2);
    for (Index i = 0; i < n; ++i) {
        A(i, 0) = unif(rng);
        A(i, 1) = unif(rng);
    }
    Matrix B = A;
    const Matrix D = A * A.transpose();
    const Matrix Dp = B * B.transpose();
    const Histogram a = Histogram::uniform(n), b = Histogram::uniform(n);

    std::vector<LemmaCheckResult> checks;

    // entropic argmin at high precision for a given cost
    auto entropic_argmin = [&](const Matrix& C) {
        SinkhornOptions opts;
        opts.log_domain = true;
        auto res = entropic_ot(CostOperator::dense(C), a, b, eps, 1e-12, opts);
        return res.coupling;
    };

    {
        // cost-perturbation stability: moving the coupling through C(P) = -4 D P D'
        const Matrix P1 = random_feasible(a, b);
        const Matrix P2 = random_feasible(a, b);
        const double delta = (P1 - P2).lpNorm<1>();
        const Matrix Pi1 = entropic_argmin(-4.0 * D * P1 * Dp);
        const Matrix Pi2 = entropic_argmin(-4.0 * D * P2 * Dp);
        const double opnorm = CostOperator::dense(D).spectral_norm(50) *
                              CostOperator::dense(Dp).spectral_norm(50);
        LemmaCheckResult check;
        check.name = "cost-perturbation";
        check.lhs = (Pi1 - Pi2).lpNorm<1>();
        check.rhs = 2.0 * (4.0 * delta / eps) * opnorm;  // 2x slack
        check.pass = check.lhs <= check.rhs;
        checks.push_back(check);
    }
    {
        // rounding-distance bound for an approximate Sinkhorn solution
        Matrix C(n, n);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < n; ++j)
                C(i, j) = unif(rng);
        const Matrix K = kernels::exp_neg_scaled(C, eps);
        SinkhornOptions opts;
        opts.check_every = 1;
        auto s = sinkhorn(CostOperator::dense(K), a, b, 1e-4, opts);
        const Matrix P = s.u.asDiagonal() * K * s.v.asDiagonal();
        const double viol = s.violation;
        const Matrix Pi = entropic_argmin(C);
        LemmaCheckResult check;
        check.name = "sinkhorn-distance";
        check.lhs = (P - Pi).lpNorm<1>();
        const double bound =
            viol + std::sqrt(4.0 / eps *
                             (viol * C.lpNorm<Eigen::Infinity>() +
                              eps * viol * std::log(2.0 * n / viol)));
        check.rhs = 2.0 * bound;  // 2x slack
        check.pass = check.lhs <= check.rhs;
        checks.push_back(check);
    }
    {
        // energy Lipschitz bound over random simplex pairs
        LemmaCheckResult check;
        check.name = "gw-energy-lipschitz";
        check.pass = true;
        for (int trial = 0; trial < 200; ++trial) {
            Matrix P1(n, n), P2(n, n);
            for (Index i = 0; i < n; ++i)
                for (Index j = 0; j < n; ++j) {
                    P1(i, j) = unif(rng);
                    P2(i, j) = unif(rng);
                }
            P1 /= P1.sum();
            P2 /= P2.sum();
            auto lc = gw_energy_lipschitz_check(D, Dp, P1, P2);
            check.lhs = std::max(check.lhs, lc.lhs - lc.rhs);
            if (lc.lhs > lc.rhs)
                check.pass = false;
        }
        check.rhs = 0.0;
        checks.push_back(check);
    }
    return checks;
}

}  // namespace lrot
