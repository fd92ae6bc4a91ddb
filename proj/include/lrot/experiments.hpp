#pragma once

#include "lrot/costfact.hpp"
#include "lrot/gw.hpp"
#include "lrot/lot.hpp"
#include "lrot/lot_variants.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lrot {

struct GeneratedProblem {
    PointCloud X;
    PointCloud Y;
    Histogram a;
    Histogram b;
    // Set for families whose cost is precomputed (graph shortest paths).
    std::optional<Matrix> cost;
    // Mixture component of each sample; test instrumentation.
    std::vector<int> labels_x;
    std::vector<int> labels_y;
};

// Three-component source (means (0,0), (0,1), (1,1)) against a
// two-component target (means (0.5,0.5), (-0.5,0.5)), covariance 0.05 I;
// higher dimensions are zero-padded. Uniform histograms.
GeneratedProblem gen_gaussian_mixture(Index n, Index m, Index dim, unsigned long seed);

// Gaussian pair: N((1,...,1), I) against N(0, 0.1 I).
GeneratedProblem gen_gaussian_pair(Index n, Index m, Index dim, unsigned long seed);

// One-dimensional mixture densities evaluated on regular grids over [0,1]
// and renormalized; deterministic.
GeneratedProblem gen_gmm_grid_1d(Index n, Index m);

// Samples 2n points from a 2-D standard normal, builds the complete graph
// with squared Euclidean edge weights, runs all-pairs shortest paths and
// returns the inter-split n x n block with uniform histograms.
GeneratedProblem gen_graph_split(Index n, unsigned long seed);

struct SolverSpec {
    std::string method;  // sinkhorn | lot | lot-f | lot-ibp
    Index rank = 0;      // low-rank methods
    double epsilon = 0.0;
    double alpha = 1e-5;
    bool log_domain = false;
};

struct ExperimentConfig {
    std::string family = "gmm-1d-grid";
    Index n = 50;
    Index m = 55;
    std::string cost = "sq-euclid";  // sq-euclid | euclid | p-norm | shortest-path
    double p = 2.0;
    std::vector<SolverSpec> solvers;
    std::vector<unsigned long> seeds{0};
    std::string out_dir = "results";
    bool dump_couplings = false;
    long max_outer = 2000;
    // Practical constant mirror-descent step gamma = scale / max|C|.
    double gamma_scale = 10.0;
    double sinkhorn_tol = 1e-9;

    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_json_file(const std::filesystem::path& path);
    std::string to_json() const;
    void validate() const;
};

struct SweepRow {
    std::string method;
    Index rank = 0;
    double epsilon = 0.0;
    unsigned long seed = 0;
    double cost = 0.0;
    double ratio = 0.0;
    double coupling_l1 = 0.0;
    double wall_seconds = 0.0;
    long iterations = 0;
    std::string error;  // empty on success

    bool ok() const { return error.empty(); }
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double reference_cost = 0.0;
    Matrix reference_coupling;
    std::vector<Matrix> couplings;  // parallel to rows; empty unless dumped
    bool all_ok = true;
};

// Approximate unregularized optimum: log-domain Sinkhorn at
// eps = 1e-3 mean(C) followed by rounding onto the polytope.
double reference_ot_cost(const CostOperator& C, const Histogram& a, const Histogram& b,
                         Matrix* coupling_out = nullptr, double delta = 1e-7);

// Builds the configured cost operator for a generated problem.
CostOperator build_cost(const ExperimentConfig& cfg, const GeneratedProblem& prob);

GeneratedProblem generate(const ExperimentConfig& cfg, unsigned long seed);

// Runs every (solver, seed) cell; failures are recorded per row and never
// abort the sweep.
SweepResult run_sweep(const ExperimentConfig& cfg);

// CSV with one row per cell. Deterministic for fixed config and seeds,
// except for the wall_seconds column.
std::string sweep_to_csv(const SweepResult& res);

void write_sweep_outputs(const ExperimentConfig& cfg, const SweepResult& res);

// Plot-ready emitters: standalone SVG line charts and PGM heatmaps.
std::string line_chart_svg(const std::string& title, const std::string& x_label,
                           const std::string& y_label,
                           const std::vector<std::pair<std::string, std::vector<std::pair<double, double>>>>& series);
std::string heatmap_pgm(const Matrix& P);
void emit_plots(const SweepResult& res, const std::filesystem::path& out_dir);

// Diagnostic checks of the entropic-approximation inequalities used by
// the quadratic-time GW analysis (run at high Sinkhorn precision, 2x slack).
struct LemmaCheckResult {
    std::string name;
    bool pass = false;
    double lhs = 0.0;
    double rhs = 0.0;
};
std::vector<LemmaCheckResult> run_lemma_checks(unsigned long seed);

}  // namespace lrot
