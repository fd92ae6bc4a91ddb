#include "lrot/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace lrot::io {

using nlohmann::json;

std::string format_double(double x)
{
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::string to_csv(const Matrix& M)
{
    std::string out;
    out.reserve(static_cast<size_t>(M.size()) * 12);
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j)
                out += ',';
            out += format_double(M(i, j));
        }
        out += '\n';
    }
    return out;
}

Matrix matrix_from_csv_text(const std::string& text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<double> row;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find(',', pos);
            if (next == std::string::npos)
                next = line.size();
            double v = 0.0;
            auto res = std::from_chars(line.data() + pos, line.data() + next, v);
            require(res.ec == std::errc(), "csv: malformed number '" +
                                               line.substr(pos, next - pos) + "'");
            row.push_back(v);
            pos = next + 1;
            if (next == line.size())
                break;
        }
        require(rows.empty() || row.size() == rows.front().size(),
                "csv: ragged rows");
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "csv: empty input");
    Matrix M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j = 0; j < M.cols(); ++j)
            M(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    return M;
}

namespace {

std::string slurp(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    require(out.good(), "cannot write " + path.string());
    out << text;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const Matrix& M)
{
    spit(path, to_csv(M));
}

Matrix read_matrix_csv(const std::filesystem::path& path)
{
    return matrix_from_csv_text(slurp(path));
}

Vector read_vector_csv(const std::filesystem::path& path)
{
    Matrix M = read_matrix_csv(path);
    if (M.cols() == 1)
        return M.col(0);
    require(M.rows() == 1, "expected a vector in " + path.string());
    return M.row(0).transpose();
}

std::string to_json(const Matrix& M)
{
    json j;
    j["shape"] = {M.rows(), M.cols()};
    std::vector<double> data;
    data.reserve(static_cast<size_t>(M.size()));
    for (Index i = 0; i < M.rows(); ++i)
        for (Index j2 = 0; j2 < M.cols(); ++j2)
            data.push_back(M(i, j2));
    j["data"] = std::move(data);
    return j.dump();
}

Matrix matrix_from_json_text(const std::string& text)
{
    json j = json::parse(text);
    require(j.contains("shape") && j.contains("data"), "json matrix: missing keys");
    const Index n = j["shape"][0].get<Index>();
    const Index m = j["shape"][1].get<Index>();
    const auto& data = j["data"];
    require(static_cast<Index>(data.size()) == n * m, "json matrix: size mismatch");
    Matrix M(n, m);
    size_t k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j2 = 0; j2 < m; ++j2)
            M(i, j2) = data[k++].get<double>();
    return M;
}

void write_json(const std::filesystem::path& path, const Matrix& M)
{
    spit(path, to_json(M));
}

Matrix read_matrix_json(const std::filesystem::path& path)
{
    return matrix_from_json_text(slurp(path));
}

void write_factored_coupling(const std::filesystem::path& dir,
                             const FactoredCoupling& fc,
                             const FactoredCouplingManifest& manifest)
{
    std::filesystem::create_directories(dir);
    write_csv(dir / "Q.csv", fc.Q);
    write_csv(dir / "R.csv", fc.R);
    write_csv(dir / "g.csv", fc.g);
    json j;
    j["rank"] = manifest.rank;
    j["epsilon"] = manifest.epsilon;
    j["alpha"] = manifest.alpha;
    j["seed"] = manifest.seed;
    j["cost"] = manifest.cost;
    spit(dir / "manifest.json", j.dump(2) + "\n");
}

FactoredCoupling read_factored_coupling(const std::filesystem::path& dir)
{
    FactoredCoupling fc;
    fc.Q = read_matrix_csv(dir / "Q.csv");
    fc.R = read_matrix_csv(dir / "R.csv");
    fc.g = read_vector_csv(dir / "g.csv");
    require(fc.Q.cols() == fc.g.size() && fc.R.cols() == fc.g.size(),
            "factored coupling: inconsistent rank in " + dir.string());
    return fc;
}

std::string report_to_json(const SolverReport& report)
{
    json j;
    j["objective"] = report.objective;
    j["delta"] = report.delta;
    j["marginal_violation"] = report.marginal_violation;
    j["inner_iterations"] = report.inner_iterations;
    j["elapsed_seconds"] = report.elapsed_seconds;
    j["converged"] = report.converged;
    j["iterations"] = report.objective.size();
    return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& path, const SolverReport& report)
{
    spit(path, report_to_json(report));
}

}  // namespace lrot::io
