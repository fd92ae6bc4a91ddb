#pragma once

#include "lrot/core.hpp"

#include <filesystem>
#include <string>

namespace lrot::io {

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double x);

// CSV is row-major and header-free.
std::string to_csv(const Matrix& M);
Matrix matrix_from_csv_text(const std::string& text);

void write_csv(const std::filesystem::path& path, const Matrix& M);
Matrix read_matrix_csv(const std::filesystem::path& path);
Vector read_vector_csv(const std::filesystem::path& path);

// JSON object {"shape":[n,m],"data":[...]} with data in row-major order.
std::string to_json(const Matrix& M);
Matrix matrix_from_json_text(const std::string& text);

void write_json(const std::filesystem::path& path, const Matrix& M);
Matrix read_matrix_json(const std::filesystem::path& path);

// Factored coupling: Q.csv, R.csv, g.csv plus manifest.json in `dir`.
struct FactoredCouplingManifest {
    Index rank = 0;
    double epsilon = 0.0;
    double alpha = 0.0;
    unsigned long seed = 0;
    double cost = 0.0;
};

void write_factored_coupling(const std::filesystem::path& dir,
                             const FactoredCoupling& fc,
                             const FactoredCouplingManifest& manifest);
FactoredCoupling read_factored_coupling(const std::filesystem::path& dir);

std::string report_to_json(const SolverReport& report);
void write_report(const std::filesystem::path& path, const SolverReport& report);

}  // namespace lrot::io
