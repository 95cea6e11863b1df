#pragma once

#include <Eigen/Dense>
#include <string>

namespace steinspan {

// Shortest decimal string that round-trips the value (to_chars); NaN and
// infinities come out as "nan" / "inf" / "-inf".
std::string format_double(double v);

// Writes content to path via a sibling temporary file and an atomic rename,
// creating parent directories as needed, so readers never observe a partial
// file.
void write_text_atomic(const std::string& path, const std::string& content);

// Matrices are stored as headerless comma-separated rows with full
// round-trip precision.
void write_matrix_csv(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

}  // namespace steinspan
