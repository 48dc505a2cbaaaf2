#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "romforge/types.hpp"

namespace romforge::io {

// Matrix Market exchange text. Values are written with 17 significant digits so every
// double survives a write/read cycle bit for bit. Sparse files use `coordinate`
// storage (1-based, lower triangle only when the matrix is exactly symmetric);
// dense files use `array` storage in column-major order.

void write_sparse(std::ostream& out, const SparseMatrix& a);
void write_sparse(const std::filesystem::path& path, const SparseMatrix& a);
SparseMatrix read_sparse(std::istream& in, const std::string& source = "<stream>");
SparseMatrix read_sparse(const std::filesystem::path& path);

void write_dense(std::ostream& out, const Matrix& m);
void write_dense(const std::filesystem::path& path, const Matrix& m);
Matrix read_dense(std::istream& in, const std::string& source = "<stream>");
Matrix read_dense(const std::filesystem::path& path);

/// Reads only the header of a dense file and returns (rows, cols).
std::pair<long, long> peek_dense_shape(const std::filesystem::path& path);

/// Shortest-safe decimal form used by every text writer in the project ("%.17g").
std::string format_double(double v);

}  // namespace romforge::io
