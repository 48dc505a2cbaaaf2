#include "romforge/matrix_market.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "romforge/error.hpp"

namespace romforge::io {

namespace {

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct LineReader {
  std::istream& in;
  std::string source;
  long line_no = 0;

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '%') continue;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source + ":" + std::to_string(line_no) + ": " + what);
  }
};

struct Header {
  std::string format;  // coordinate | array
  std::string symmetry;
};

Header read_header(std::istream& in, const std::string& source) {
  std::string first;
  if (!std::getline(in, first)) throw DataError(source + ":1: empty file, expected %%MatrixMarket header");
  if (!first.empty() && first.back() == '\r') first.pop_back();
  std::istringstream hs(first);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || lower(object) != "matrix")
    throw DataError(source + ":1: malformed header '" + first + "'");
  format = lower(format);
  field = lower(field);
  symmetry = lower(symmetry);
  if (format != "coordinate" && format != "array")
    throw DataError(source + ":1: unsupported storage format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double")
    throw DataError(source + ":1: unsupported field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric")
    throw DataError(source + ":1: unsupported symmetry '" + symmetry + "'");
  return {format, symmetry};
}

template <typename T>
bool parse_token(const char*& p, const char* end, T& value) {
  while (p < end && (*p == ' ' || *p == '\t')) ++p;
  if (p >= end) return false;
  if constexpr (std::is_floating_point_v<T>) {
    if (*p == '+') ++p;
  }
  auto [ptr, ec] = std::from_chars(p, end, value);
  if (ec != std::errc{}) return false;
  p = ptr;
  return true;
}

bool only_spaces(const char* p, const char* end) {
  for (; p < end; ++p)
    if (*p != ' ' && *p != '\t') return false;
  return true;
}

bool exactly_symmetric(const SparseMatrix& a) {
  if (a.rows() != a.cols()) return false;
  const SparseMatrix at = a.transpose();
  if (at.nonZeros() != a.nonZeros()) return false;
  for (int c = 0; c < a.outerSize(); ++c) {
    SparseMatrix::InnerIterator x(a, c), y(at, c);
    for (; x && y; ++x, ++y)
      if (x.row() != y.row() || x.value() != y.value()) return false;
    if (x || y) return false;
  }
  return true;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_sparse(std::ostream& out, const SparseMatrix& a_in) {
  SparseMatrix a = a_in;
  a.makeCompressed();
  const bool sym = exactly_symmetric(a);
  long nnz = 0;
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (!sym || it.row() >= it.col()) ++nnz;

  out << "%%MatrixMarket matrix coordinate real " << (sym ? "symmetric" : "general") << '\n';
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  for (int c = 0; c < a.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(a, c); it; ++it)
      if (!sym || it.row() >= it.col()) out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << format_double(it.value()) << '\n';
}

void write_sparse(const std::filesystem::path& path, const SparseMatrix& a) {
  auto out = open_out(path);
  write_sparse(out, a);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SparseMatrix read_sparse(std::istream& in, const std::string& source) {
  const Header h = read_header(in, source);
  if (h.format != "coordinate") throw DataError(source + ":1: expected coordinate storage, found " + h.format);
  LineReader rd{in, source, 1};
  std::string line;
  if (!rd.next(line)) rd.fail("missing size line");
  long rows = 0, cols = 0, nnz = 0;
  {
    const char* p = line.data();
    const char* end = p + line.size();
    if (!parse_token(p, end, rows) || !parse_token(p, end, cols) || !parse_token(p, end, nnz) || !only_spaces(p, end) ||
        rows < 0 || cols < 0 || nnz < 0)
      rd.fail("malformed size line '" + line + "'");
  }
  const bool sym = h.symmetry == "symmetric";
  if (sym && rows != cols) rd.fail("symmetric matrix must be square");

  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(sym ? 2 * nnz : nnz));
  for (long k = 0; k < nnz; ++k) {
    if (!rd.next(line))
      throw DataError(source + ": truncated file, expected " + std::to_string(nnz) + " entries, found " +
                      std::to_string(k));
    const char* p = line.data();
    const char* end = p + line.size();
    long i = 0, j = 0;
    double v = 0.0;
    if (!parse_token(p, end, i) || !parse_token(p, end, j) || !parse_token(p, end, v) || !only_spaces(p, end))
      rd.fail("malformed entry '" + line + "'");
    if (i < 1 || i > rows || j < 1 || j > cols)
      rd.fail("index (" + std::to_string(i) + ", " + std::to_string(j) + ") out of range for 1-based " +
              std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
    if (sym && i < j) rd.fail("upper-triangle entry in a file declared symmetric");
    trip.emplace_back(static_cast<int>(i - 1), static_cast<int>(j - 1), v);
    if (sym && i != j) trip.emplace_back(static_cast<int>(j - 1), static_cast<int>(i - 1), v);
  }
  if (rd.next(line)) rd.fail("unexpected data after " + std::to_string(nnz) + " entries");

  SparseMatrix a(rows, cols);
  a.setFromTriplets(trip.begin(), trip.end());
  return a;
}

SparseMatrix read_sparse(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_sparse(in, path.string());
}

void write_dense(std::ostream& out, const Matrix& m) {
  out << "%%MatrixMarket matrix array real general\n";
  out << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) out << format_double(m(r, c)) << '\n';
}

void write_dense(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  write_dense(out, m);
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

namespace {

std::pair<long, long> read_dense_size(LineReader& rd) {
  std::string line;
  if (!rd.next(line)) rd.fail("missing size line");
  const char* p = line.data();
  const char* end = p + line.size();
  long rows = 0, cols = 0;
  if (!parse_token(p, end, rows) || !parse_token(p, end, cols) || !only_spaces(p, end) || rows < 0 || cols < 0)
    rd.fail("malformed size line '" + line + "'");
  return {rows, cols};
}

}  // namespace

Matrix read_dense(std::istream& in, const std::string& source) {
  const Header h = read_header(in, source);
  if (h.format != "array") throw DataError(source + ":1: expected array storage, found " + h.format);
  if (h.symmetry != "general") throw DataError(source + ":1: dense files must be general");
  LineReader rd{in, source, 1};
  const auto [rows, cols] = read_dense_size(rd);
  Matrix m(rows, cols);
  const long expected = rows * cols;
  std::string line;
  for (long k = 0; k < expected; ++k) {
    if (!rd.next(line))
      throw DataError(source + ": truncated file, expected " + std::to_string(expected) + " values, found " +
                      std::to_string(k));
    const char* p = line.data();
    const char* end = p + line.size();
    double v = 0.0;
    if (!parse_token(p, end, v) || !only_spaces(p, end)) rd.fail("malformed value '" + line + "'");
    m(k % rows, k / rows) = v;
  }
  if (rd.next(line)) rd.fail("unexpected data after " + std::to_string(expected) + " values");
  return m;
}

Matrix read_dense(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_dense(in, path.string());
}

std::pair<long, long> peek_dense_shape(const std::filesystem::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path.string());
  if (h.format != "array") throw DataError(path.string() + ":1: expected array storage, found " + h.format);
  LineReader rd{in, path.string(), 1};
  return read_dense_size(rd);
}

}  // namespace romforge::io
