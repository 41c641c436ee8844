// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "romdb/parametric_model.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

// Plain-text persistence of affine systems and dense matrices.
//
// Matrix payloads are coordinate lists "row col value" (0-based) written with
// 17 significant digits, so a save/load cycle is exact. A system file looks like
//
//   dimensions <N_w> <N_mu>
//   bounds
//   <lower_1 ... lower_N_mu>
//   <upper_1 ... upper_N_mu>
//   matrix_term 0            # term 0 is the parameter-independent base
//   coo <nnz>
//   <row col value> ...
//   matrix_term 1
//   coefficients <m>         # m monomials: <coefficient e_1 ... e_N_mu>
//   <c e_1 ... e_N_mu> ...
//   dense                    # or coo <nnz>
//   <N_w rows of N_w values>
//   rhs_term 0
//   coo <nnz>                # entries use column 0
//   ...
//   end

namespace romdb::io {

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  /// Next non-empty line with comments stripped; false at end of stream.
  bool next(std::istringstream& out) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.clear();
      out.str(line);
      return true;
    }
    return false;
  }

  std::istringstream expect() {
    std::istringstream ss;
    if (!next(ss)) fail("unexpected end of file");
    return ss;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& in_;
  int line_no_ = 0;
};

inline void read_payload(LineReader& reader, std::istringstream& header, Matrix& out) {
  std::string kind;
  header >> kind;
  if (kind == "dense") {
    for (Index r = 0; r < out.rows(); ++r) {
      auto ss = reader.expect();
      for (Index c = 0; c < out.cols(); ++c)
        if (!(ss >> out(r, c))) reader.fail("dense row is short");
    }
  } else if (kind == "coo") {
    long nnz = -1;
    if (!(header >> nnz) || nnz < 0) reader.fail("coo payload needs a non-negative entry count");
    for (long k = 0; k < nnz; ++k) {
      auto ss = reader.expect();
      long r = -1, c = -1;
      double v = 0;
      if (!(ss >> r >> c >> v)) reader.fail("coordinate entry must be 'row col value'");
      if (r < 0 || c < 0 || r >= out.rows() || c >= out.cols()) reader.fail("coordinate entry out of range");
      out(r, c) = v;
    }
  } else {
    reader.fail("payload must be 'dense' or 'coo <nnz>'");
  }
}

inline void write_coo(std::ostream& os, const Matrix& m) {
  long nnz = 0;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) ++nnz;
  os << "coo " << nnz << '\n';
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) os << r << ' ' << c << ' ' << format_double(m(r, c)) << '\n';
}

inline Polynomial read_coefficients(LineReader& reader, std::istringstream& header, Index n_params) {
  long m = -1;
  if (!(header >> m) || m < 0) reader.fail("coefficients needs a monomial count");
  std::vector<Monomial> terms;
  for (long k = 0; k < m; ++k) {
    auto ss = reader.expect();
    Monomial mono;
    mono.exponents.resize(n_params);
    if (!(ss >> mono.coefficient)) reader.fail("monomial coefficient missing");
    for (auto& e : mono.exponents)
      if (!(ss >> e)) reader.fail("monomial exponent tuple is short");
    terms.push_back(std::move(mono));
  }
  return Polynomial(std::move(terms));
}

inline void write_coefficients(std::ostream& os, const Polynomial& p) {
  os << "coefficients " << p.terms().size() << '\n';
  for (const auto& t : p.terms()) {
    os << format_double(t.coefficient);
    for (int e : t.exponents) os << ' ' << e;
    os << '\n';
  }
}

}  // namespace detail

inline AffineParametricSystem read_system(std::istream& in) {
  detail::LineReader reader(in);
  auto header = reader.expect();
  std::string keyword;
  long n = 0, p = 0;
  if (!(header >> keyword >> n >> p) || keyword != "dimensions" || n < 1 || p < 1)
    reader.fail("file must start with 'dimensions <N_w> <N_mu>'");

  Vector lower(p), upper(p);
  {
    auto ss = reader.expect();
    ss >> keyword;
    if (keyword != "bounds") reader.fail("expected 'bounds'");
    auto lo = reader.expect();
    for (auto& v : lower)
      if (!(lo >> v)) reader.fail("lower bound row is short");
    auto hi = reader.expect();
    for (auto& v : upper)
      if (!(hi >> v)) reader.fail("upper bound row is short");
  }

  std::optional<AffineMatrix> matrix;
  std::optional<AffineVector> rhs;
  std::vector<std::pair<Polynomial, Matrix>> matrix_terms;
  std::vector<std::pair<Polynomial, Vector>> rhs_terms;

  std::istringstream line;
  while (reader.next(line)) {
    line >> keyword;
    if (keyword == "end") break;
    long index = -1;
    if ((keyword != "matrix_term" && keyword != "rhs_term") || !(line >> index) || index < 0)
      reader.fail("expected 'matrix_term i', 'rhs_term i' or 'end'");
    const bool is_matrix = keyword == "matrix_term";
    Polynomial coefficient;
    auto next = reader.expect();
    std::string word;
    next >> word;
    if (word == "coefficients") {
      if (index == 0) reader.fail("term 0 is the base and takes no coefficients");
      coefficient = detail::read_coefficients(reader, next, p);
      next = reader.expect();
    } else if (index != 0) {
      reader.fail("terms other than 0 need a 'coefficients' block");
    } else {
      next.clear();
      next.seekg(0);
    }
    Matrix payload = Matrix::Zero(n, is_matrix ? n : 1);
    detail::read_payload(reader, next, payload);
    if (is_matrix) {
      if (index == 0) {
        if (matrix) reader.fail("duplicate matrix base term");
        matrix.emplace(payload);
      } else {
        matrix_terms.emplace_back(std::move(coefficient), std::move(payload));
      }
    } else {
      if (index == 0) {
        if (rhs) reader.fail("duplicate rhs base term");
        rhs.emplace(Vector(payload.col(0)));
      } else {
        rhs_terms.emplace_back(std::move(coefficient), Vector(payload.col(0)));
      }
    }
  }
  if (!matrix) matrix.emplace(Matrix::Zero(n, n));
  if (!rhs) rhs.emplace(Vector::Zero(n));
  for (auto& [c, m] : matrix_terms) matrix->add_term(std::move(c), std::move(m));
  for (auto& [c, v] : rhs_terms) rhs->add_term(std::move(c), std::move(v));
  return AffineParametricSystem(std::move(*matrix), std::move(*rhs), ParamBounds(lower, upper));
}

inline void write_system(std::ostream& os, const AffineParametricSystem& sys) {
  os << "dimensions " << sys.size() << ' ' << sys.n_params() << '\n' << "bounds\n";
  for (Index i = 0; i < sys.n_params(); ++i)
    os << (i ? " " : "") << detail::format_double(sys.bounds().lower(i));
  os << '\n';
  for (Index i = 0; i < sys.n_params(); ++i)
    os << (i ? " " : "") << detail::format_double(sys.bounds().upper(i));
  os << '\n';
  os << "matrix_term 0\n";
  detail::write_coo(os, sys.matrix().base());
  int idx = 1;
  for (const auto& t : sys.matrix().terms()) {
    os << "matrix_term " << idx++ << '\n';
    detail::write_coefficients(os, t.coefficient);
    detail::write_coo(os, t.operand);
  }
  os << "rhs_term 0\n";
  detail::write_coo(os, sys.rhs().base());
  idx = 1;
  for (const auto& t : sys.rhs().terms()) {
    os << "rhs_term " << idx++ << '\n';
    detail::write_coefficients(os, t.coefficient);
    detail::write_coo(os, t.operand);
  }
  os << "end\n";
}

inline AffineParametricSystem load_system(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open system file " + path.string());
  return read_system(in);
}

inline void save_system(const std::filesystem::path& path, const AffineParametricSystem& sys) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write system file " + path.string());
  write_system(out, sys);
}

/// Standalone matrix file: "rows cols nnz" followed by coordinate entries.
inline void write_matrix(std::ostream& os, const Matrix& m) {
  long nnz = 0;
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) ++nnz;
  os << m.rows() << ' ' << m.cols() << ' ' << nnz << '\n';
  for (Index c = 0; c < m.cols(); ++c)
    for (Index r = 0; r < m.rows(); ++r)
      if (m(r, c) != 0.0) os << r << ' ' << c << ' ' << detail::format_double(m(r, c)) << '\n';
}

inline Matrix read_matrix(std::istream& in) {
  detail::LineReader reader(in);
  auto header = reader.expect();
  long rows = -1, cols = -1, nnz = -1;
  if (!(header >> rows >> cols >> nnz) || rows < 0 || cols < 0 || nnz < 0)
    reader.fail("matrix file must start with 'rows cols nnz'");
  Matrix m = Matrix::Zero(rows, cols);
  for (long k = 0; k < nnz; ++k) {
    auto ss = reader.expect();
    long r = -1, c = -1;
    double v = 0;
    if (!(ss >> r >> c >> v) || r < 0 || c < 0 || r >= rows || c >= cols) reader.fail("bad coordinate entry");
    m(r, c) = v;
  }
  return m;
}

}  // namespace romdb::io
