#pragma once
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace sphfb {

inline constexpr double pi = 3.14159265358979323846;

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cplx = std::complex<double>;

// FNV-1a over raw bytes; used for state stamps and config hashes.
inline std::uint64_t fnv1a(const void *data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const auto *p = static_cast<const unsigned char *>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a(const std::string &s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

// keeps a literal from binding to the (void*, size_t) overload with h as the length
inline std::uint64_t fnv1a(const char *s, std::uint64_t h = 1469598103934665603ull) {
  return fnv1a(s, std::strlen(s), h);
}

inline std::uint64_t hash_matrix(const MatrixXcd &m, std::uint64_t h) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  h = fnv1a(dims, sizeof dims, h);
  return fnv1a(m.data(), sizeof(cplx) * static_cast<std::size_t>(m.size()), h);
}

// uniform pass/fail record shared by diagnostics, validate and the acceptance gate
struct CheckReport {
  std::string name;
  bool pass = false;
  double margin = 0.0;    // signed distance to the tolerance surface, >0 is slack
  double tolerance = 0.0;
  long samples = 0;
  std::string note;
};

} // namespace sphfb
