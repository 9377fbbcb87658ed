#pragma once
// Shared aliases, numeric constants and small utilities used across the
// library.  Everything lives in namespace rigscat.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rigscat {

using cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx   iu{0.0, 1.0};

// Central tolerance knobs.  These are fixed policy values, not per-call
// parameters, so that every code path makes the same decisions.
struct Tolerances {
  double rankRel        = 1e-8;   // relative eigenvalue cutoff for fiber rank
  double psdSlack       = 1e-10;  // allowed negative eigenvalue in PSD checks
  double regularResidual = 1e-7;  // extrapolation/Plemelj agreement for regular points
  double conditionLimit = 1e10;   // condition bound before a point is flagged resonant
};

inline const Tolerances& tol() {
  static const Tolerances t{};
  return t;
}

// Closed real interval with a strictly positive width.
struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x > lo && x < hi; }
  bool containsClosed(double x) const { return x >= lo && x <= hi; }
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void ensure(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

// Simple blocked parallel map: calls fn(i) for i in [0, n).  Used for
// embarrassingly parallel per-gridpoint work; falls back to serial when
// threads <= 1.  Exceptions thrown by fn are rethrown on the caller thread.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errs(nt);
  std::size_t chunk = (n + nt - 1) / nt;
  for (unsigned t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      try {
        std::size_t b = t * chunk, e = std::min(n, b + chunk);
        for (std::size_t i = b; i < e; ++i) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// FNV-1a hash of a byte string, used to fingerprint configs in manifests.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Largest absolute entry of a complex matrix; the residual norm used by most
// agreement checks.
inline double max_abs(const Mat& a) { return a.cwiseAbs().maxCoeff(); }

inline double max_abs(const Vec& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace rigscat
