#include <limits>

#include "tables.hpp"

namespace toothalign::kernels {
namespace {

double min_dist2_3d(double qx, double qy, double qz, const double* xs, const double* ys,
                    const double* zs, std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    const double d2 = dx * dx + dy * dy + dz * dz;
    best = d2 < best ? d2 : best;
  }
  return best;
}

double min_dist2_2d(double qx, double qy, const double* xs, const double* ys, std::size_t n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double d2 = dx * dx + dy * dy;
    best = d2 < best ? d2 : best;
  }
  return best;
}

void update_min_dist2(double qx, double qy, double qz, const double* xs, const double* ys,
                      const double* zs, std::size_t n, double* mind) {
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - qx;
    const double dy = ys[i] - qy;
    const double dz = zs[i] - qz;
    const double d2 = dx * dx + dy * dy + dz * dz;
    mind[i] = d2 < mind[i] ? d2 : mind[i];
  }
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, &min_dist2_3d, &min_dist2_2d, &update_min_dist2, &axpy};
  return table;
}

}  // namespace toothalign::kernels
