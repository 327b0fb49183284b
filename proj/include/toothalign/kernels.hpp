#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference and, on
// x86-64, an AVX2 variant selected at runtime. Variants are required to be
// bit-identical: lanes perform the same sequence of IEEE operations as the
// scalar loop, reductions are min-only, and mul+add contraction is disabled.

#include <cstddef>
#include <string_view>

namespace toothalign::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct KernelTable {
  Isa isa;
  /// min_i (q - p_i)^2 over a 3D cloud; +inf for n == 0.
  double (*min_dist2_3d)(double qx, double qy, double qz, const double* xs, const double* ys,
                         const double* zs, std::size_t n);
  /// min_i (q - p_i)^2 in the XY plane; +inf for n == 0.
  double (*min_dist2_2d)(double qx, double qy, const double* xs, const double* ys, std::size_t n);
  /// mind[i] = min(mind[i], |q - p_i|^2); the farthest-point-sampling update.
  void (*update_min_dist2)(double qx, double qy, double qz, const double* xs, const double* ys,
                           const double* zs, std::size_t n, double* mind);
  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

/// Best variant the running CPU supports.
Isa detect_isa();

/// Table used by the library; defaults to detect_isa().
const KernelTable& active();
Isa active_isa();

/// Pins the dispatch (tests and benchmarking). Throws InvalidArgument if the
/// requested variant is unavailable on this CPU.
void force_isa(Isa isa);

}  // namespace toothalign::kernels
