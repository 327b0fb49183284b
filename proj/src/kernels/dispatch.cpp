#include <atomic>

#include "tables.hpp"
#include "toothalign/errors.hpp"

namespace toothalign::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(TOOTHALIGN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &scalar_table();
    case Isa::avx2: return cpu_has_avx2() ? avx2_table() : nullptr;
  }
  return nullptr;
}

std::atomic<const KernelTable*>& active_slot() {
  static std::atomic<const KernelTable*> slot{table_for(detect_isa())};
  return slot;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

const KernelTable* avx2_table() {
#if defined(TOOTHALIGN_HAVE_AVX2)
  return &detail::avx2_table_impl();
#else
  return nullptr;
#endif
}

Isa detect_isa() { return cpu_has_avx2() ? Isa::avx2 : Isa::scalar; }

const KernelTable& active() { return *active_slot().load(std::memory_order_acquire); }

Isa active_isa() { return active().isa; }

void force_isa(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "kernel variant '" + std::string(isa_name(isa)) + "' unavailable");
  }
  active_slot().store(t, std::memory_order_release);
}

}  // namespace toothalign::kernels
