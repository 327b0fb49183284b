#pragma once

#include "toothalign/kernels.hpp"

namespace toothalign::kernels::detail {

#if defined(TOOTHALIGN_HAVE_AVX2)
const KernelTable& avx2_table_impl();
#endif

}  // namespace toothalign::kernels::detail
