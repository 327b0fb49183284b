#include "toothalign/arch.hpp"
#include "toothalign/case_model.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/rng.hpp"

namespace toothalign {

ToothPointImage build_tooth_point_image(const Case& c, OrderingMode ordering, const std::optional<JawArches>& arches,
                                        const ImageOptions& opts) {
  if (ordering == OrderingMode::arch_line) {
    if (!arches) throw Error(ErrorCode::MissingArchLine, "arch_line ordering needs fitted arch lines");
  }
  ToothPointImage img;
  const Vec3 center = ordering == OrderingMode::center_distance ? mouth_center(c) : Vec3{};

  for (const Jaw* jaw : {&c.upper, &c.lower}) {
    const ArchLine* arch = nullptr;
    if (ordering == OrderingMode::arch_line) {
      arch = jaw->side == JawSide::upper ? arches->upper : arches->lower;
      if (arch == nullptr && !jaw->present().empty()) {
        throw Error(ErrorCode::MissingArchLine, std::string("no arch line for the ") +
                                                    (jaw->side == JawSide::upper ? "upper" : "lower") + " jaw");
      }
    }
    for (const Tooth* t : jaw->present()) {
      std::vector<std::size_t> perm;
      switch (ordering) {
        case OrderingMode::arch_line: perm = serialize_points(t->points, *arch, opts.labial_positive); break;
        case OrderingMode::local_z: perm = order_local_z(t->points); break;
        case OrderingMode::center_distance: perm = order_center_distance(t->points, center); break;
        case OrderingMode::random:
          perm = order_random(t->points.size(), derive_seed(opts.seed, "order_random",
                                                            static_cast<std::uint64_t>(t->id.value())));
          break;
      }
      const std::size_t r = t->id.row();
      img.presence_mask[r] = true;
      for (std::size_t col = 0; col < perm.size() && col < ToothPointImage::cols; ++col) {
        const Vec3& p = t->points[perm[col]];
        img.at(r, col, 0) = p.x;
        img.at(r, col, 1) = p.y;
        img.at(r, col, 2) = p.z;
      }
    }
  }
  return img;
}

}  // namespace toothalign
