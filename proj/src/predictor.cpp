#include <optional>

#include "toothalign/arch.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/swin.hpp"

namespace toothalign {

NetworkInput prepare_input(const Case& c, OrderingMode ordering, const ImageOptions& opts) {
  std::optional<ArchLine> upper, lower;
  std::optional<JawArches> arches;
  if (ordering == OrderingMode::arch_line) {
    if (!c.upper.present().empty()) upper = fit_arch_line(c.upper);
    if (!c.lower.present().empty()) lower = fit_arch_line(c.lower);
    arches = JawArches{upper ? &*upper : nullptr, lower ? &*lower : nullptr};
  }
  const Vec3 center = mouth_center(c);
  NetworkInput in;
  in.image = normalize_image(build_tooth_point_image(c, ordering, arches, opts), center);
  for (const Jaw* jaw : {&c.upper, &c.lower}) {
    for (const Tooth* t : jaw->present()) in.centers[t->id.row()] = (t->center() - center) / kImageScaleMm;
  }
  return in;
}

TransformMap predict_transforms(const ToothPointImage& image, const std::array<Vec3, kToothSlots>& centers,
                                const Case& c, const WeightSet& w) {
  const std::size_t ch = w.cfg.channels;
  std::vector<bool> present(kToothSlots);
  for (std::size_t r = 0; r < kToothSlots; ++r) present[r] = image.presence_mask[r];

  const Grid ft = swtp_forward(embed_image(image, w), w, &present);
  const Grid fc = swtbs_forward(center_encoder(centers, w), w.swtbs_center, w.cfg, &present);

  Grid fused(kToothSlots, 1, ch);
  std::vector<double> cat(2 * ch);
  for (std::size_t r = 0; r < kToothSlots; ++r) {
    std::copy_n(fc.token(r, 0), ch, cat.data());
    std::copy_n(ft.token(r, 0), ch, cat.data() + ch);
    w.fusion_proj.apply(cat.data(), fused.token(r, 0));
  }
  const Grid fx = swtbs_forward(fused, w.swtbs_fusion, w.cfg, &present);

  TransformMap out;
  std::vector<double> hidden(w.head_fc1.out);
  double head[7];
  for (const Jaw* jaw : {&c.upper, &c.lower}) {
    for (const Tooth* t : jaw->present()) {
      const std::size_t r = t->id.row();
      if (!present[r]) throw Error(ErrorCode::InvalidArgument, "image lacks a row for a present tooth");
      w.head_fc1.apply(fx.token(r, 0), hidden.data());
      for (double& v : hidden) v = gelu(v);
      w.head_fc2.apply(hidden.data(), head);
      RigidTransform tr;
      tr.rotation = UnitQuaternion::from_components(1.0 + 0.1 * head[0], 0.1 * head[1], 0.1 * head[2], 0.1 * head[3]);
      tr.translation = {head[4], head[5], head[6]};
      tr.pivot = t->center();
      out.emplace(t->id, tr);
    }
  }
  return out;
}

TransformMap predict_case(const Case& c, const WeightSet& w, OrderingMode ordering, const ImageOptions& opts) {
  const NetworkInput in = prepare_input(c, ordering, opts);
  return predict_transforms(in.image, in.centers, c, w);
}

}  // namespace toothalign
