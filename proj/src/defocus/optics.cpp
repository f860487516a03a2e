#include <cmath>

#include "dff/defocus.hpp"
#include "dff/error.hpp"

namespace dff::defocus {

OpticsParams OpticsParams::from_f_number(double focal_length_mm, double f_number,
                                         double focus_distance_mm, double pixel_pitch_um) {
  if (!(f_number > 0.0)) {
    throw InputError("f-number must be positive");
  }
  OpticsParams o;
  o.focal_length_mm = focal_length_mm;
  o.aperture_mm = focal_length_mm / f_number;
  o.focus_distance_mm = focus_distance_mm;
  o.pixel_pitch_um = pixel_pitch_um;
  o.validate();
  return o;
}

void OpticsParams::validate() const {
  if (!(focal_length_mm > 0.0)) throw InputError("focal length must be positive");
  if (!(aperture_mm > 0.0)) throw InputError("aperture diameter must be positive");
  if (!(pixel_pitch_um > 0.0)) throw InputError("pixel pitch must be positive");
  if (!(focus_distance_mm > focal_length_mm)) {
    throw InputError("focus distance must exceed the focal length");
  }
}

double coc_diameter(const OpticsParams& optics, double object_distance_mm) {
  optics.validate();
  if (!(object_distance_mm > 0.0)) {
    throw InputError("object distance must be positive");
  }
  const double ln = optics.focus_distance_mm;
  return optics.aperture_mm * optics.focal_length_mm * std::abs(object_distance_mm - ln) /
         (object_distance_mm * (ln - optics.focal_length_mm));
}

double coc_radius_px(const OpticsParams& optics, double object_distance_mm) {
  return coc_diameter(optics, object_distance_mm) * 1000.0 / optics.pixel_pitch_um / 2.0;
}

}  // namespace dff::defocus
