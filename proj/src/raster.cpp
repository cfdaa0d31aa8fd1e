#include "endokey/raster.hpp"

#include <string>

namespace endokey {

void validate(const Frame& f) {
  if (!same_shape(f.r, f.g) || !same_shape(f.r, f.b))
    fail(ErrorKind::InvalidInput, "frame " + std::to_string(f.index) + ": channel sizes differ");
  if (f.width() < 3 || f.height() < 3)
    fail(ErrorKind::InvalidInput, "frame " + std::to_string(f.index) + ": smaller than 3x3");
  for (const Plane* c : {&f.r, &f.g, &f.b}) {
    if (!c->allFinite() || c->minCoeff() < 0.0 || c->maxCoeff() > 1.0)
      fail(ErrorKind::InvalidInput, "frame " + std::to_string(f.index) + ": channel values outside [0, 1]");
  }
}

Frame make_frame(std::size_t index, Plane r, Plane g, Plane b) {
  Frame f{index, std::move(r), std::move(g), std::move(b)};
  validate(f);
  return f;
}

Frame gray_frame(std::size_t index, const Plane& v) { return make_frame(index, v, v, v); }

}  // namespace endokey
