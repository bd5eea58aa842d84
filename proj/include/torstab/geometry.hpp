#pragma once

// Flat 3-torus of side 1: position wrapping and minimal-image displacements.

#include "torstab/vec3.hpp"

namespace torstab {

// Maps a coordinate to [0, 1).
inline double wrap_unit(double a) {
    double w = a - std::floor(a);
    if (w >= 1.0) w -= 1.0;  // rounding can land exactly on 1.0
    return w;
}

inline Vec3 wrap_unit(const Vec3& a) {
    return {wrap_unit(a.x), wrap_unit(a.y), wrap_unit(a.z)};
}

// Nearest periodic image of a raw coordinate difference; result in [-1/2, 1/2].
inline double min_image(double d) { return d - std::nearbyint(d); }

inline Vec3 min_image(const Vec3& d) {
    return {min_image(d.x), min_image(d.y), min_image(d.z)};
}

// Representative of a - b with each component in [-1/2, 1/2]; minimizes the
// Euclidean length over all periodic images.
inline Vec3 torus_displacement(const Vec3& a, const Vec3& b) {
    return min_image(a - b);
}

// Geodesic distance on the torus.
inline double torus_distance(const Vec3& a, const Vec3& b) {
    return norm(torus_displacement(a, b));
}

}  // namespace torstab
