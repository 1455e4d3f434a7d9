#pragma once

#include "sketchret/mesh.hpp"
#include "sketchret/random.hpp"

#include <string>
#include <vector>

namespace sketchret {

Mesh make_box(const Vec3& center, const Vec3& half_extent);
/// UV ellipsoid with `slices` around Y and `stacks` pole to pole.
Mesh make_ellipsoid(const Vec3& center, const Vec3& radii, int slices = 48, int stacks = 24);
/// Subdivided icosahedron projected onto the sphere of the given radius about the origin.
Mesh make_icosphere(double radius, int subdivisions);
/// Capped cylinder with axis from a to b.
Mesh make_cylinder(const Vec3& a, const Vec3& b, double radius, int segments = 32);
/// Cone with a capped base disc centered at `base` and tip at `apex`.
Mesh make_cone(const Vec3& base, const Vec3& apex, double radius, int segments = 32);

/// Appends src to dst, offsetting indices.
void append_mesh(Mesh& dst, const Mesh& src);

/// Procedural animal made of primitives. index % 20 picks one of twenty body plans (long
/// low walker, giraffe, eagle, fish, coiled snake, ...); the seed jitters every proportion
/// by up to 15%. Output is normalized to the [-1, 1] box with +Y up.
Mesh make_creature(int index, std::uint64_t seed);

std::vector<Mesh> synthetic_corpus(int count, std::uint64_t seed);

}  // namespace sketchret
