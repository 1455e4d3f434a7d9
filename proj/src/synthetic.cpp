#include "sketchret/synthetic.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>

namespace sketchret {

namespace {

using Tri = std::array<std::uint32_t, 3>;

// Orthonormal pair perpendicular to a unit axis.
std::pair<Vec3, Vec3> basis(const Vec3& axis) {
  const Vec3 helper = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  const Vec3 u = axis.cross(helper).normalized();
  return {u, axis.cross(u)};
}

}  // namespace

Mesh make_box(const Vec3& c, const Vec3& h) {
  Mesh m;
  for (int i = 0; i < 8; ++i) {
    m.vertices.emplace_back(c.x() + ((i & 1) ? h.x() : -h.x()), c.y() + ((i & 2) ? h.y() : -h.y()),
                            c.z() + ((i & 4) ? h.z() : -h.z()));
  }
  const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
  for (const auto& q : quads) {
    m.triangles.push_back({Tri::value_type(q[0]), Tri::value_type(q[1]), Tri::value_type(q[2])});
    m.triangles.push_back({Tri::value_type(q[0]), Tri::value_type(q[2]), Tri::value_type(q[3])});
  }
  return m;
}

Mesh make_ellipsoid(const Vec3& c, const Vec3& r, int slices, int stacks) {
  if (slices < 3 || stacks < 2) throw std::invalid_argument("make_ellipsoid: too few segments");
  Mesh m;
  const double pi = std::numbers::pi;
  m.vertices.push_back(c + Vec3(0, r.y(), 0));
  for (int i = 1; i < stacks; ++i) {
    const double phi = pi * i / stacks;
    for (int j = 0; j < slices; ++j) {
      const double theta = 2 * pi * j / slices;
      m.vertices.push_back(c + Vec3(r.x() * std::sin(phi) * std::cos(theta), r.y() * std::cos(phi),
                                    r.z() * std::sin(phi) * std::sin(theta)));
    }
  }
  m.vertices.push_back(c - Vec3(0, r.y(), 0));
  const auto ring = [&](int i, int j) { return static_cast<std::uint32_t>(1 + (i - 1) * slices + (j % slices)); };
  const auto bottom = static_cast<std::uint32_t>(m.vertices.size() - 1);
  for (int j = 0; j < slices; ++j) {
    m.triangles.push_back({0, ring(1, j + 1), ring(1, j)});
    m.triangles.push_back({bottom, ring(stacks - 1, j), ring(stacks - 1, j + 1)});
    for (int i = 1; i + 1 < stacks; ++i) {
      m.triangles.push_back({ring(i, j), ring(i, j + 1), ring(i + 1, j + 1)});
      m.triangles.push_back({ring(i, j), ring(i + 1, j + 1), ring(i + 1, j)});
    }
  }
  return m;
}

Mesh make_icosphere(double radius, int subdivisions) {
  if (subdivisions < 0) throw std::invalid_argument("make_icosphere: negative subdivision count");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  Mesh m;
  m.vertices = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  m.triangles = {{0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8}, {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9}, {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1}};
  for (auto& v : m.vertices) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    const auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(m.vertices.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Tri> next;
    for (const auto& f : m.triangles) {
      const auto ab = midpoint(f[0], f[1]);
      const auto bc = midpoint(f[1], f[2]);
      const auto ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  for (auto& v : m.vertices) v *= radius;
  return m;
}

Mesh make_cylinder(const Vec3& a, const Vec3& b, double radius, int segments) {
  if (segments < 3) throw std::invalid_argument("make_cylinder: too few segments");
  const Vec3 axis = b - a;
  if (axis.norm() == 0.0) throw std::invalid_argument("make_cylinder: zero length");
  const auto [u, v] = basis(axis.normalized());
  Mesh m;
  for (const Vec3& c : {a, b}) {
    for (int j = 0; j < segments; ++j) {
      const double th = 2 * std::numbers::pi * j / segments;
      m.vertices.push_back(c + radius * (std::cos(th) * u + std::sin(th) * v));
    }
  }
  m.vertices.push_back(a);
  m.vertices.push_back(b);
  const auto n = static_cast<std::uint32_t>(segments);
  const std::uint32_t ca = 2 * n;
  const std::uint32_t cb = 2 * n + 1;
  for (std::uint32_t j = 0; j < n; ++j) {
    const std::uint32_t k = (j + 1) % n;
    m.triangles.push_back({j, k, n + k});
    m.triangles.push_back({j, n + k, n + j});
    m.triangles.push_back({ca, k, j});
    m.triangles.push_back({cb, n + j, n + k});
  }
  return m;
}

Mesh make_cone(const Vec3& base, const Vec3& apex, double radius, int segments) {
  if (segments < 3) throw std::invalid_argument("make_cone: too few segments");
  const Vec3 axis = apex - base;
  if (axis.norm() == 0.0) throw std::invalid_argument("make_cone: zero length");
  const auto [u, v] = basis(axis.normalized());
  Mesh m;
  for (int j = 0; j < segments; ++j) {
    const double th = 2 * std::numbers::pi * j / segments;
    m.vertices.push_back(base + radius * (std::cos(th) * u + std::sin(th) * v));
  }
  m.vertices.push_back(apex);
  m.vertices.push_back(base);
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t j = 0; j < n; ++j) {
    const std::uint32_t k = (j + 1) % n;
    m.triangles.push_back({j, k, n});
    m.triangles.push_back({n + 1, k, j});
  }
  return m;
}

void append_mesh(Mesh& dst, const Mesh& src) {
  const auto offset = static_cast<std::uint32_t>(dst.vertices.size());
  dst.vertices.insert(dst.vertices.end(), src.vertices.begin(), src.vertices.end());
  for (const auto& t : src.triangles) dst.triangles.push_back({t[0] + offset, t[1] + offset, t[2] + offset});
}

namespace {

// Builder for one creature: every dimension passes through `j`, a seeded factor in
// [1 - jitter, 1 + jitter], so instances of a body plan differ in proportion.
struct Builder {
  Mesh mesh;
  Rng rng;
  double jitter = 0.15;

  double j(double v) { return v * uniform_real(rng, 1.0 - jitter, 1.0 + jitter); }
  void ellipsoid(const Vec3& c, const Vec3& r) { append_mesh(mesh, make_ellipsoid(c, r)); }
  void sphere(const Vec3& c, double r) { ellipsoid(c, {r, r, r}); }
  void limb(const Vec3& a, const Vec3& b, double r) { append_mesh(mesh, make_cylinder(a, b, r)); }
  void cone(const Vec3& base, const Vec3& apex, double r) { append_mesh(mesh, make_cone(base, apex, r)); }
  void box(const Vec3& c, const Vec3& h) { append_mesh(mesh, make_box(c, h)); }
  // Four legs under a body centered at height y with half length / half width hx, hz.
  void legs4(double hx, double hz, double y, double len, double r) {
    for (double sx : {-1.0, 1.0}) {
      for (double sz : {-1.0, 1.0}) limb({sx * hx, y, sz * hz}, {sx * hx, y - len, sz * hz}, r);
    }
  }
};

}  // namespace

Mesh make_creature(int index, std::uint64_t seed) {
  if (index < 0) throw std::invalid_argument("make_creature: negative index");
  Builder b{{}, Rng(derive_seed(seed, static_cast<std::uint64_t>(index)))};
  const double pi = std::numbers::pi;

  switch (index % 20) {
    case 0: {  // dachshund: long low body, short legs, long snout
      const double L = b.j(1.2), H = b.j(0.22), leg = b.j(0.25);
      b.ellipsoid({0, leg + H, 0}, {L, H, H});
      b.legs4(L * 0.7, H * 0.6, leg + H * 0.5, leg + H * 0.5, 0.07);
      b.ellipsoid({L + 0.2, leg + H * 1.8, 0}, {b.j(0.35), 0.14, 0.13});
      b.cone({-L * 0.95, leg + H * 1.2, 0}, {-L - b.j(0.5), leg + H * 2.0, 0}, 0.05);
      for (double sz : {-1.0, 1.0}) b.box({L + 0.05, leg + H * 1.6, sz * 0.3}, {0.08, b.j(0.22), 0.17});
      break;
    }
    case 1: {  // giraffe: long legs, very long neck
      const double leg = b.j(1.3), L = b.j(0.55);
      b.ellipsoid({0, leg, 0}, {L, 0.25, 0.2});
      b.legs4(L * 0.65, 0.12, leg, leg, 0.05);
      const Vec3 top(L + b.j(0.35), leg + b.j(1.4), 0);
      b.limb({L * 0.7, leg + 0.1, 0}, top, 0.08);
      b.ellipsoid(top + Vec3(0.12, 0, 0), {0.22, 0.1, 0.09});
      break;
    }
    case 2: {  // eagle: wide wings raised in a V, small body
      const double span = b.j(1.6), lift = b.j(0.6);
      b.ellipsoid({0, 0, 0}, {0.45, 0.18, 0.18});
      for (double sz : {-1.0, 1.0}) b.cone({0, 0.05, sz * 0.1}, {-0.1, 0.05 + lift, sz * (span + 0.1)}, 0.22);
      b.sphere({0.5, 0.12, 0}, 0.14);
      b.cone({0.6, 0.1, 0}, {0.85, 0.0, 0}, 0.06);
      b.box({-0.6, 0.0, 0}, {0.2, 0.02, b.j(0.2)});
      break;
    }
    case 3: {  // fish: spindle body, tall tail fin, dorsal fin
      const double L = b.j(1.0), H = b.j(0.35);
      b.ellipsoid({0, 0, 0}, {L, H, 0.15});
      b.box({-L - 0.2, 0, 0}, {0.2, b.j(0.45), 0.02});
      b.cone({0, H * 0.8, 0}, {-0.3, H + b.j(0.35), 0}, 0.2);
      for (double sz : {-1.0, 1.0}) b.cone({L * 0.4, -H * 0.3, sz * 0.1}, {L * 0.1, -H - 0.1, sz * b.j(0.55)}, 0.12);
      break;
    }
    case 4: {  // coiled snake: rings of segments stacked into a cone, head raised
      const int turns = 3;
      const double r0 = b.j(0.9);
      Vec3 prev(r0, 0.08, 0);
      for (int k = 1; k <= turns * 16; ++k) {
        const double t = 2 * pi * k / 16.0;
        const double r = r0 * (1.0 - 0.25 * k / 16.0);
        const Vec3 p(r * std::cos(t), 0.08 + 0.16 * k / 16.0, r * std::sin(t));
        b.limb(prev, p, 0.09);
        prev = p;
      }
      b.limb(prev, prev + Vec3(0, b.j(0.6), 0), 0.08);
      b.ellipsoid(prev + Vec3(0.08, b.j(0.6) + 0.05, 0), {0.16, 0.08, 0.1});
      break;
    }
    case 5: {  // beetle: round shell, six splayed legs, short antennae
      const double R = b.j(0.5);
      b.ellipsoid({0, 0.3, 0}, {R * 1.2, R * 0.55, R});
      b.sphere({R * 1.3, 0.3, 0}, 0.15);
      for (double sx : {-0.6, 0.0, 0.6}) {
        for (double sz : {-1.0, 1.0}) b.limb({sx * R, 0.25, sz * R * 0.8}, {sx * R * 1.5, 0.0, sz * R * 1.9}, 0.03);
      }
      for (double sz : {-1.0, 1.0}) b.limb({R * 1.4, 0.38, sz * 0.05}, {R * 1.9, 0.7, sz * 0.3}, 0.02);
      break;
    }
    case 6: {  // spider: small body, eight long arched legs
      const double reach = b.j(1.2);
      b.sphere({0, 0.5, 0}, 0.22);
      b.ellipsoid({-0.35, 0.55, 0}, {0.3, 0.25, 0.25});
      for (int k = 0; k < 8; ++k) {
        const double a = pi * (k < 4 ? (0.2 + 0.2 * k) : (1.2 + 0.2 * (k - 4)));
        const Vec3 knee(0.6 * reach * std::cos(a), 0.9, 0.6 * reach * std::sin(a));
        b.limb({0, 0.5, 0}, knee, 0.025);
        b.limb(knee, {reach * std::cos(a), 0.0, reach * std::sin(a)}, 0.025);
      }
      break;
    }
    case 7: {  // elephant: big body, thick legs, trunk, ears
      const double L = b.j(0.7), H = b.j(0.45), leg = b.j(0.5);
      b.ellipsoid({0, leg + H, 0}, {L, H, H * 0.8});
      b.legs4(L * 0.55, H * 0.45, leg + H * 0.5, leg + H * 0.5, 0.14);
      b.sphere({L + 0.15, leg + H * 1.5, 0}, 0.3);
      b.limb({L + 0.35, leg + H * 1.3, 0}, {L + 0.5, b.j(0.15), 0}, 0.07);
      for (double sz : {-1.0, 1.0}) b.box({L + 0.05, leg + H * 1.5, sz * 0.35}, {0.05, b.j(0.28), 0.2});
      break;
    }
    case 8: {  // penguin: upright ovoid, flippers, short beak
      const double H = b.j(0.9);
      b.ellipsoid({0, H, 0}, {0.35, H, 0.32});
      b.sphere({0, 2 * H + 0.05, 0}, 0.2);
      b.cone({0.15, 2 * H + 0.05, 0}, {0.4, 2 * H, 0}, 0.06);
      for (double sz : {-1.0, 1.0}) b.limb({0, H * 1.4, sz * 0.3}, {0.05, H * 0.7, sz * 0.5}, 0.05);
      break;
    }
    case 9: {  // owl: stacked spheres with ear tufts on a perch
      const double r = b.j(0.45);
      b.limb({0, 0.1, -0.8}, {0, 0.1, 0.8}, 0.05);
      b.sphere({0, 0.15 + r, 0}, r);
      b.sphere({0, 0.15 + 2 * r + 0.2, 0}, r * 0.65);
      for (double sz : {-1.0, 1.0}) {
        b.cone({0, 0.15 + 2 * r + 0.4, sz * r * 0.35}, {0, 0.15 + 2 * r + 0.4 + b.j(0.3), sz * r * 0.5}, 0.07);
      }
      break;
    }
    case 10: {  // tortoise: flat dome shell, stubby legs, small head
      const double R = b.j(0.8);
      b.ellipsoid({0, 0.25, 0}, {R, b.j(0.35), R * 0.8});
      b.legs4(R * 0.55, R * 0.5, 0.2, 0.2, 0.09);
      b.limb({R * 0.8, 0.25, 0}, {R + 0.25, 0.35, 0}, 0.07);
      b.sphere({R + 0.3, 0.37, 0}, 0.1);
      break;
    }
    case 11: {  // kangaroo: upright body, big hind feet, thick tail
      const double H = b.j(0.8);
      b.ellipsoid({0, 0.3 + H * 0.6, 0}, {0.3, H * 0.6, 0.25});
      b.ellipsoid({0.15, 0.35 + H * 1.35, 0}, {0.2, 0.13, 0.12});
      for (double sz : {-1.0, 1.0}) {
        b.box({0.15, 0.04, sz * 0.15}, {b.j(0.3), 0.04, 0.06});
        b.limb({0.15, H * 0.9, sz * 0.22}, {0.3, H * 0.6, sz * 0.2}, 0.04);
        b.cone({0.1, 0.35 + H * 1.45, sz * 0.06}, {0.05, 0.35 + H * 1.45 + b.j(0.3), sz * 0.3}, 0.05);
      }
      b.cone({-0.2, 0.4, 0}, {-0.2 - b.j(0.9), 0.05, 0}, 0.1);
      break;
    }
    case 12: {  // starfish: five arms curling upwards
      const double arm = b.j(1.0);
      b.ellipsoid({0, 0.1, 0}, {0.25, 0.1, 0.25});
      for (int k = 0; k < 5; ++k) {
        const double a = 2 * pi * k / 5;
        b.cone({0, 0.08, 0}, {arm * std::cos(a), arm * 0.5, arm * std::sin(a)}, 0.15);
      }
      break;
    }
    case 13: {  // jellyfish: dome over long hanging tentacles
      const double R = b.j(0.6), len = b.j(1.5);
      b.ellipsoid({0, len, 0}, {R, R * 0.6, R});
      for (int k = 0; k < 8; ++k) {
        const double a = 2 * pi * k / 8;
        b.limb({R * 0.7 * std::cos(a), len, R * 0.7 * std::sin(a)},
               {R * 0.9 * std::cos(a), b.j(0.2), R * 0.9 * std::sin(a)}, 0.025);
      }
      break;
    }
    case 14: {  // crab: wide flat body, raised claws, side legs
      const double W = b.j(0.6);
      b.ellipsoid({0, 0.35, 0}, {0.45, 0.15, W});
      for (double sz : {-1.0, 1.0}) {
        for (double sx : {-0.25, 0.0, 0.25}) b.limb({sx, 0.3, sz * W * 0.8}, {sx * 1.5, 0.0, sz * (W + 0.45)}, 0.03);
        b.limb({0.3, 0.35, sz * W * 0.6}, {0.7, 0.65, sz * W * 0.7}, 0.05);
        b.ellipsoid({0.85, 0.7, sz * W * 0.7}, {b.j(0.22), 0.1, 0.1});
      }
      break;
    }
    case 15: {  // dragonfly: long thin abdomen, two pairs of long wings
      const double L = b.j(1.2), span = b.j(1.0);
      b.limb({-L, 0.5, 0}, {0.2, 0.5, 0}, 0.05);
      b.sphere({0.3, 0.5, 0}, 0.12);
      for (double x : {0.1, -0.15}) {
        for (double sz : {-1.0, 1.0}) b.cone({x, 0.55, sz * 0.05}, {x, 0.55 + span * 0.4, sz * span}, 0.08);
      }
      b.limb({0, 0.45, 0}, {0.1, 0.0, 0}, 0.015);
      break;
    }
    case 16: {  // rabbit: sitting body, tall ears
      const double ear = b.j(0.7);
      b.ellipsoid({0, 0.45, 0}, {0.5, 0.45, 0.35});
      b.sphere({0.45, 0.95, 0}, 0.25);
      for (double sz : {-1.0, 1.0}) b.limb({0.4, 1.1, sz * 0.08}, {0.4, 1.1 + ear, sz * (0.08 + ear * 0.5)}, 0.06);
      b.sphere({-0.5, 0.3, 0}, 0.12);
      break;
    }
    case 17: {  // moose: deep body on medium legs, raised head with wide antlers
      const double leg = b.j(0.85), L = b.j(0.75);
      b.ellipsoid({0, leg + 0.25, 0}, {L, 0.3, 0.25});
      b.legs4(L * 0.7, 0.15, leg + 0.1, leg + 0.1, 0.06);
      const Vec3 top(L + 0.25, leg + b.j(0.95), 0);
      b.limb({L * 0.8, leg + 0.35, 0}, top, 0.12);
      b.ellipsoid(top + Vec3(0.2, -0.05, 0), {0.3, 0.1, 0.1});
      for (double sz : {-1.0, 1.0}) b.box(top + Vec3(0.05, 0.12, sz * 0.45), {0.1, 0.06, b.j(0.35)});
      break;
    }
    case 18: {  // bat: membrane wings spread wide, swept forward and down, pointed ears
      const double span = b.j(1.4), sweep = b.j(0.5);
      b.ellipsoid({0, 0.6, 0}, {0.15, 0.3, 0.15});
      b.sphere({0.05, 0.95, 0}, 0.12);
      for (double sz : {-1.0, 1.0}) {
        b.box({sweep * 0.3, 0.75, sz * span * 0.35}, {0.02, 0.2, span * 0.35});
        b.box({sweep, 0.5, sz * span * 0.85}, {0.02, b.j(0.35), span * 0.2});
        b.cone({0.05, 1.0, sz * 0.06}, {0.05, 1.25, sz * 0.12}, 0.05);
      }
      break;
    }
    default: {  // ostrich: long bare legs, round body, long upright neck
      const double leg = b.j(1.1);
      b.ellipsoid({0, leg + 0.25, 0}, {0.45, 0.3, 0.3});
      for (double sz : {-1.0, 1.0}) b.limb({0, leg + 0.1, sz * 0.12}, {0.1, 0.0, sz * 0.15}, 0.04);
      const Vec3 top(0.45, leg + b.j(1.0), 0);
      b.limb({0.35, leg + 0.35, 0}, top, 0.05);
      b.sphere(top, 0.09);
      b.box({-0.5, leg + 0.35, 0}, {0.15, 0.15, 0.05});
      break;
    }
  }
  Mesh out = normalize_to_box(b.mesh);
  out.id = "shape" + std::string(index < 10 ? "0" : "") + std::to_string(index);
  return out;
}

std::vector<Mesh> synthetic_corpus(int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("synthetic_corpus: count must be positive");
  std::vector<Mesh> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_creature(i, seed));
  return out;
}

}  // namespace sketchret
