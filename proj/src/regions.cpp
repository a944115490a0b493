#include "anm/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace anm {
namespace {

constexpr double kGeomTol = 1e-9;

struct Flex {
  double tau1, rho1, tau2, rho2;
};

// Slopes/intercepts of the generation-side cap cuts. Absent when the device
// row omits the capability-curve parameters or when p_max == p_plus (the
// polygon collapses to the plain box).
std::optional<Flex> gen_side_flex(const DeviceSpec& d) {
  if (!d.p_plus || !d.q_plus || !d.q_minus || !d.p_max || !d.q_max || !d.q_min)
    return std::nullopt;
  const double denom = *d.p_max - *d.p_plus;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  Flex f;
  f.tau1 = (*d.q_plus - *d.q_max) / denom;
  f.rho1 = *d.q_max - f.tau1 * *d.p_plus;
  f.tau2 = (*d.q_minus - *d.q_min) / denom;
  f.rho2 = *d.q_min - f.tau2 * *d.p_plus;
  return f;
}

// Mirror cuts on the withdrawal side (storage only).
std::optional<Flex> load_side_flex(const DeviceSpec& d) {
  if (!d.p_minus || !d.q_plus || !d.q_minus || !d.p_min || !d.q_max ||
      !d.q_min)
    return std::nullopt;
  const double denom = *d.p_minus - *d.p_min;
  if (std::abs(denom) < 1e-12) return std::nullopt;
  Flex f;
  f.tau1 = (*d.q_min - *d.q_minus) / denom;  // Q >= tau3*P + rho3
  f.rho1 = *d.q_min - f.tau1 * *d.p_minus;
  f.tau2 = (*d.q_max - *d.q_plus) / denom;  // Q <= tau4*P + rho4
  f.rho2 = *d.q_max - f.tau2 * *d.p_minus;
  return f;
}

double dist2(PQPoint a, PQPoint b) {
  const double dp = a.p - b.p, dq = a.q - b.q;
  return dp * dp + dq * dq;
}

}  // namespace

OperatingRegion::OperatingRegion(std::vector<HalfPlane> halfplanes)
    : halfplanes_(std::move(halfplanes)) {
  const int m = static_cast<int>(halfplanes_.size());
  std::vector<PQPoint> pts;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      const auto& h1 = halfplanes_[i];
      const auto& h2 = halfplanes_[j];
      const double det = h1.a * h2.b - h2.a * h1.b;
      if (std::abs(det) < 1e-12) continue;
      PQPoint v{(h1.c * h2.b - h2.c * h1.b) / det,
                (h1.a * h2.c - h2.a * h1.c) / det};
      if (contains(v, kGeomTol)) pts.push_back(v);
    }
  }
  // dedupe
  for (const auto& v : pts) {
    bool dup = false;
    for (const auto& w : vertices_)
      if (dist2(v, w) < kGeomTol * kGeomTol) dup = true;
    if (!dup) vertices_.push_back(v);
  }
  if (vertices_.empty()) throw EmptyRegion();
  if (vertices_.size() > 2) {
    PQPoint centroid{0, 0};
    for (const auto& v : vertices_) {
      centroid.p += v.p;
      centroid.q += v.q;
    }
    centroid.p /= vertices_.size();
    centroid.q /= vertices_.size();
    std::sort(vertices_.begin(), vertices_.end(),
              [&](const PQPoint& a, const PQPoint& b) {
                return std::atan2(a.q - centroid.q, a.p - centroid.p) <
                       std::atan2(b.q - centroid.q, b.p - centroid.p);
              });
  }
}

bool OperatingRegion::contains(PQPoint pt, double tol) const {
  for (const auto& h : halfplanes_)
    if (h.a * pt.p + h.b * pt.q > h.c + tol) return false;
  return true;
}

PQPoint OperatingRegion::project(PQPoint requested) const {
  if (contains(requested)) return requested;
  const int n = static_cast<int>(vertices_.size());
  if (n == 1) return vertices_[0];
  PQPoint best = vertices_[0];
  double bd = std::numeric_limits<double>::infinity();
  const int edges = n == 2 ? 1 : n;
  for (int i = 0; i < edges; ++i) {
    const PQPoint& a = vertices_[i];
    const PQPoint& b = vertices_[(i + 1) % n];
    const double vp = b.p - a.p, vq = b.q - a.q;
    const double len2 = vp * vp + vq * vq;
    double t = 0.0;
    if (len2 > 1e-30)
      t = std::clamp(
          ((requested.p - a.p) * vp + (requested.q - a.q) * vq) / len2, 0.0,
          1.0);
    const PQPoint cand{a.p + t * vp, a.q + t * vq};
    const double d = dist2(requested, cand);
    if (d < bd) {
      bd = d;
      best = cand;
    }
  }
  return best;
}

OperatingRegion load_region(const DeviceSpec& dev) {
  if (!dev.is_load()) throw WrongDeviceType("load_region: device is not a load");
  const double tan_phi = dev.qp_ratio.value();
  const double p_min = dev.p_min.value();
  return OperatingRegion({
      {1, 0, 0.0},            // P <= 0
      {-1, 0, -p_min},        // P >= p_min
      {tan_phi, -1, 0.0},     // Q >= P*tan_phi
      {-tan_phi, 1, 0.0},     // Q <= P*tan_phi
  });
}

OperatingRegion gen_region(const DeviceSpec& dev, double p_max_dynamic,
                           Diagnostics* diags) {
  if (!dev.is_generator() || dev.is_slack())
    throw WrongDeviceType("gen_region: device is not a non-slack generator");
  const double p_min = dev.p_min.value();
  const double p_max = dev.p_max.value();
  if (p_max_dynamic < p_min || p_max_dynamic > p_max) {
    if (diags)
      diags->push_back("device " + std::to_string(dev.id) +
                       ": dynamic max " + std::to_string(p_max_dynamic) +
                       " clamped into [p_min, p_max]");
    p_max_dynamic = std::clamp(p_max_dynamic, p_min, p_max);
  }
  std::vector<HalfPlane> hp{
      {1, 0, p_max_dynamic},
      {-1, 0, -p_min},
      {0, 1, dev.q_max.value()},
      {0, -1, -dev.q_min.value()},
  };
  if (auto f = gen_side_flex(dev)) {
    hp.push_back({-f->tau1, 1, f->rho1});   // Q <= tau1*P + rho1
    hp.push_back({f->tau2, -1, -f->rho2});  // Q >= tau2*P + rho2
  }
  return OperatingRegion(std::move(hp));
}

OperatingRegion des_region(const DeviceSpec& dev, double soc, double delta_t) {
  if (!dev.is_des()) throw WrongDeviceType("des_region: device is not a DES");
  const double eta = dev.efficiency.value();
  const double p_lo = (soc - dev.soc_max.value()) / (delta_t * eta);
  const double p_hi = eta / delta_t * (soc - dev.soc_min.value());
  std::vector<HalfPlane> hp{
      {1, 0, dev.p_max.value()},
      {-1, 0, -dev.p_min.value()},
      {0, 1, dev.q_max.value()},
      {0, -1, -dev.q_min.value()},
      {1, 0, p_hi},    // keeps SoC above its floor over the step
      {-1, 0, -p_lo},  // keeps SoC below its ceiling over the step
  };
  if (auto f = gen_side_flex(dev)) {
    hp.push_back({-f->tau1, 1, f->rho1});
    hp.push_back({f->tau2, -1, -f->rho2});
  }
  if (auto f = load_side_flex(dev)) {
    hp.push_back({f->tau1, -1, -f->rho1});  // Q >= tau3*P + rho3
    hp.push_back({-f->tau2, 1, f->rho2});   // Q <= tau4*P + rho4
  }
  return OperatingRegion(std::move(hp));
}

double soc_update(const DeviceSpec& dev, double soc, double p_injection,
                  double delta_t) {
  const double eta = dev.efficiency.value();
  if (p_injection <= 0.0) return soc - delta_t * eta * p_injection;
  return soc - delta_t / eta * p_injection;
}

}  // namespace anm
