#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "anm/network.hpp"

namespace anm {

class WrongDeviceType : public std::logic_error {
 public:
  explicit WrongDeviceType(const std::string& what) : std::logic_error(what) {}
};

class EmptyRegion : public std::logic_error {
 public:
  EmptyRegion() : std::logic_error("operating region is empty") {}
};

struct PQPoint {
  double p = 0.0;
  double q = 0.0;
};

// a*P + b*Q <= c
struct HalfPlane {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
};

// Convex bounded set of feasible (P, Q) injections for one device at one
// timestep. Vertices are derived once from the halfplanes; projection works
// on the vertex polygon.
class OperatingRegion {
 public:
  explicit OperatingRegion(std::vector<HalfPlane> halfplanes);

  const std::vector<HalfPlane>& halfplanes() const { return halfplanes_; }
  // Vertices in counter-clockwise order (1 vertex = point, 2 = segment).
  const std::vector<PQPoint>& vertices() const { return vertices_; }

  bool contains(PQPoint pt, double tol = 1e-12) const;
  // Euclidean-nearest feasible point; identity on interior points.
  PQPoint project(PQPoint requested) const;

 private:
  std::vector<HalfPlane> halfplanes_;
  std::vector<PQPoint> vertices_;
};

// Optional sink for non-fatal construction notes (e.g. clamped dynamic max).
using Diagnostics = std::vector<std::string>;

// Load feasible set: the segment {(P, P*tan_phi) : p_min <= P <= 0}.
OperatingRegion load_region(const DeviceSpec& dev);

// Generator polygon of A.3-style cap constraints; p_max_dynamic is clamped
// into [p_min, p_max] with a diagnostic when it falls outside.
OperatingRegion gen_region(const DeviceSpec& dev, double p_max_dynamic,
                           Diagnostics* diags = nullptr);

// Storage polygon including the SoC-coupled active power bounds for one step
// of length delta_t hours.
OperatingRegion des_region(const DeviceSpec& dev, double soc, double delta_t);

// SoC recursion: charging stores eta*|P|*dt, discharging drains |P|*dt/eta.
double soc_update(const DeviceSpec& dev, double soc, double p_injection,
                  double delta_t);

}  // namespace anm
