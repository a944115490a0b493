#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace anm {

// Parse/validation failures carry the offending row so callers can point at
// the exact table entry in the input document.
class MalformedDocument : public std::runtime_error {
 public:
  MalformedDocument(std::string msg, int row = -1)
      : std::runtime_error(std::move(msg)), row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string msg, int row = -1)
      : std::runtime_error(std::move(msg)), row_(row) {}
  int row() const { return row_; }

 private:
  int row_;
};

class AlreadyNormalized : public std::logic_error {
 public:
  AlreadyNormalized() : std::logic_error("network is already in per-unit") {}
};

enum class BusType { slack = 0, pq = 1 };

enum class DeviceType : int {
  load = -1,
  slack = 0,
  classical_gen = 1,
  renewable_gen = 2,
  des = 3,
};

struct BusSpec {
  int id = 0;
  BusType bus_type = BusType::pq;
  double base_kv = 0.0;  // RMS base voltage of the zone
  double v_max = 0.0;    // p.u.
  double v_min = 0.0;    // p.u.
};

// Power fields are MW/MVAr/MWh as parsed; per-unit after to_per_unit().
// Inapplicable table cells ("-") stay absent; they are never coerced to zero.
struct DeviceSpec {
  int id = 0;
  int bus = 0;
  DeviceType dev_type = DeviceType::load;
  std::optional<double> qp_ratio;  // loads: Q/P = tan(phi)
  std::optional<double> p_max, p_min;
  std::optional<double> q_max, q_min;
  std::optional<double> p_plus, p_minus;
  std::optional<double> q_plus, q_minus;
  std::optional<double> soc_max, soc_min;
  std::optional<double> efficiency;

  bool is_load() const { return dev_type == DeviceType::load; }
  bool is_slack() const { return dev_type == DeviceType::slack; }
  bool is_generator() const {
    return dev_type == DeviceType::classical_gen ||
           dev_type == DeviceType::renewable_gen;
  }
  bool is_renewable() const { return dev_type == DeviceType::renewable_gen; }
  bool is_des() const { return dev_type == DeviceType::des; }
};

struct BranchSpec {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;      // p.u.
  double x = 0.0;      // p.u.
  double b = 0.0;      // total charging susceptance, p.u.
  double s_max = 0.0;  // MVA (p.u. after normalization)
  double tap = 1.0;
  double shift_deg = 0.0;
};

struct NetworkSpec {
  double base_mva = 0.0;
  std::vector<BusSpec> buses;
  std::vector<DeviceSpec> devices;
  std::vector<BranchSpec> branches;
  bool per_unit = false;  // set once by to_per_unit()

  int slack_bus() const;
  int slack_device() const;
  std::vector<int> devices_at(int bus) const;
  std::vector<int> load_ids() const;
  std::vector<int> gen_ids() const;  // non-slack generators, id order
  std::vector<int> renewable_ids() const;
  std::vector<int> des_ids() const;
};

// Reads the four-key JSON document {"baseMVA", "bus", "device", "branch"}.
// Throws MalformedDocument on structural problems and ValidationError when a
// NetworkSpec invariant fails.
NetworkSpec parse_network(std::istream& source);
NetworkSpec parse_network_string(const std::string& text);

// Inverse of parse_network; numeric fields survive a round-trip bit-exact.
std::string serialize_network(const NetworkSpec& spec);

// Human-readable diagnostics; empty iff every invariant holds. Never throws.
std::vector<std::string> validate_network(const NetworkSpec& spec);

// Divides all MW/MVAr/MWh quantities by base_mva. Branch impedances are
// already per-unit and stay untouched. Throws AlreadyNormalized on re-entry.
NetworkSpec to_per_unit(const NetworkSpec& spec);

}  // namespace anm
