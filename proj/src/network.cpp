#include "anm/network.hpp"

#include <cmath>
#include <istream>
#include <sstream>

#include <json.hpp>

namespace anm {
namespace {

using nlohmann::json;

constexpr int kBusCols = 5;
constexpr int kDeviceCols = 15;
constexpr int kBranchCols = 8;

double num_at(const json& row, int col, const char* table, int idx) {
  const json& v = row.at(col);
  if (!v.is_number()) {
    throw MalformedDocument(std::string(table) + " row " + std::to_string(idx) +
                                " col " + std::to_string(col) +
                                ": expected a number",
                            idx);
  }
  return v.get<double>();
}

std::optional<double> opt_at(const json& row, int col, const char* table,
                             int idx) {
  const json& v = row.at(col);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) {
    throw MalformedDocument(std::string(table) + " row " + std::to_string(idx) +
                                " col " + std::to_string(col) +
                                ": expected a number or null",
                            idx);
  }
  return v.get<double>();
}

void check_row(const json& row, int width, const char* table, int idx) {
  if (!row.is_array() || static_cast<int>(row.size()) != width) {
    throw MalformedDocument(std::string(table) + " row " + std::to_string(idx) +
                                ": expected " + std::to_string(width) +
                                " columns",
                            idx);
  }
}

bool lt(std::optional<double> a, std::optional<double> b) {
  return a && b && *a < *b;
}

void append(std::vector<std::string>& out, int row, const std::string& where,
            const std::string& what) {
  out.push_back(where + " row " + std::to_string(row) + ": " + what);
}

}  // namespace

int NetworkSpec::slack_bus() const {
  for (const auto& b : buses)
    if (b.bus_type == BusType::slack) return b.id;
  return -1;
}

int NetworkSpec::slack_device() const {
  for (const auto& d : devices)
    if (d.is_slack()) return d.id;
  return -1;
}

std::vector<int> NetworkSpec::devices_at(int bus) const {
  std::vector<int> out;
  for (const auto& d : devices)
    if (d.bus == bus) out.push_back(d.id);
  return out;
}

std::vector<int> NetworkSpec::load_ids() const {
  std::vector<int> out;
  for (const auto& d : devices)
    if (d.is_load()) out.push_back(d.id);
  return out;
}

std::vector<int> NetworkSpec::gen_ids() const {
  std::vector<int> out;
  for (const auto& d : devices)
    if (d.is_generator()) out.push_back(d.id);
  return out;
}

std::vector<int> NetworkSpec::renewable_ids() const {
  std::vector<int> out;
  for (const auto& d : devices)
    if (d.is_renewable()) out.push_back(d.id);
  return out;
}

std::vector<int> NetworkSpec::des_ids() const {
  std::vector<int> out;
  for (const auto& d : devices)
    if (d.is_des()) out.push_back(d.id);
  return out;
}

NetworkSpec parse_network(std::istream& source) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw MalformedDocument(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw MalformedDocument("top level must be an object");
  for (const char* key : {"baseMVA", "bus", "device", "branch"}) {
    if (!doc.contains(key))
      throw MalformedDocument(std::string("missing key '") + key + "'");
  }

  NetworkSpec spec;
  if (!doc["baseMVA"].is_number())
    throw MalformedDocument("baseMVA must be a number");
  spec.base_mva = doc["baseMVA"].get<double>();

  const json& bus = doc["bus"];
  if (!bus.is_array()) throw MalformedDocument("'bus' must be an array");
  for (int i = 0; i < static_cast<int>(bus.size()); ++i) {
    check_row(bus[i], kBusCols, "bus", i);
    BusSpec b;
    b.id = static_cast<int>(num_at(bus[i], 0, "bus", i));
    const int type = static_cast<int>(num_at(bus[i], 1, "bus", i));
    if (type != 0 && type != 1)
      throw MalformedDocument("bus row " + std::to_string(i) +
                                  ": unknown bus type " + std::to_string(type),
                              i);
    b.bus_type = type == 0 ? BusType::slack : BusType::pq;
    b.base_kv = num_at(bus[i], 2, "bus", i);
    b.v_max = num_at(bus[i], 3, "bus", i);
    b.v_min = num_at(bus[i], 4, "bus", i);
    spec.buses.push_back(b);
  }

  const json& dev = doc["device"];
  if (!dev.is_array()) throw MalformedDocument("'device' must be an array");
  for (int i = 0; i < static_cast<int>(dev.size()); ++i) {
    check_row(dev[i], kDeviceCols, "device", i);
    DeviceSpec d;
    d.id = static_cast<int>(num_at(dev[i], 0, "device", i));
    d.bus = static_cast<int>(num_at(dev[i], 1, "device", i));
    const int type = static_cast<int>(num_at(dev[i], 2, "device", i));
    switch (type) {
      case -1: d.dev_type = DeviceType::load; break;
      case 0: d.dev_type = DeviceType::slack; break;
      case 1: d.dev_type = DeviceType::classical_gen; break;
      case 2: d.dev_type = DeviceType::renewable_gen; break;
      case 3: d.dev_type = DeviceType::des; break;
      default:
        throw MalformedDocument("device row " + std::to_string(i) +
                                    ": unknown device type " +
                                    std::to_string(type),
                                i);
    }
    d.qp_ratio = opt_at(dev[i], 3, "device", i);
    d.p_max = opt_at(dev[i], 4, "device", i);
    d.p_min = opt_at(dev[i], 5, "device", i);
    d.q_max = opt_at(dev[i], 6, "device", i);
    d.q_min = opt_at(dev[i], 7, "device", i);
    d.p_plus = opt_at(dev[i], 8, "device", i);
    d.p_minus = opt_at(dev[i], 9, "device", i);
    d.q_plus = opt_at(dev[i], 10, "device", i);
    d.q_minus = opt_at(dev[i], 11, "device", i);
    d.soc_max = opt_at(dev[i], 12, "device", i);
    d.soc_min = opt_at(dev[i], 13, "device", i);
    d.efficiency = opt_at(dev[i], 14, "device", i);
    spec.devices.push_back(d);
  }

  const json& br = doc["branch"];
  if (!br.is_array()) throw MalformedDocument("'branch' must be an array");
  for (int i = 0; i < static_cast<int>(br.size()); ++i) {
    check_row(br[i], kBranchCols, "branch", i);
    BranchSpec e;
    e.from_bus = static_cast<int>(num_at(br[i], 0, "branch", i));
    e.to_bus = static_cast<int>(num_at(br[i], 1, "branch", i));
    e.r = num_at(br[i], 2, "branch", i);
    e.x = num_at(br[i], 3, "branch", i);
    e.b = num_at(br[i], 4, "branch", i);
    e.s_max = num_at(br[i], 5, "branch", i);
    e.tap = num_at(br[i], 6, "branch", i);
    e.shift_deg = num_at(br[i], 7, "branch", i);
    spec.branches.push_back(e);
  }

  auto diags = validate_network(spec);
  if (!diags.empty()) throw ValidationError(diags.front());
  return spec;
}

NetworkSpec parse_network_string(const std::string& text) {
  std::istringstream in(text);
  return parse_network(in);
}

std::string serialize_network(const NetworkSpec& spec) {
  json doc;
  doc["baseMVA"] = spec.base_mva;
  json bus = json::array();
  for (const auto& b : spec.buses) {
    bus.push_back({b.id, b.bus_type == BusType::slack ? 0 : 1, b.base_kv,
                   b.v_max, b.v_min});
  }
  doc["bus"] = bus;
  json dev = json::array();
  auto opt = [](const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
  };
  for (const auto& d : spec.devices) {
    dev.push_back({d.id, d.bus, static_cast<int>(d.dev_type), opt(d.qp_ratio),
                   opt(d.p_max), opt(d.p_min), opt(d.q_max), opt(d.q_min),
                   opt(d.p_plus), opt(d.p_minus), opt(d.q_plus),
                   opt(d.q_minus), opt(d.soc_max), opt(d.soc_min),
                   opt(d.efficiency)});
  }
  doc["device"] = dev;
  json br = json::array();
  for (const auto& e : spec.branches) {
    br.push_back(
        {e.from_bus, e.to_bus, e.r, e.x, e.b, e.s_max, e.tap, e.shift_deg});
  }
  doc["branch"] = br;
  return doc.dump(2);
}

std::vector<std::string> validate_network(const NetworkSpec& spec) {
  std::vector<std::string> out;
  const int nb = static_cast<int>(spec.buses.size());
  const int nd = static_cast<int>(spec.devices.size());

  if (!(spec.base_mva > 0)) out.push_back("baseMVA must be > 0");

  int slack_buses = 0;
  for (int i = 0; i < nb; ++i) {
    const auto& b = spec.buses[i];
    if (b.id != i) append(out, i, "bus", "ids must be 0-indexed contiguous");
    if (b.bus_type == BusType::slack) ++slack_buses;
    if (!(b.base_kv > 0)) append(out, i, "bus", "base_kv must be > 0");
    if (b.v_min > b.v_max) append(out, i, "bus", "v_min > v_max");
  }
  if (slack_buses != 1)
    out.push_back("network must have exactly one slack bus, found " +
                  std::to_string(slack_buses));

  int slack_devs = 0;
  for (int i = 0; i < nd; ++i) {
    const auto& d = spec.devices[i];
    if (d.id != i) append(out, i, "device", "ids must be 0-indexed contiguous");
    if (d.bus < 0 || d.bus >= nb)
      append(out, i, "device", "references nonexistent bus " +
                                   std::to_string(d.bus));
    switch (d.dev_type) {
      case DeviceType::slack: {
        ++slack_devs;
        if (d.bus >= 0 && d.bus < nb &&
            spec.buses[d.bus].bus_type != BusType::slack)
          append(out, i, "device", "slack device must sit on the slack bus");
        break;
      }
      case DeviceType::load: {
        if (!d.p_min || !d.p_max)
          append(out, i, "device", "load needs p_min and p_max");
        else if (!(*d.p_min <= 0.0 && *d.p_max == 0.0))
          append(out, i, "device", "load requires p_min <= 0 = p_max");
        if (!d.qp_ratio || !std::isfinite(*d.qp_ratio))
          append(out, i, "device", "load needs a finite qp_ratio");
        break;
      }
      case DeviceType::classical_gen:
      case DeviceType::renewable_gen: {
        if (!d.p_min || !d.p_max || !d.q_min || !d.q_max) {
          append(out, i, "device", "generator needs P and Q ranges");
          break;
        }
        if (!(0.0 <= *d.p_min)) append(out, i, "device", "generator p_min < 0");
        if (lt(d.p_max, d.p_min)) append(out, i, "device", "p_max < p_min");
        if (lt(d.q_max, d.q_min)) append(out, i, "device", "q_max < q_min");
        if (lt(d.p_max, d.p_plus)) append(out, i, "device", "p_plus > p_max");
        if (lt(d.q_max, d.q_plus)) append(out, i, "device", "q_plus > q_max");
        if (lt(d.q_plus, d.q_minus))
          append(out, i, "device", "q_minus > q_plus");
        if (lt(d.q_minus, d.q_min))
          append(out, i, "device", "q_minus < q_min");
        break;
      }
      case DeviceType::des: {
        if (!d.p_min || !d.p_max || !(*d.p_min < 0.0 && 0.0 < *d.p_max))
          append(out, i, "device", "DES requires p_min < 0 < p_max");
        if (!d.soc_min || !d.soc_max)
          append(out, i, "device", "DES needs SoC bounds");
        else if (*d.soc_min > *d.soc_max)
          append(out, i, "device", "soc_min > soc_max");
        if (!d.efficiency || !(*d.efficiency > 0.0 && *d.efficiency <= 1.0))
          append(out, i, "device", "DES efficiency must be in (0, 1]");
        break;
      }
    }
  }
  if (slack_devs != 1)
    out.push_back("network must have exactly one slack device, found " +
                  std::to_string(slack_devs));

  for (int i = 0; i < static_cast<int>(spec.branches.size()); ++i) {
    const auto& e = spec.branches[i];
    if (e.from_bus < 0 || e.from_bus >= nb || e.to_bus < 0 || e.to_bus >= nb)
      append(out, i, "branch", "references a nonexistent bus");
    if (e.from_bus == e.to_bus)
      append(out, i, "branch", "endpoints must be distinct");
    if (e.r < 0) append(out, i, "branch", "r must be >= 0");
    if (e.x == 0) append(out, i, "branch", "x must be nonzero");
    if (!(e.s_max > 0)) append(out, i, "branch", "s_max must be > 0");
    if (!(e.tap > 0)) append(out, i, "branch", "tap must be > 0");
  }
  return out;
}

NetworkSpec to_per_unit(const NetworkSpec& spec) {
  if (spec.per_unit) throw AlreadyNormalized();
  NetworkSpec out = spec;
  const double base = spec.base_mva;
  auto scale = [base](std::optional<double>& v) {
    if (v) *v /= base;
  };
  for (auto& d : out.devices) {
    scale(d.p_max);
    scale(d.p_min);
    scale(d.q_max);
    scale(d.q_min);
    scale(d.p_plus);
    scale(d.p_minus);
    scale(d.q_plus);
    scale(d.q_minus);
    scale(d.soc_max);
    scale(d.soc_min);
  }
  for (auto& e : out.branches) e.s_max /= base;
  out.per_unit = true;
  return out;
}

}  // namespace anm
