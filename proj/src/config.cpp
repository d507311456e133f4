#include "nvrelax/config.hpp"

#include "nvrelax/errors.hpp"
#include "nvrelax/io.hpp"

#include <set>

namespace nvrelax {

namespace {

using nlohmann::json;

// Walks one JSON object, remembering which keys were consumed so that
// leftovers (usually typos) are reported with their full path.
class ObjectReader {
public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ParseError(where() + "expected an object");
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  void number(const std::string& key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ParseError(where(key) + "expected a number");
      out = v->get<double>();
    }
  }

  std::optional<double> optional_number(const std::string& key) {
    if (const json* v = take(key)) {
      if (!v->is_number()) throw ParseError(where(key) + "expected a number");
      return v->get<double>();
    }
    return std::nullopt;
  }

  void integer(const std::string& key, int& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer()) throw ParseError(where(key) + "expected an integer");
      out = v->get<int>();
    }
  }

  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_integer() || (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)) {
        throw ParseError(where(key) + "expected a nonnegative integer");
      }
      out = v->get<std::uint64_t>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) throw ParseError(where(key) + "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) throw ParseError(where(key) + "expected a string");
      out = v->get<std::string>();
    }
  }

  const json* object(const std::string& key) { return take(key); }

  std::string child_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.count(key)) throw ParseError(where(key) + "unknown key");
    }
  }

private:
  const json* take(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key = {}) const {
    const std::string p = key.empty() ? path_ : child_path(key);
    return (p.empty() ? std::string("<root>") : p) + ": ";
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
void with_key(const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace

double ExperimentConfig::intrinsic_rate_per_ms() const {
  return gamma_intrinsic ? *gamma_intrinsic : 1.0 / *t1_intrinsic_ms;
}

RelaxationBudget ExperimentConfig::budget() const {
  return {intrinsic_rate_per_ms(), gd_relaxation_rate(sample)};
}

T1Protocol ExperimentConfig::t1_protocol() const {
  T1Protocol p;
  p.init_laser_duration = protocol.init_laser_s;
  p.readout_laser_duration = protocol.readout_laser_s;
  p.readout_offset = protocol.readout_offset_s;
  p.readout_length = protocol.readout_length_s;
  p.tau_grid = make_tau_grid(protocol.tau_min_s, protocol.tau_max_s, protocol.n_tau,
                             protocol.log_spacing);
  p.shots_per_point = protocol.shots;
  p.pi_fidelity = protocol.pi_fidelity;
  return p;
}

ExperimentConfig parse_config(const json& doc) {
  ExperimentConfig cfg;
  ObjectReader root(doc, "");

  if (const json* phot = root.object("photophysics")) {
    ObjectReader r(*phot, "photophysics");
    r.string("preset", cfg.preset);
    if (!has_photophysics_preset(cfg.preset)) {
      throw ValidationError("photophysics.preset: unknown preset '" + cfg.preset + "'");
    }
    cfg.photophysics = photophysics_preset(cfg.preset);
    if (const json* ov = r.object("overrides")) {
      ObjectReader o(*ov, "photophysics.overrides");
      auto& p = cfg.photophysics;
      o.number("pump_rate", p.pump_rate);
      o.number("radiative_rate", p.radiative_rate);
      o.number("isc_rate_ms0", p.isc_rate_ms0);
      o.number("isc_rate_ms1", p.isc_rate_ms1);
      o.number("singlet_decay_rate", p.singlet_decay_rate);
      o.number("singlet_branch_to_ms0", p.singlet_branch_to_ms0);
      o.number("ground_eq_ms0", p.ground_eq_ms0);
      o.number("zfs_ghz", p.zfs_ghz);
      o.finish();
    }
    r.finish();
  }
  with_key("photophysics", [&] { cfg.photophysics.validate(); });

  cfg.gamma_intrinsic = root.optional_number("gamma_intrinsic");
  cfg.t1_intrinsic_ms = root.optional_number("t1_intrinsic_ms");
  if (cfg.gamma_intrinsic.has_value() == cfg.t1_intrinsic_ms.has_value()) {
    throw ValidationError("gamma_intrinsic/t1_intrinsic_ms: exactly one must be given");
  }
  if (cfg.gamma_intrinsic && !(*cfg.gamma_intrinsic >= 0.0)) {
    throw ValidationError("gamma_intrinsic: must be >= 0");
  }
  if (cfg.t1_intrinsic_ms && !(*cfg.t1_intrinsic_ms > 0.0)) {
    throw ValidationError("t1_intrinsic_ms: must be > 0");
  }

  if (const json* s = root.object("sample")) {
    ObjectReader r(*s, "sample");
    r.number("amount", cfg.sample.amount);
    std::string unit(to_string(cfg.sample.unit));
    r.string("unit", unit);
    with_key("sample.unit", [&] {
      try {
        cfg.sample.unit = parse_amount_unit(unit);
      } catch (const ParseError& e) {
        throw ValidationError(e.what());
      }
    });
    r.number("coupling_per_unit", cfg.sample.coupling_per_unit);
    r.number("geometry_factor", cfg.sample.geometry_factor);
    r.finish();
  }
  with_key("sample", [&] { cfg.sample.validate(); });

  if (const json* p = root.object("protocol")) {
    ObjectReader r(*p, "protocol");
    auto& pc = cfg.protocol;
    r.number("tau_min_s", pc.tau_min_s);
    r.number("tau_max_s", pc.tau_max_s);
    r.integer("n_tau", pc.n_tau);
    r.boolean("log_spacing", pc.log_spacing);
    r.number("init_laser_s", pc.init_laser_s);
    r.number("readout_laser_s", pc.readout_laser_s);
    r.number("readout_offset_s", pc.readout_offset_s);
    r.number("readout_length_s", pc.readout_length_s);
    r.number("shots", pc.shots);
    r.number("pi_fidelity", pc.pi_fidelity);
    r.finish();
  }
  with_key("protocol", [&] { cfg.t1_protocol().validate(); });

  if (const json* d = root.object("detector")) {
    ObjectReader r(*d, "detector");
    r.number("collection_efficiency", cfg.detector.collection_efficiency);
    r.number("background_rate", cfg.detector.background_rate);
    r.boolean("noiseless", cfg.detector.noiseless);
    r.finish();
  }
  with_key("detector", [&] { cfg.detector.validate(); });

  root.unsigned_integer("seed", cfg.seed);
  std::uint64_t threads = cfg.threads;
  root.unsigned_integer("threads", threads);
  if (threads < 1 || threads > 1024) throw ValidationError("threads: must lie in [1, 1024]");
  cfg.threads = static_cast<unsigned>(threads);
  root.finish();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json resolved_config_json(const ExperimentConfig& c) {
  const auto& p = c.photophysics;
  json out;
  // Resolved rates are written as overrides so the sidecar reloads as-is.
  out["photophysics"] = {{"preset", c.preset},
                         {"overrides",
                          {{"pump_rate", p.pump_rate},
                           {"radiative_rate", p.radiative_rate},
                           {"isc_rate_ms0", p.isc_rate_ms0},
                           {"isc_rate_ms1", p.isc_rate_ms1},
                           {"singlet_decay_rate", p.singlet_decay_rate},
                           {"singlet_branch_to_ms0", p.singlet_branch_to_ms0},
                           {"ground_eq_ms0", p.ground_eq_ms0},
                           {"zfs_ghz", p.zfs_ghz}}}};
  if (c.gamma_intrinsic) out["gamma_intrinsic"] = *c.gamma_intrinsic;
  if (c.t1_intrinsic_ms) out["t1_intrinsic_ms"] = *c.t1_intrinsic_ms;
  out["sample"] = {{"amount", c.sample.amount},
                   {"unit", std::string(to_string(c.sample.unit))},
                   {"coupling_per_unit", c.sample.coupling_per_unit},
                   {"geometry_factor", c.sample.geometry_factor}};
  const auto& pc = c.protocol;
  out["protocol"] = {{"tau_min_s", pc.tau_min_s},
                     {"tau_max_s", pc.tau_max_s},
                     {"n_tau", pc.n_tau},
                     {"log_spacing", pc.log_spacing},
                     {"init_laser_s", pc.init_laser_s},
                     {"readout_laser_s", pc.readout_laser_s},
                     {"readout_offset_s", pc.readout_offset_s},
                     {"readout_length_s", pc.readout_length_s},
                     {"shots", pc.shots},
                     {"pi_fidelity", pc.pi_fidelity}};
  out["detector"] = {{"collection_efficiency", c.detector.collection_efficiency},
                     {"background_rate", c.detector.background_rate},
                     {"noiseless", c.detector.noiseless}};
  out["seed"] = c.seed;
  // threads is left out: it never changes results, and the echo must not either
  return out;
}

}  // namespace nvrelax
