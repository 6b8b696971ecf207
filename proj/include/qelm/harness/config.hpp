#pragma once

// JSON experiment configuration.
//
//   {
//     "experiment": {
//       "task": "estimate_chi" | "estimate_lambda",       (required)
//       "output_path": "results.csv",                     (required)
//       "fixed_values": [0.1, 0.5, 1.0],
//       "grid_size": 40,
//       "grid_range": [0.0, 1.5707963267948966],
//       "steps": 10,
//       "realizations": 200,
//       "extensions": ["none", "past_step", "fixed_step:1", "extra_observable"],
//       "train_fraction": 0.75,
//       "master_seed": 20250101
//     },
//     "collision": {
//       "n_sys": 2, "n_bath": 2, "j_scale": 1.0, "dt": 1.0,
//       "boundary": "open" | "periodic", "interacting_bath": true,
//       "sys_init": "zeros", "bath_init": "mixed"
//     },
//     "reservoir": {
//       "n_res": 5, "h": 1.0, "j_scale": 1.0, "evolve_time": 10.0,
//       "input_sites": [0, 1], "ancilla_init": "zeros"
//     },
//     "readout": { "epsilon": 0.0, "bias": true }
//   }
//
// Named states: "zeros" = |0…0⟩, "plus" = |+…+⟩, "mixed" = I/2^n.
// Every key except task and output_path is optional; unknown keys are errors.

#include "qelm/harness/experiment.hpp"

#include <json.hpp>

#include <optional>
#include <set>
#include <string>

namespace qelm {

inline DensityMatrix named_state(std::string_view name, std::size_t num_qubits) {
  if (name == "zeros") return DensityMatrix::basis_state(num_qubits);
  if (name == "mixed") return DensityMatrix::maximally_mixed(num_qubits);
  if (name == "plus") {
    const std::size_t dim = std::size_t{1} << num_qubits;
    Eigen::VectorXcd psi = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(dim),
                                                      1.0 / std::sqrt(static_cast<double>(dim)));
    return DensityMatrix(psi * psi.adjoint(), DensityMatrix::unchecked);
  }
  throw std::invalid_argument("unknown state '" + std::string(name) +
                              "' (expected zeros, plus or mixed)");
}

inline std::optional<std::string> state_name(const DensityMatrix& rho) {
  for (const char* name : {"zeros", "plus", "mixed"})
    if (named_state(name, rho.num_qubits()) == rho) return std::string(name);
  return std::nullopt;
}

namespace detail {

using nlohmann::json;

class SectionReader {
 public:
  SectionReader(const json& root, std::string section) : section_(std::move(section)) {
    if (!root.contains(section_)) {
      node_ = json::object();
      return;
    }
    node_ = root.at(section_);
    if (!node_.is_object()) throw std::invalid_argument(section_ + ": must be an object");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  template <class T>
  void read(const std::string& key, T& out) {
    seen_.insert(key);
    if (!node_.contains(key)) return;
    try {
      out = node_.at(key).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(section_ + "." + key + ": wrong type");
    }
  }

  template <class T>
  T require(const std::string& key) {
    if (!node_.contains(key))
      throw std::invalid_argument(section_ + "." + key + ": required key missing");
    T out{};
    read(key, out);
    return out;
  }

  void reject_unknown() const {
    for (const auto& item : node_.items())
      if (!seen_.count(item.key()))
        throw std::invalid_argument(section_ + "." + item.key() + ": unknown key");
  }

 private:
  std::string section_;
  json node_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses and validates a JSON configuration, applying every default.
inline ExperimentSpec parse_spec(const std::string& text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw std::invalid_argument("config: top level must be an object");
  for (const auto& item : root.items())
    if (item.key() != "experiment" && item.key() != "collision" && item.key() != "reservoir" &&
        item.key() != "readout")
      throw std::invalid_argument(item.key() + ": unknown section");

  detail::SectionReader exp(root, "experiment");
  const Task task = parse_task(exp.require<std::string>("task"));
  ExperimentSpec spec = ExperimentSpec::defaults(task);
  spec.output_path = exp.require<std::string>("output_path");
  exp.read("fixed_values", spec.fixed_values);
  exp.read("grid_size", spec.grid_size);
  if (exp.has("grid_range")) {
    std::vector<double> range;
    exp.read("grid_range", range);
    if (range.size() != 2)
      throw std::invalid_argument("experiment.grid_range: expected [lo, hi]");
    spec.grid_lo = range[0];
    spec.grid_hi = range[1];
  }
  exp.read("steps", spec.steps);
  exp.read("realizations", spec.realizations);
  if (exp.has("extensions")) {
    std::vector<std::string> names;
    exp.read("extensions", names);
    spec.extensions.clear();
    for (const auto& n : names) spec.extensions.push_back(Extension::parse(n));
  }
  exp.read("train_fraction", spec.train_fraction);
  exp.read("master_seed", spec.master_seed);
  exp.reject_unknown();

  detail::SectionReader col(root, "collision");
  auto& c = spec.collision;
  col.read("n_sys", c.n_sys);
  c.n_bath = c.n_sys;
  col.read("n_bath", c.n_bath);
  col.read("j_scale", c.j_scale);
  col.read("dt", c.dt);
  std::string boundary = std::string(to_string(c.boundary));
  col.read("boundary", boundary);
  c.boundary = parse_boundary(boundary);
  col.read("interacting_bath", c.interacting_bath);
  std::string sys_init = "zeros", bath_init = "mixed";
  col.read("sys_init", sys_init);
  col.read("bath_init", bath_init);
  col.reject_unknown();
  if (c.n_sys < 1 || c.n_sys > 4)
    throw std::domain_error("collision.n_sys: must lie in 1..4");
  c.sys_init = named_state(sys_init, c.n_sys);
  c.bath_init = named_state(bath_init, c.n_bath);
  c.j_sys.assign(bond_count(c.n_sys, c.boundary), 0.0);
  c.j_bath.assign(bond_count(c.n_bath, c.boundary), 0.0);

  detail::SectionReader res(root, "reservoir");
  auto& r = spec.reservoir;
  res.read("n_res", r.n_res);
  res.read("h", r.h);
  res.read("j_scale", r.j_scale);
  res.read("evolve_time", r.evolve_time);
  r.input_sites.resize(c.n_sys);
  for (std::size_t i = 0; i < c.n_sys; ++i) r.input_sites[i] = i;
  res.read("input_sites", r.input_sites);
  std::string ancilla = "zeros";
  res.read("ancilla_init", ancilla);
  res.reject_unknown();
  if (r.n_res < 1 || r.n_res > 8) throw std::domain_error("reservoir.n_res: must lie in 1..8");
  if (r.input_sites.size() > r.n_res)
    throw std::domain_error("reservoir.input_sites: more sites than reservoir qubits");
  r.j_matrix = RealMatrix::Zero(static_cast<Eigen::Index>(r.n_res), static_cast<Eigen::Index>(r.n_res));
  const std::size_t n_anc = r.n_res - r.input_sites.size();
  r.ancilla_init = named_state(ancilla, std::max<std::size_t>(n_anc, 1));

  detail::SectionReader ro(root, "readout");
  ro.read("epsilon", spec.epsilon);
  ro.read("bias", spec.bias);
  ro.reject_unknown();

  spec.validate();
  return spec;
}

inline nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  using nlohmann::json;
  auto name_of = [](const DensityMatrix& rho, const char* field) {
    auto n = state_name(rho);
    if (!n) throw std::invalid_argument(std::string(field) + ": custom state cannot be serialized");
    return *n;
  };
  std::vector<std::string> ext;
  for (const auto& e : spec.extensions) ext.push_back(e.name());
  const auto& c = spec.collision;
  const auto& r = spec.reservoir;
  return json{
      {"experiment",
       {{"task", to_string(spec.task)},
        {"output_path", spec.output_path},
        {"fixed_values", spec.fixed_values},
        {"grid_size", spec.grid_size},
        {"grid_range", {spec.grid_lo, spec.grid_hi}},
        {"steps", spec.steps},
        {"realizations", spec.realizations},
        {"extensions", ext},
        {"train_fraction", spec.train_fraction},
        {"master_seed", spec.master_seed}}},
      {"collision",
       {{"n_sys", c.n_sys},
        {"n_bath", c.n_bath},
        {"j_scale", c.j_scale},
        {"dt", c.dt},
        {"boundary", std::string(to_string(c.boundary))},
        {"interacting_bath", c.interacting_bath},
        {"sys_init", name_of(c.sys_init, "collision.sys_init")},
        {"bath_init", name_of(c.bath_init, "collision.bath_init")}}},
      {"reservoir",
       {{"n_res", r.n_res},
        {"h", r.h},
        {"j_scale", r.j_scale},
        {"evolve_time", r.evolve_time},
        {"input_sites", r.input_sites},
        {"ancilla_init", name_of(r.ancilla_init, "reservoir.ancilla_init")}}},
      {"readout", {{"epsilon", spec.epsilon}, {"bias", spec.bias}}},
  };
}

inline std::string serialize_spec(const ExperimentSpec& spec) { return spec_to_json(spec).dump(2); }

}  // namespace qelm
