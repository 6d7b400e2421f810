#include "ipgp/observations.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <json.hpp>
#include <ostream>
#include <sstream>
#include <tuple>

#include "ipgp/errors.hpp"
#include "ipgp/hash.hpp"

namespace ipgp {

using nlohmann::json;

void ObservationSet::validate() const {
  if (d < 1 || n < 2) throw InvalidInput("observation set needs d >= 1 and N >= 2");
  if (m < 1 || l < 1) throw InvalidInput("observation set needs M, L >= 1");
  if (static_cast<int>(times.size()) != l) throw InvalidInput("times must have L entries");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw InvalidInput("observation times must be strictly increasing");
  if (static_cast<long>(snapshots.size()) != static_cast<long>(m) * l)
    throw InvalidInput("observation set must hold M * L snapshots");
  if (!masses.empty() && static_cast<int>(masses.size()) != n)
    throw InvalidInput("one mass per agent required");
  if (interaction == InteractionVariable::VelocityDifference && order != Order::Second)
    throw InvalidInput("velocity-difference interaction requires second-order data");
  const Eigen::Index dim = static_cast<Eigen::Index>(d) * n;
  for (const auto& s : snapshots) {
    if (s.state.x.size() != dim || s.target.size() != dim ||
        (order == Order::Second && s.state.v.size() != dim))
      throw InvalidInput("snapshot dimension does not equal d * N");
  }
}

std::string ObservationSet::hash() const {
  Fnv1a h;
  h.update(std::string_view("ipgp.observations"));
  for (long v : {static_cast<long>(d), static_cast<long>(n), static_cast<long>(order),
                 static_cast<long>(interaction), static_cast<long>(m), static_cast<long>(l)})
    h.update(static_cast<std::uint64_t>(v));
  for (double mass : masses) h.update(mass);
  for (double t : times) h.update(t);
  h.update(sigma_true);
  h.update(seed);
  for (const auto& s : snapshots) {
    for (double v : s.state.x) h.update(v);
    for (double v : s.state.v) h.update(v);
    for (double v : s.target) h.update(v);
  }
  return h.hex();
}

std::vector<State> sample_initial_states(const ParticleSystemSpec& spec, int m,
                                         std::uint64_t seed, const char* stream) {
  std::vector<State> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    Rng rng = Rng::stream(seed, stream, static_cast<std::uint64_t>(k));
    out.push_back(spec.mu0.sample(rng, spec.d, spec.n, spec.order));
  }
  return out;
}

ObservationSet generate_observations(const ParticleSystemSpec& spec, int m, int l, double t_end,
                                     double sigma, std::uint64_t seed,
                                     const IntegratorOptions& options) {
  spec.validate();
  if (m < 1 || l < 1) throw InvalidInput("M and L must be >= 1");
  if (!(sigma >= 0.0)) throw InvalidInput("noise level must be >= 0");
  if (!(t_end > 0.0)) throw InvalidInput("observation horizon T must be > 0");

  ObservationSet obs;
  obs.d = spec.d;
  obs.n = spec.n;
  obs.order = spec.order;
  obs.interaction = spec.interaction;
  obs.masses = spec.masses;
  obs.m = m;
  obs.l = l;
  obs.times = linspace(0.0, t_end, l);
  obs.sigma_true = sigma;
  obs.seed = seed;
  obs.snapshots.reserve(static_cast<std::size_t>(m) * static_cast<std::size_t>(l));

  const auto initial = sample_initial_states(spec, m, seed);
  for (int traj = 0; traj < m; ++traj) {
    std::vector<State> path;
    try {
      path = integrate(spec, initial[static_cast<std::size_t>(traj)], obs.times, options);
    } catch (const IntegrationFailure& e) {
      throw IntegrationFailure("trajectory " + std::to_string(traj) + ": " + e.what(),
                               e.last_good_time(), traj);
    }
    Rng noise = Rng::stream(seed, "noise", static_cast<std::uint64_t>(traj));
    for (auto& state : path) {
      Eigen::VectorXd target = rhs(spec, state);
      if (sigma > 0.0)
        for (Eigen::Index k = 0; k < target.size(); ++k) target(k) += sigma * noise.normal();
      obs.snapshots.push_back({std::move(state), std::move(target)});
    }
  }
  return obs;
}

namespace {

constexpr const char* kFormat = "ipgp.observations/1";

json flat(const ObservationSet& obs, int which) {
  json arr = json::array();
  for (const auto& s : obs.snapshots) {
    const Eigen::VectorXd& v = which == 0 ? s.state.x : which == 1 ? s.state.v : s.target;
    for (double x : v) arr.push_back(x);
  }
  return arr;
}

std::vector<double> read_array(const json& doc, const char* key, std::size_t expected) {
  auto values = doc.at(key).get<std::vector<double>>();
  if (values.size() != expected)
    throw InvalidInput(std::string("array '") + key + "' has " + std::to_string(values.size()) +
                       " entries, expected " + std::to_string(expected));
  return values;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string observations_to_json(const ObservationSet& obs) {
  json doc;
  doc["format"] = kFormat;
  doc["d"] = obs.d;
  doc["N"] = obs.n;
  doc["order"] = to_string(obs.order);
  doc["interaction"] = to_string(obs.interaction);
  doc["masses"] = obs.masses;
  doc["M"] = obs.m;
  doc["L"] = obs.l;
  doc["times"] = obs.times;
  doc["sigma_true"] = obs.sigma_true;
  doc["seed"] = obs.seed;
  doc["positions"] = flat(obs, 0);
  if (obs.order == Order::Second) doc["velocities"] = flat(obs, 1);
  doc["targets"] = flat(obs, 2);
  doc["data_hash"] = obs.hash();
  return doc.dump(1) + "\n";
}

ObservationSet observations_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("observation JSON: ") + e.what(), e.byte);
  }
  try {
    if (doc.at("format").get<std::string>() != kFormat)
      throw InvalidInput("unsupported observation format '" + doc.at("format").get<std::string>() + "'");
    ObservationSet obs;
    obs.d = doc.at("d").get<int>();
    obs.n = doc.at("N").get<int>();
    obs.order = order_from_string(doc.at("order").get<std::string>());
    obs.interaction = interaction_from_string(doc.at("interaction").get<std::string>());
    obs.masses = doc.at("masses").get<std::vector<double>>();
    obs.m = doc.at("M").get<int>();
    obs.l = doc.at("L").get<int>();
    obs.times = doc.at("times").get<std::vector<double>>();
    obs.sigma_true = doc.at("sigma_true").get<double>();
    obs.seed = doc.at("seed").get<std::uint64_t>();
    if (obs.d < 1 || obs.n < 2 || obs.m < 1 || obs.l < 1)
      throw InvalidInput("observation JSON has invalid dimensions");
    const std::size_t dim = static_cast<std::size_t>(obs.d) * static_cast<std::size_t>(obs.n);
    const std::size_t count = static_cast<std::size_t>(obs.m) * static_cast<std::size_t>(obs.l);
    const auto x = read_array(doc, "positions", dim * count);
    const auto z = read_array(doc, "targets", dim * count);
    std::vector<double> v;
    if (obs.order == Order::Second) v = read_array(doc, "velocities", dim * count);
    if (static_cast<int>(obs.times.size()) != obs.l) throw InvalidInput("times must have L entries");
    obs.snapshots.resize(count);
    const auto idim = static_cast<Eigen::Index>(dim);
    for (std::size_t k = 0; k < count; ++k) {
      auto& s = obs.snapshots[k];
      s.state.t = obs.times[k % static_cast<std::size_t>(obs.l)];
      s.state.x = Eigen::Map<const Eigen::VectorXd>(x.data() + k * dim, idim);
      s.target = Eigen::Map<const Eigen::VectorXd>(z.data() + k * dim, idim);
      if (!v.empty()) s.state.v = Eigen::Map<const Eigen::VectorXd>(v.data() + k * dim, idim);
    }
    obs.validate();
    if (doc.contains("data_hash") && doc["data_hash"].get<std::string>() != obs.hash())
      throw ContractError("observation data_hash does not match contents");
    return obs;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("observation JSON: ") + e.what());
  }
}

void write_observations_csv(std::ostream& out, const ObservationSet& obs) {
  const bool second = obs.order == Order::Second;
  out << (second ? "m,l,t,agent,coord,x,v,target\n" : "m,l,t,agent,coord,x,target\n");
  for (int traj = 0; traj < obs.m; ++traj) {
    for (int snap = 0; snap < obs.l; ++snap) {
      const auto& s = obs.at(traj, snap);
      for (int i = 0; i < obs.n; ++i) {
        for (int c = 0; c < obs.d; ++c) {
          const Eigen::Index k = static_cast<Eigen::Index>(i) * obs.d + c;
          out << traj << ',' << snap << ',' << fmt_double(obs.times[static_cast<std::size_t>(snap)])
              << ',' << i << ',' << c << ',' << fmt_double(s.state.x(k));
          if (second) out << ',' << fmt_double(s.state.v(k));
          out << ',' << fmt_double(s.target(k)) << '\n';
        }
      }
    }
  }
}

ObservationSet read_observations_csv(std::istream& in, const ObservationSet& skeleton) {
  const bool second = skeleton.order == Order::Second;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty observation CSV", 0);
  const std::string header = second ? "m,l,t,agent,coord,x,v,target" : "m,l,t,agent,coord,x,target";
  if (line != header) throw ParseError("unexpected CSV header '" + line + "'", 0);

  struct Row {
    double t, x, v, z;
  };
  std::map<std::tuple<int, int, int, int>, Row> rows;
  int max_m = -1, max_l = -1;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const std::size_t line_start = offset;
    offset += line.size() + 1;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(fields, cell, ',')) cells.push_back(cell);
    if (cells.size() != (second ? 8u : 7u)) throw ParseError("malformed CSV row", line_start);
    try {
      const int mm = std::stoi(cells[0]), ll = std::stoi(cells[1]), ag = std::stoi(cells[3]),
                cc = std::stoi(cells[4]);
      Row r{std::stod(cells[2]), std::stod(cells[5]), second ? std::stod(cells[6]) : 0.0,
            std::stod(cells[second ? 7 : 6])};
      rows[{mm, ll, ag, cc}] = r;
      max_m = std::max(max_m, mm);
      max_l = std::max(max_l, ll);
    } catch (const std::exception&) {
      throw ParseError("non-numeric CSV field", line_start);
    }
  }
  ObservationSet obs = skeleton;
  obs.m = max_m + 1;
  obs.l = max_l + 1;
  obs.snapshots.assign(static_cast<std::size_t>(obs.m) * static_cast<std::size_t>(obs.l), {});
  obs.times.assign(static_cast<std::size_t>(obs.l), 0.0);
  const Eigen::Index dim = static_cast<Eigen::Index>(obs.d) * obs.n;
  if (rows.size() != static_cast<std::size_t>(dim) * obs.snapshots.size())
    throw ParseError("CSV does not cover a full M x L x N x d grid", offset);
  for (auto& s : obs.snapshots) {
    s.state.x.resize(dim);
    s.target.resize(dim);
    if (second) s.state.v.resize(dim);
  }
  for (const auto& [key, r] : rows) {
    const auto [mm, ll, ag, cc] = key;
    if (ag >= obs.n || cc >= obs.d) throw ParseError("agent or coordinate out of range", offset);
    auto& s = obs.snapshots[static_cast<std::size_t>(mm) * static_cast<std::size_t>(obs.l) +
                            static_cast<std::size_t>(ll)];
    const Eigen::Index k = static_cast<Eigen::Index>(ag) * obs.d + cc;
    s.state.x(k) = r.x;
    if (second) s.state.v(k) = r.v;
    s.target(k) = r.z;
    s.state.t = r.t;
    obs.times[static_cast<std::size_t>(ll)] = r.t;
  }
  obs.validate();
  return obs;
}

}  // namespace ipgp
