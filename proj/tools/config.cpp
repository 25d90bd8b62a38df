#include "config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace nlscli {

namespace {

namespace pt = boost::property_tree;

struct Field {
  std::string section, name;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::string key() const { return section + "." + name; }
};

double to_double(const std::string& key, const std::string& v) {
  const std::string s = boost::trim_copy(v);
  double x = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(x))
    throw ConfigError(key, "not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string s = boost::trim_copy(v);
  long long x = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError(key, "not an integer: '" + v + "'");
  return x;
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> parts, out;
  boost::split(parts, v, boost::is_any_of(","));
  for (auto& p : parts) {
    boost::trim(p);
    if (!p.empty()) out.push_back(p);
  }
  return out;
}

Field real(std::string sec, std::string name, double ExperimentConfig::*m) {
  Field f{sec, name, nullptr, nullptr};
  const std::string key = sec + "." + name;
  f.get = [m](const ExperimentConfig& c) { return format_double(c.*m); };
  f.set = [m, key](ExperimentConfig& c, const std::string& v) { c.*m = to_double(key, v); };
  return f;
}

Field integer(std::string sec, std::string name, int ExperimentConfig::*m) {
  Field f{sec, name, nullptr, nullptr};
  const std::string key = sec + "." + name;
  f.get = [m](const ExperimentConfig& c) { return std::to_string(c.*m); };
  f.set = [m, key](ExperimentConfig& c, const std::string& v) {
    const long long x = to_int(key, v);
    if (x < -1000000000LL || x > 1000000000LL) throw ConfigError(key, "out of range");
    c.*m = int(x);
  };
  return f;
}

Field text(std::string sec, std::string name, std::string ExperimentConfig::*m) {
  Field f{sec, name, nullptr, nullptr};
  f.get = [m](const ExperimentConfig& c) { return c.*m; };
  f.set = [m](ExperimentConfig& c, const std::string& v) { c.*m = boost::trim_copy(v); };
  return f;
}

Field reals(std::string sec, std::string name, std::vector<double> ExperimentConfig::*m) {
  Field f{sec, name, nullptr, nullptr};
  const std::string key = sec + "." + name;
  f.get = [m](const ExperimentConfig& c) {
    std::string s;
    for (size_t i = 0; i < (c.*m).size(); ++i) s += (i ? ", " : "") + format_double((c.*m)[i]);
    return s;
  };
  f.set = [m, key](ExperimentConfig& c, const std::string& v) {
    (c.*m).clear();
    for (const auto& p : split_list(v)) (c.*m).push_back(to_double(key, p));
  };
  return f;
}

const std::vector<Field>& schema() {
  using C = ExperimentConfig;
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back(text("model", "nonlinearity", &C::nonlinearity));
    f.push_back(reals("model", "coeffs", &C::coeffs));
    f.push_back(real("soliton", "omega", &C::omega));
    f.push_back(real("soliton", "family_lo", &C::family_lo));
    f.push_back(real("soliton", "family_hi", &C::family_hi));
    f.push_back(integer("soliton", "family_steps", &C::family_steps));
    f.push_back(real("soliton", "r_max", &C::r_max));
    f.push_back(integer("soliton", "n", &C::n));
    f.push_back(text("operator", "kind", &C::op_kind));
    f.push_back(real("operator", "omega", &C::op_omega));
    f.push_back(real("operator", "a_amp", &C::a_amp));
    f.push_back(real("operator", "b_amp", &C::b_amp));
    f.push_back(real("operator", "width", &C::width));
    f.push_back(real("operator", "background_amp", &C::background_amp));
    f.push_back(real("operator", "background_width", &C::background_width));
    f.push_back(real("operator", "r_max", &C::op_r_max));
    f.push_back(integer("operator", "n", &C::op_n));
    f.push_back(reals("fgr", "eps", &C::eps));
    f.push_back(real("fgr", "agree_tol", &C::agree_tol));
    f.push_back(real("reduced", "z0", &C::z0));
    f.push_back(real("reduced", "T", &C::reduced_T));
    f.push_back(real("reduced", "dt", &C::reduced_dt));
    f.push_back(real("reduced", "gamma", &C::reduced_gamma));
    f.push_back(real("dynamics", "epsilon", &C::epsilon));
    f.push_back(real("dynamics", "T", &C::T));
    f.push_back(real("dynamics", "dt", &C::dt));
    f.push_back(integer("dynamics", "order", &C::order));
    f.push_back(real("dynamics", "half_width", &C::half_width));
    f.push_back(integer("dynamics", "points", &C::points));
    f.push_back(real("dynamics", "cadence", &C::cadence));
    f.push_back(real("dynamics", "sponge_width", &C::sponge_width));
    f.push_back(real("dynamics", "sponge_strength", &C::sponge_strength));
    f.push_back(real("dynamics", "weight_s", &C::weight_s));
    f.push_back(real("dynamics", "transient", &C::transient));
    f.push_back(real("waveop", "box_radius", &C::box_radius));
    f.push_back(reals("waveop", "times", &C::times));
    f.push_back(real("waveop", "compare_radius", &C::compare_radius));
    f.push_back(real("waveop", "test_width", &C::test_width));
    f.push_back(reals("waveop", "lp_exponents", &C::lp_exponents));
    f.push_back(real("bench", "half_width", &C::bench_half_width));
    f.push_back(integer("bench", "points", &C::bench_points));
    f.push_back(real("bench", "T", &C::bench_T));
    f.push_back(real("bench", "dt", &C::bench_dt));
    f.push_back(real("bench", "s", &C::bench_s));
    f.push_back(integer("bench", "family_size", &C::family_size));
    f.push_back(real("bench", "decay_lo", &C::decay_lo));
    f.push_back(real("bench", "decay_hi", &C::decay_hi));
    f.push_back(integer("bench", "decay_points", &C::decay_points));
    f.push_back(real("bench", "decay_s", &C::decay_s));
    {
      Field st{"run", "stages", nullptr, nullptr};
      st.get = [](const C& c) { return boost::join(c.stages, ", "); };
      st.set = [](C& c, const std::string& v) { c.stages = split_list(v); };
      f.push_back(st);
    }
    {
      Field sd{"run", "seed", nullptr, nullptr};
      sd.get = [](const C& c) { return std::to_string(c.seed); };
      sd.set = [](C& c, const std::string& v) {
        const std::string s = boost::trim_copy(v);
        std::uint64_t x = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc() || p != s.data() + s.size()) throw ConfigError("run.seed", "not an unsigned integer");
        c.seed = x;
      };
      f.push_back(sd);
    }
    f.push_back(integer("run", "refine", &C::refine));
    return f;
  }();
  return fields;
}

const std::set<std::string>& known_stages() {
  static const std::set<std::string> s{"groundstate", "spectrum",   "fgr", "reduced-ode",
                                       "simulate",    "waveop", "bench-estimates"};
  return s;
}

void positive(const std::string& key, double v) {
  if (!(v > 0)) throw ConfigError(key, "must be positive, got " + format_double(v));
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

nls::NonlinearitySpec ExperimentConfig::beta() const {
  if (nonlinearity == "cubic") return nls::NonlinearitySpec::cubic(coeffs.at(0));
  if (nonlinearity == "cubic_quintic") return nls::NonlinearitySpec::cubic_quintic(coeffs.at(0), coeffs.at(1));
  std::vector<double> c{0.0};
  c.insert(c.end(), coeffs.begin(), coeffs.end());
  return nls::NonlinearitySpec::polynomial(c);
}

void ExperimentConfig::validate() const {
  if (nonlinearity != "cubic" && nonlinearity != "cubic_quintic" && nonlinearity != "polynomial")
    throw ConfigError("model.nonlinearity", "expected cubic, cubic_quintic or polynomial");
  const size_t need = nonlinearity == "cubic" ? 1 : nonlinearity == "cubic_quintic" ? 2 : 1;
  if (coeffs.size() < need || (nonlinearity != "polynomial" && coeffs.size() != need))
    throw ConfigError("model.coeffs", "wrong number of coefficients for " + nonlinearity);
  positive("soliton.omega", omega);
  positive("soliton.family_lo", family_lo);
  if (!(family_hi > family_lo)) throw ConfigError("soliton.family_hi", "must exceed family_lo");
  if (family_steps < 3) throw ConfigError("soliton.family_steps", "need at least 3");
  positive("soliton.r_max", r_max);
  if (n < 16) throw ConfigError("soliton.n", "need at least 16 elements");
  if (op_kind != "profile" && op_kind != "synthetic") throw ConfigError("operator.kind", "expected profile or synthetic");
  positive("operator.omega", op_omega);
  positive("operator.width", width);
  positive("operator.background_width", background_width);
  positive("operator.r_max", op_r_max);
  if (op_n < 16) throw ConfigError("operator.n", "need at least 16 elements");
  if (eps.size() < 3) throw ConfigError("fgr.eps", "need at least 3 values");
  for (size_t j = 0; j < eps.size(); ++j) {
    positive("fgr.eps", eps[j]);
    if (j && !(eps[j] < eps[j - 1])) throw ConfigError("fgr.eps", "must decrease");
  }
  positive("fgr.agree_tol", agree_tol);
  positive("reduced.z0", z0);
  positive("reduced.T", reduced_T);
  positive("reduced.dt", reduced_dt);
  if (!(epsilon >= 0)) throw ConfigError("dynamics.epsilon", "must be non-negative");
  positive("dynamics.T", T);
  positive("dynamics.dt", dt);
  if (order != 2 && order != 4) throw ConfigError("dynamics.order", "expected 2 or 4");
  positive("dynamics.half_width", half_width);
  if (points < 16 || points % 2) throw ConfigError("dynamics.points", "need an even count >= 16");
  if (!(cadence >= dt)) throw ConfigError("dynamics.cadence", "must be at least dt");
  if (!(sponge_width >= 0 && sponge_width < half_width)) throw ConfigError("dynamics.sponge_width", "out of range");
  if (!(sponge_strength >= 0)) throw ConfigError("dynamics.sponge_strength", "must be non-negative");
  positive("dynamics.weight_s", weight_s);
  if (!(transient >= 0 && transient < T)) throw ConfigError("dynamics.transient", "must lie in [0, T)");
  positive("waveop.box_radius", box_radius);
  if (times.empty()) throw ConfigError("waveop.times", "need at least one time");
  for (double t : times) positive("waveop.times", t);
  positive("waveop.compare_radius", compare_radius);
  positive("waveop.test_width", test_width);
  for (double p : lp_exponents)
    if (!(p >= 1)) throw ConfigError("waveop.lp_exponents", "exponents must be >= 1");
  positive("bench.half_width", bench_half_width);
  if (bench_points < 16 || bench_points % 2) throw ConfigError("bench.points", "need an even count >= 16");
  positive("bench.T", bench_T);
  positive("bench.dt", bench_dt);
  if (!(bench_s > 1)) throw ConfigError("bench.s", "must exceed 1");
  if (family_size < 1) throw ConfigError("bench.family_size", "need at least 1");
  positive("bench.decay_lo", decay_lo);
  if (!(decay_hi > decay_lo)) throw ConfigError("bench.decay_hi", "must exceed decay_lo");
  if (decay_points < 2) throw ConfigError("bench.decay_points", "need at least 2");
  positive("bench.decay_s", decay_s);
  for (const auto& s : stages)
    if (!known_stages().count(s)) throw ConfigError("run.stages", "unknown stage '" + s + "'");
  if (refine != 1 && refine != 2) throw ConfigError("run.refine", "expected 1 or 2");
}

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream is(text);
  try {
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<syntax>", e.message() + " at line " + std::to_string(e.line()));
  }
  ExperimentConfig c;
  const auto& fields = schema();
  for (const auto& [sec, body] : tree) {
    if (body.empty()) throw ConfigError(sec, "key outside a section or empty section");
    for (const auto& [name, value] : body) {
      auto it = std::find_if(fields.begin(), fields.end(),
                             [&](const Field& f) { return f.section == sec && f.name == name; });
      if (it == fields.end()) throw ConfigError(sec + "." + name, "unknown key");
      it->set(c, value.data());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::string out, cur;
  for (const auto& f : schema()) {
    if (f.section != cur) {
      out += (cur.empty() ? "" : "\n") + std::string("[") + f.section + "]\n";
      cur = f.section;
    }
    out += f.name + " = " + f.get(c) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string s = serialize_config(c);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(s.data(), s.size(), md, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string h;
  for (unsigned i = 0; i < 8; ++i) {
    h += hex[md[i] >> 4];
    h += hex[md[i] & 15];
  }
  return h;
}

}  // namespace nlscli
