#include "ptobs/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

using json = nlohmann::json;

// Thin cursor over a JSON value that knows its field path.
class Field
{
public:
  Field(const json& value, std::string path) : v_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return v_; }

  [[noreturn]] void fail(const std::string& msg) const { throw ValidationError(path_, msg); }

  void expect_object(std::initializer_list<std::string_view> allowed) const
  {
    if (!v_.is_object()) fail("expected an object");
    for (const auto& item : v_.items()) {
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
        Field(item.value(), child_path(item.key())).fail("unknown field");
      }
    }
  }

  bool has(std::string_view key) const { return v_.contains(key); }

  Field at(std::string_view key) const
  {
    if (!v_.contains(key)) Field(v_, child_path(key)).fail("missing required field");
    return Field(v_.at(std::string(key)), child_path(key));
  }

  std::optional<Field> find(std::string_view key) const
  {
    if (!v_.contains(key) || v_.at(std::string(key)).is_null()) return std::nullopt;
    return Field(v_.at(std::string(key)), child_path(key));
  }

  std::vector<Field> elements() const
  {
    if (!v_.is_array()) fail("expected an array");
    std::vector<Field> out;
    for (std::size_t i = 0; i < v_.size(); ++i) out.emplace_back(v_[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  double number() const
  {
    if (!v_.is_number()) fail("expected a number");
    const double d = v_.get<double>();
    if (!std::isfinite(d)) fail("expected a finite number");
    return d;
  }

  double positive() const
  {
    const double d = number();
    if (!(d > 0.0)) fail("must be positive");
    return d;
  }

  double nonnegative() const
  {
    const double d = number();
    if (!(d >= 0.0)) fail("must be >= 0");
    return d;
  }

  long long integer() const
  {
    if (!v_.is_number_integer()) fail("expected an integer");
    return v_.get<long long>();
  }

  bool boolean() const
  {
    if (!v_.is_boolean()) fail("expected true or false");
    return v_.get<bool>();
  }

  std::string string() const
  {
    if (!v_.is_string()) fail("expected a string");
    return v_.get<std::string>();
  }

  std::vector<double> numbers() const
  {
    std::vector<double> out;
    for (const auto& e : elements()) out.push_back(e.number());
    return out;
  }

private:
  std::string child_path(std::string_view key) const
  {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json& v_;
  std::string path_;
};

std::vector<Complex> read_poles(const Field& f)
{
  std::vector<Complex> poles;
  for (const auto& p : f.elements()) {
    if (p.raw().is_array()) {
      const auto parts = p.numbers();
      if (parts.size() != 2) p.fail("complex pole must be [re, im]");
      poles.emplace_back(parts[0], parts[1]);
    } else {
      poles.emplace_back(p.number(), 0.0);
    }
  }
  return poles;
}

std::vector<double> read_gains(const Field& obs, std::optional<std::vector<Complex>>& poles_out)
{
  const bool has_gains = obs.has("gains");
  const bool has_poles = obs.has("poles");
  if (has_gains == has_poles) obs.fail("give exactly one of `gains` or `poles`");
  if (has_gains) return obs.at("gains").numbers();
  const Field pf = obs.at("poles");
  poles_out = read_poles(pf);
  try {
    return gains_from_poles(*poles_out);
  } catch (const Error& e) {
    pf.fail(e.what());
  }
}

TimeScale read_time_scale(const Field& obs)
{
  const double T = obs.at("T").positive();
  const double m = obs.at("m").positive();
  double cap = kDefaultMuCap;
  if (auto c = obs.find("mu_cap")) {
    cap = c->number();
    if (cap < 1.0) c->fail("must be >= 1");
  }
  return TimeScale(T, m, cap);
}

ObserverDef read_observer(const Field& obs, std::size_t index)
{
  obs.expect_object({"name", "variant", "gains", "poles", "T", "m", "mu_cap", "alpha", "epsilon",
                     "hg_gain_power", "xhat0"});
  ObserverDef def;
  def.variant = obs.at("variant").string();
  def.name = obs.has("name") ? obs.at("name").string() : def.variant + std::to_string(index + 1);
  if (def.name.empty() || !std::all_of(def.name.begin(), def.name.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
      })) {
    obs.at("name").fail("names may only use letters, digits, `_` and `-`");
  }

  auto forbid = [&](std::initializer_list<std::string_view> keys) {
    for (auto k : keys) {
      if (obs.has(k)) obs.at(k).fail("not used by variant `" + def.variant + "`");
    }
  };

  if (def.variant == "pt" || def.variant == "extended_pt") {
    forbid({"alpha", "epsilon", "hg_gain_power"});
    std::vector<double> gains = read_gains(obs, def.poles);
    const TimeScale ts = read_time_scale(obs);
    if (def.variant == "pt") {
      def.spec = PtObserverSpec{std::move(gains), ts};
    } else {
      def.spec = ExtendedPtObserverSpec{std::move(gains), ts};
    }
  } else if (def.variant == "hg") {
    forbid({"gains", "poles", "T", "m", "mu_cap"});
    HgObserverSpec hg{obs.at("alpha").numbers(), obs.at("epsilon").positive()};
    if (auto p = obs.find("hg_gain_power")) {
      const std::string s = p->string();
      if (s == "standard") {
        hg.power = HgGainPower::Standard;
      } else if (s == "linear") {
        hg.power = HgGainPower::Linear;
      } else {
        p->fail("expected `standard` or `linear`");
      }
    }
    def.spec = hg;
  } else {
    obs.at("variant").fail("expected `pt`, `hg` or `extended_pt`");
  }
  return def;
}

std::string read_expr_text(const Field& f)
{
  if (f.raw().is_number()) {
    std::ostringstream os;
    os.precision(17);
    os << f.number();
    return os.str();
  }
  return f.string();
}

}  // namespace

Scenario parse_scenario(std::string_view json_text)
{
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError("(document)", std::string("invalid JSON: ") + e.what());
  }

  const Field root(doc, "");
  root.expect_object({"name", "description", "system", "observers", "initial", "sim", "certify",
                      "metrics", "output"});
  Scenario sc;
  sc.name = root.at("name").string();
  if (auto d = root.find("description")) sc.description = d->string();

  // system
  const Field sys = root.at("system");
  sys.expect_object({"n", "f", "f0", "u", "d"});
  const Field nf = sys.at("n");
  const long long n = nf.integer();
  if (n < 1 || n > kMaxStateDim) nf.fail("must be in 1.." + std::to_string(kMaxStateDim));
  sc.system_def.n = static_cast<int>(n);
  const auto fs = sys.at("f").elements();
  if (static_cast<long long>(fs.size()) != n) {
    sys.at("f").fail("expected " + std::to_string(n) + " expressions, got " + std::to_string(fs.size()));
  }
  for (const auto& f : fs) sc.system_def.f.push_back(read_expr_text(f));
  sc.system_def.f0 = read_expr_text(sys.at("f0"));
  sc.system_def.u = sys.has("u") ? read_expr_text(sys.at("u")) : "0";
  sc.system_def.d = sys.has("d") ? read_expr_text(sys.at("d")) : "0";
  sc.system = std::make_shared<const TriangularSystem>(sc.system_def.n, sc.system_def.f, sc.system_def.f0,
                                                       sc.system_def.u, sc.system_def.d);

  // observers
  const Field obs_list = root.at("observers");
  const auto obs_fields = obs_list.elements();
  if (obs_fields.empty()) obs_list.fail("at least one observer is required");
  std::set<std::string> names;
  for (std::size_t i = 0; i < obs_fields.size(); ++i) {
    ObserverDef def = read_observer(obs_fields[i], i);
    if (!names.insert(def.name).second) obs_fields[i].fail("duplicate observer name `" + def.name + "`");
    try {
      check_spec(def.spec, sc.system_def.n);
    } catch (const Error& e) {
      obs_fields[i].fail(e.what());
    }
    sc.observers.push_back(std::move(def));
  }

  // initial conditions
  const Field init = root.at("initial");
  init.expect_object({"x0", "xhat0"});
  sc.x0 = init.at("x0").numbers();
  if (static_cast<long long>(sc.x0.size()) != n) {
    init.at("x0").fail("expected " + std::to_string(n) + " entries");
  }
  std::optional<StateVec> shared_xhat0;
  if (auto f = init.find("xhat0")) shared_xhat0 = f->numbers();
  for (std::size_t i = 0; i < sc.observers.size(); ++i) {
    const auto k = static_cast<std::size_t>(estimate_dim(sc.observers[i].spec, sc.system_def.n));
    StateVec xh(k, 0.0);
    std::string where = "initial.xhat0";
    if (auto own = obs_fields[i].find("xhat0")) {
      xh = own->numbers();
      where = own->path();
    } else if (shared_xhat0) {
      xh = *shared_xhat0;
    }
    if (xh.size() != k) {
      throw ValidationError(where, "observer `" + sc.observers[i].name + "` needs " + std::to_string(k) +
                                     " initial estimate entries, got " + std::to_string(xh.size()));
    }
    sc.xhat0.push_back(std::move(xh));
  }

  // prescribed times present in the scenario
  std::vector<double> Ts;
  for (const auto& o : sc.observers) {
    if (auto ts = time_scale_of(o.spec)) Ts.push_back(ts->T);
  }

  // sim
  const Field sim = root.at("sim");
  sim.expect_object({"t_end", "dt_base", "dt_min", "singularity_shrink", "record_stride", "noise_std", "seed"});
  sc.sim.t_end = sim.at("t_end").positive();
  sc.sim.dt_base = sim.has("dt_base") ? sim.at("dt_base").positive() : 1e-4;
  const double ref_time = Ts.empty() ? sc.sim.t_end : *std::min_element(Ts.begin(), Ts.end());
  sc.sim.dt_min = sim.has("dt_min") ? sim.at("dt_min").positive() : std::min(sc.sim.dt_base, 1e-9 * ref_time);
  sc.sim.singularity_shrink = sim.has("singularity_shrink") ? sim.at("singularity_shrink").boolean() : true;
  sc.sim.noise_std = sim.has("noise_std") ? sim.at("noise_std").nonnegative() : 0.0;
  if (auto s = sim.find("seed")) {
    const long long seed = s->integer();
    if (seed < 0) s->fail("must be >= 0");
    sc.sim.seed = static_cast<std::uint64_t>(seed);
  }
  if (auto r = sim.find("record_stride")) {
    const long long stride = r->integer();
    if (stride < 1) r->fail("must be >= 1");
    sc.sim.record_stride = static_cast<int>(stride);
  } else {
    // Keep output files around 1e5 rows.
    double steps = sc.sim.t_end / sc.sim.dt_base;
    if (sc.sim.singularity_shrink) {
      for (double T : Ts) {
        if (T < sc.sim.t_end) steps += T / sc.sim.dt_base * std::log(10.0 * sc.sim.dt_base / sc.sim.dt_min);
      }
    }
    sc.sim.record_stride = std::max(1, static_cast<int>(std::ceil(steps / 1e5)));
  }
  try {
    sc.sim.validate();
  } catch (const Error& e) {
    sim.fail(e.what());
  }

  // certify
  if (auto c = root.find("certify")) {
    c->expect_object({"enabled", "gamma_bar_f", "sigma_bar"});
    if (auto e = c->find("enabled")) sc.certify.enabled = e->boolean();
    if (auto g = c->find("gamma_bar_f")) sc.certify.gamma_bar_f = g->nonnegative();
    if (auto s = c->find("sigma_bar")) sc.certify.sigma_bar = s->nonnegative();
  }

  // metrics
  if (auto m = root.find("metrics")) {
    m->expect_object({"reference_T", "delta", "dhat_window_start", "settle_tol"});
    if (auto f = m->find("reference_T")) sc.metrics.reference_T = f->positive();
    if (auto f = m->find("delta")) sc.metrics.delta = f->positive();
    if (auto f = m->find("dhat_window_start")) sc.metrics.dhat_window_start = f->nonnegative();
    if (auto f = m->find("settle_tol")) sc.metrics.settle_tol = f->nonnegative();
  }
  if (!sc.metrics.reference_T) {
    if (Ts.empty()) {
      throw ValidationError("metrics.reference_T", "required when no prescribed-time observer is present");
    }
    sc.metrics.reference_T = Ts.front();
  }

  // output
  if (auto o = root.find("output")) {
    o->expect_object({"csv_path", "report_path", "plot_script"});
    if (auto f = o->find("csv_path")) sc.output.csv_path = f->string();
    if (auto f = o->find("report_path")) sc.output.report_path = f->string();
    if (o->has("plot_script")) {
      const json& raw = o->raw().at("plot_script");
      if (raw.is_null() || (raw.is_boolean() && !raw.get<bool>())) {
        sc.output.plot_script.reset();
      } else {
        sc.output.plot_script = o->at("plot_script").string();
      }
    }
  }
  if (sc.observers.size() > 1 && sc.output.csv_path.find("{observer}") == std::string::npos) {
    throw ValidationError("output.csv_path", "must contain `{observer}` when several observers run");
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario resolve_scenario(const std::string& ref)
{
  if (std::filesystem::exists(ref)) return load_scenario(ref);
  const std::string stem = std::filesystem::path(ref).filename().string();
  for (const auto& [name, text] : builtin_scenarios()) {
    if (name == stem || name == stem + ".json") return parse_scenario(text);
  }
  throw Error("no scenario file or built-in scenario named `" + ref + "`");
}

}  // namespace ptobs
