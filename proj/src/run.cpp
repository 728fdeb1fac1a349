#include "ptobs/run.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <type_traits>
#include <variant>

#include "ptobs/error.hpp"

namespace ptobs {

namespace {

namespace fs = std::filesystem;

std::string num(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v)
{
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += num(v[i]);
  }
  return out + "]";
}

std::string complex_list(const std::vector<Complex>& v)
{
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += "(" + num(v[i].real()) + ", " + num(v[i].imag()) + ")";
  }
  return out + "]";
}

std::string matrix(const Matrix& M)
{
  std::string out = "[";
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    if (r) out += ", ";
    std::vector<double> row(static_cast<std::size_t>(M.cols()));
    for (Eigen::Index c = 0; c < M.cols(); ++c) row[static_cast<std::size_t>(c)] = M(r, c);
    out += list(row);
  }
  return out + "]";
}

const char* yes(bool b) { return b ? "true" : "false"; }

class Report
{
public:
  void block(const std::string& name)
  {
    if (!out_.str().empty()) out_ << '\n';
    out_ << '[' << name << "]\n";
  }
  void kv(const std::string& key, const std::string& value) { out_ << key << " = " << value << '\n'; }
  void kv(const std::string& key, double value) { kv(key, num(value)); }
  void kv(const std::string& key, const char* value) { kv(key, std::string(value)); }
  std::string str() const { return out_.str(); }

private:
  std::ostringstream out_;
};

std::string replace_all(std::string s, const std::string& from, const std::string& to)
{
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

void echo_scenario(Report& r, const Scenario& sc)
{
  r.block("scenario");
  r.kv("name", sc.name);
  r.kv("description", sc.description);
  r.kv("system.n", std::to_string(sc.system_def.n));
  for (std::size_t i = 0; i < sc.system_def.f.size(); ++i) r.kv("system.f" + std::to_string(i + 1), sc.system_def.f[i]);
  r.kv("system.f0", sc.system_def.f0);
  r.kv("system.u", sc.system_def.u);
  r.kv("system.d", sc.system_def.d);
  r.kv("system.hash", std::to_string(sc.system->fingerprint()));
  r.kv("initial.x0", list(sc.x0));
  r.kv("sim.t_end", sc.sim.t_end);
  r.kv("sim.dt_base", sc.sim.dt_base);
  r.kv("sim.dt_min", sc.sim.dt_min);
  r.kv("sim.singularity_shrink", yes(sc.sim.singularity_shrink));
  r.kv("sim.record_stride", std::to_string(sc.sim.record_stride));
  r.kv("sim.noise_std", sc.sim.noise_std);
  r.kv("sim.seed", std::to_string(sc.sim.seed));
  r.kv("certify.enabled", yes(sc.certify.enabled));
  r.kv("certify.gamma_bar_f", sc.certify.gamma_bar_f);
  r.kv("certify.sigma_bar", sc.certify.sigma_bar);
  r.kv("metrics.reference_T", *sc.metrics.reference_T);
  r.kv("metrics.delta", sc.metrics.delta.value_or(1e-3 * *sc.metrics.reference_T));
  r.kv("metrics.dhat_window_start",
       sc.metrics.dhat_window_start.value_or(std::max(2.0 * *sc.metrics.reference_T, 2.0)));
  r.kv("metrics.settle_tol", sc.metrics.settle_tol);
  r.kv("output.csv_path", sc.output.csv_path);
  r.kv("output.report_path", sc.output.report_path);
  r.kv("output.plot_script", sc.output.plot_script.value_or("none"));

  for (std::size_t i = 0; i < sc.observers.size(); ++i) {
    const ObserverDef& o = sc.observers[i];
    r.block("observer " + o.name);
    r.kv("variant", o.variant);
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, HgObserverSpec>) {
            r.kv("alpha", list(s.alpha));
            r.kv("epsilon", s.epsilon);
            r.kv("hg_gain_power", s.power == HgGainPower::Standard ? "standard" : "linear");
          } else {
            r.kv("gains", list(s.gains));
            if (o.poles) r.kv("poles", complex_list(*o.poles));
            r.kv("T", s.ts.T);
            r.kv("m", s.ts.m);
            r.kv("mu_cap", s.ts.mu_cap);
          }
        },
        o.spec);
    r.kv("xhat0", list(sc.xhat0[i]));
  }
}

void certificate_block(Report& r, const std::string& name, const Certificate& c)
{
  r.block("certificate " + name);
  r.kv("L", list(c.L));
  r.kv("eigenvalues", complex_list(c.eigvals));
  r.kv("hurwitz", yes(c.hurwitz));
  if (!c.hurwitz) return;
  r.kv("P", matrix(c.P));
  r.kv("lambda_min_P", c.lambda_min_P);
  r.kv("lambda_max_P", c.lambda_max_P);
  r.kv("lambda1", c.lambda1);
  r.kv("lambda2", c.lambda2);
  r.kv("lemma1_holds", yes(c.lemma1_holds));
  r.kv("gamma_bar_f", c.gamma_bar_f);
  r.kv("sigma_bar", c.sigma_bar);
  r.kv("a", c.a);
  r.kv("b", c.b);
  r.kv("t1_star", c.t1_star);
}

void bounds_block(Report& r, const BoundReport& b)
{
  r.kv("bounds", b.pass ? "PASS" : "FAIL");
  r.kv("bounds.samples_checked", std::to_string(b.samples_checked));
  r.kv("bounds.V0", b.V0);
  r.kv("bounds.min_margin_z", b.min_margin_z);
  r.kv("bounds.min_margin_e", b.min_margin_e);
  if (b.violation_index) {
    r.kv("bounds.violation_index", std::to_string(*b.violation_index));
    r.kv("bounds.violation_time", b.violation_time);
    r.kv("bounds.violated_bound", b.violated_bound);
  }
  r.kv("bounds.t2_star", b.t2_star ? num(*b.t2_star) : std::string("none"));
}

void write_text(const fs::path& p, const std::string& text)
{
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

}  // namespace

std::vector<std::string> csv_columns(const Trajectory& traj)
{
  std::vector<std::string> cols{"t"};
  for (int i = 1; i <= traj.n; ++i) cols.push_back("x" + std::to_string(i));
  for (int i = 1; i <= traj.n; ++i) cols.push_back("xhat" + std::to_string(i));
  if (traj.dhat) cols.push_back("dhat");
  cols.push_back("err_norm");
  cols.push_back("mu");
  if (traj.d) cols.push_back("d");
  return cols;
}

std::string trajectory_csv(const Trajectory& traj)
{
  std::string out;
  const auto cols = csv_columns(traj);
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  out.reserve(out.size() + traj.size() * cols.size() * 24);
  char buf[32];
  auto put = [&](double v) {
    out += ',';
    out.append(buf, static_cast<std::size_t>(std::snprintf(buf, sizeof buf, "%.17g", v)));
  };
  for (std::size_t s = 0; s < traj.size(); ++s) {
    out.append(buf, static_cast<std::size_t>(std::snprintf(buf, sizeof buf, "%.17g", traj.times[s])));
    for (double v : traj.x[s]) put(v);
    for (int i = 0; i < traj.n; ++i) put(traj.xhat[s][static_cast<std::size_t>(i)]);
    if (traj.dhat) put((*traj.dhat)[s]);
    put(traj.err_norm[s]);
    put(traj.mu_val[s]);
    if (traj.d) put((*traj.d)[s]);
    out += '\n';
  }
  return out;
}

std::string gnuplot_script(const std::vector<PlotSource>& sources)
{
  std::ostringstream g;
  g << "# gnuplot -p plot.gp\n"
    << "set datafile separator ','\n"
    << "set key autotitle columnhead\n"
    << "set xlabel 't'\n"
    << "set grid\n"
    << "set terminal pngcairo size 900,600\n";

  auto col = [](const PlotSource& s, const std::string& name) -> int {
    auto it = std::find(s.columns.begin(), s.columns.end(), name);
    return it == s.columns.end() ? 0 : static_cast<int>(it - s.columns.begin()) + 1;
  };

  for (const auto& s : sources) {
    g << "\n# " << s.label << '\n';
    for (int i = 1;; ++i) {
      const int cx = col(s, "x" + std::to_string(i));
      const int ch = col(s, "xhat" + std::to_string(i));
      if (!cx || !ch) break;
      g << "set output '" << s.label << "_x" << i << ".png'\n"
        << "set ylabel 'x" << i << "'\n"
        << "plot '" << s.csv_file << "' using 1:" << cx << " with lines, '' using 1:" << ch
        << " with lines dashtype 2\n";
    }
    if (const int ce = col(s, "err_norm")) {
      g << "set output '" << s.label << "_err.png'\n"
        << "set logscale y\n"
        << "set ylabel '|e|'\n"
        << "plot '" << s.csv_file << "' using 1:" << ce << " with lines\n"
        << "unset logscale y\n";
    }
    const int cd = col(s, "d");
    const int cdh = col(s, "dhat");
    if (cd && cdh) {
      g << "set output '" << s.label << "_d.png'\n"
        << "set ylabel 'd'\n"
        << "plot '" << s.csv_file << "' using 1:" << cd << " with lines, '' using 1:" << cdh
        << " with lines dashtype 2\n";
    }
  }
  if (sources.size() > 1) {
    g << "\n# error norms side by side\n"
      << "set output 'err_compare.png'\n"
      << "set logscale y\n"
      << "set ylabel '|e|'\n"
      << "plot ";
    bool first = true;
    for (const auto& s : sources) {
      if (const int ce = col(s, "err_norm")) {
        g << (first ? "" : ", ") << "'" << s.csv_file << "' using 1:" << ce << " with lines title '"
          << s.label << "'";
        first = false;
      }
    }
    g << "\nunset logscale y\n";
  }
  return g.str();
}

fs::path write_plot_script(const fs::path& run_dir)
{
  if (!fs::is_directory(run_dir)) throw Error("not a directory: " + run_dir.string());
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") csvs.push_back(entry.path());
  }
  if (csvs.empty()) throw Error("no CSV files in " + run_dir.string());
  std::sort(csvs.begin(), csvs.end());

  std::vector<PlotSource> sources;
  for (const auto& p : csvs) {
    std::ifstream in(p, std::ios::binary);
    std::string header;
    std::getline(in, header);
    PlotSource s{p.stem().string(), p.filename().string(), {}};
    std::stringstream hs(header);
    for (std::string c; std::getline(hs, c, ',');) s.columns.push_back(c);
    sources.push_back(std::move(s));
  }
  const fs::path out = run_dir / "plot.gp";
  write_text(out, gnuplot_script(sources));
  return out;
}

RunResult run_scenario(Scenario sc, const RunOptions& opts)
{
  if (opts.seed) sc.sim.seed = *opts.seed;
  RunResult res;
  Report rep;
  echo_scenario(rep, sc);

  const std::size_t count = sc.observers.size();
  std::vector<ObserverSpec> specs;
  for (const auto& o : sc.observers) specs.push_back(o.spec);

  res.certificates.resize(count);
  res.bounds.resize(count);
  if (sc.certify.enabled) {
    for (std::size_t i = 0; i < count; ++i) {
      const ObserverDef& o = sc.observers[i];
      if (auto ts = time_scale_of(o.spec)) {
        const auto& gains = std::holds_alternative<PtObserverSpec>(o.spec)
                                ? std::get<PtObserverSpec>(o.spec).gains
                                : std::get<ExtendedPtObserverSpec>(o.spec).gains;
        res.certificates[i] = certify(gains, *ts, sc.certify.gamma_bar_f, sc.certify.sigma_bar);
      }
    }
  }

  if (opts.check_only) {
    for (std::size_t i = 0; i < count; ++i) {
      if (res.certificates[i]) certificate_block(rep, sc.observers[i].name, *res.certificates[i]);
    }
    rep.block("status");
    rep.kv("result", "ok");
    rep.kv("mode", "check-only");
    res.report = rep.str();
    return res;
  }

  std::vector<Trajectory> trajs;
  try {
    trajs = simulate_lockstep(*sc.system, specs, sc.x0, sc.xhat0, sc.sim);
  } catch (const IntegrationError& e) {
    rep.block("status");
    rep.kv("result", "integration_failure");
    rep.kv("message", e.what());
    rep.kv("last_good_time", e.last_good_time());
    res.exit_code = kExitIntegration;
    res.report = rep.str();
    const fs::path rp = opts.out_dir / sc.output.report_path;
    write_text(rp, res.report);
    res.written.push_back(rp);
    return res;
  }

  MetricWindows win;
  win.reference_T = *sc.metrics.reference_T;
  win.delta = sc.metrics.delta;
  win.dhat_window_start = sc.metrics.dhat_window_start;
  win.settle_tol = sc.metrics.settle_tol;
  const std::size_t hash = sc.system->fingerprint();

  std::vector<PlotSource> plot_sources;
  for (std::size_t i = 0; i < count; ++i) {
    const ObserverDef& o = sc.observers[i];
    const Trajectory& tr = trajs[i];
    MetricWindows w = win;
    if (auto ts = time_scale_of(o.spec)) w.reference_T = ts->T;
    res.metrics.push_back(compute_metrics(tr, w, hash));

    const std::string file = replace_all(sc.output.csv_path, "{observer}", o.name);
    const fs::path cp = opts.out_dir / file;
    write_text(cp, trajectory_csv(tr));
    res.written.push_back(cp);
    plot_sources.push_back({o.name, file, csv_columns(tr)});

    if (res.certificates[i]) {
      const Certificate& c = *res.certificates[i];
      certificate_block(rep, o.name, c);
      if (c.hurwitz) {
        res.bounds[i] = check_trajectory_bounds(tr, c, c.ts);
        bounds_block(rep, *res.bounds[i]);
      }
    } else if (const auto* hg = std::get_if<HgObserverSpec>(&o.spec); hg && sc.certify.enabled) {
      rep.block("certificate " + o.name);
      rep.kv("alpha", list(hg->alpha));
      const auto eig = eigenvalues(companion(hg->alpha));
      rep.kv("eigenvalues_alpha", complex_list(eig));
      rep.kv("hurwitz", yes(is_hurwitz(eig)));
    }

    const RunMetrics& m = res.metrics.back();
    rep.block("metrics " + o.name);
    rep.kv("reference_T", w.reference_T);
    rep.kv("peak_err", m.peak_err);
    rep.kv("peak_time", m.peak_time);
    rep.kv("err_at_T_minus", m.err_at_T_minus);
    rep.kv("post_T_max_err", m.post_T_max_err);
    if (m.dhat_track_err) rep.kv("dhat_track_err", *m.dhat_track_err);
    rep.kv("settled", yes(m.settled));
    rep.kv("samples", std::to_string(tr.size()));
  }

  for (std::size_t i = 0; i < count; ++i) {
    if (sc.observers[i].variant != "pt") continue;
    const double T = time_scale_of(sc.observers[i].spec)->T;
    for (std::size_t j = 0; j < count; ++j) {
      if (sc.observers[j].variant != "hg") continue;
      // The high-gain run is probed at the T of the observer it is compared with.
      MetricWindows w = win;
      w.reference_T = T;
      const RunMetrics hg = compute_metrics(trajs[j], w, hash);
      PairComparison pc{sc.observers[i].name, sc.observers[j].name, compare(res.metrics[i], hg)};
      rep.block("comparison " + pc.pt_name + " vs " + pc.hg_name);
      rep.kv("peak_ratio", pc.result.peak_ratio);
      rep.kv("steady_ratio", pc.result.steady_ratio);
      rep.kv("pt_lower_peak", yes(pc.result.pt_lower_peak));
      rep.kv("pt_lower_post_T", yes(pc.result.pt_lower_post_T));
      res.comparisons.push_back(std::move(pc));
    }
  }

  if (sc.output.plot_script) {
    const fs::path gp = opts.out_dir / *sc.output.plot_script;
    write_text(gp, gnuplot_script(plot_sources));
    res.written.push_back(gp);
  }

  rep.block("status");
  rep.kv("result", "ok");
  res.report = rep.str();
  const fs::path rp = opts.out_dir / sc.output.report_path;
  write_text(rp, res.report);
  res.written.push_back(rp);
  res.trajectories = std::move(trajs);
  return res;
}

}  // namespace ptobs
