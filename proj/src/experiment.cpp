#include "fracspec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "fracspec/carlson.hpp"
#include "fracspec/errors.hpp"
#include "fracspec/forward.hpp"
#include "fracspec/recovery.hpp"

namespace fracspec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error config_error(const std::string& field, const std::string& msg) {
  return Error(ErrorKind::Config, "cli", field + ": " + msg);
}

template <class T>
T field(const json& j, const char* name, T fallback) {
  if (!j.contains(name)) return fallback;
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw config_error(name, "wrong type");
  }
}

json error_json(const Error& e) {
  return {{"module", e.module()}, {"kind", kind_name(e.kind())}, {"message", e.what()}};
}

double rel_err(double est, double truth) { return std::abs(est - truth) / std::abs(truth); }

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorKind::Io, "cli", "cannot write " + p.string());
  os << content;
  if (!os) throw Error(ErrorKind::Io, "cli", "write failed for " + p.string());
}

std::string lambda_label(double lam) {
  std::ostringstream os;
  os << lam;
  return os.str();
}

json check(const std::string& name, double value, double tol) {
  return {{"name", name}, {"value", value}, {"tolerance", tol}, {"pass", std::isfinite(value) && value <= tol}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw config_error("config", "expected a JSON object");
  ExperimentConfig c;
  if (j.contains("model")) {
    try {
      c.model = model_config_from_json(j["model"]);
    } catch (const Error& e) {
      throw config_error("model", e.what());
    }
  }
  c.alpha = field(j, "alpha", c.alpha);
  c.max_m = field(j, "max_m", c.max_m);
  c.K_target = field(j, "K_target", c.K_target);
  c.dtn_lambdas = field(j, "dtn_lambdas", c.dtn_lambdas);
  c.output_dir = field(j, "output_dir", c.output_dir);
  c.seed = field(j, "seed", c.seed);
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw config_error("alpha", "must lie in (0, 1)");
  if (c.K_target < 1) throw config_error("K_target", "must be positive");
  if (c.max_m < 2 * c.K_target + 2) throw config_error("max_m", "must be at least 2 K_target + 2");
  if (c.max_m > 40) throw config_error("max_m", "must not exceed 40");
  for (double l : c.dtn_lambdas)
    if (!(l > 0.0)) throw config_error("dtn_lambdas", "entries must be positive");
  if (c.model.n_nodes < 1) throw config_error("model.n_nodes", "must be positive");

  if (j.contains("sources")) {
    if (!j["sources"].is_array()) throw config_error("sources", "expected an array");
    for (const auto& s : j["sources"]) {
      MollifierSpec m;
      m.center = field(s, "center", m.center);
      m.radius = field(s, "radius", m.radius);
      m.gevrey_index = field(s, "gevrey_index", m.gevrey_index);
      if (!(m.gevrey_index > 1.0 && m.gevrey_index < 2.0)) throw config_error("sources.gevrey_index", "must lie in (1, 2)");
      if (!(m.radius > 0.0)) throw config_error("sources.radius", "must be positive");
      c.sources.push_back(m);
    }
  }
  if (c.sources.empty()) throw config_error("sources", "at least one mollifier source is required");

  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    c.tol.zeta = field(t, "zeta", c.tol.zeta);
    c.tol.eigenvalue = field(t, "eigenvalue", c.tol.eigenvalue);
    c.tol.trace = field(t, "trace", c.tol.trace);
    c.tol.nd_relation = field(t, "nd_relation", c.tol.nd_relation);
    c.tol.dtn_unit = field(t, "dtn_unit", c.tol.dtn_unit);
    c.tol.dtn_large = field(t, "dtn_large", c.tol.dtn_large);
    c.tol.alpha_one = field(t, "alpha_one", c.tol.alpha_one);
    c.tol.inverse = field(t, "inverse", c.tol.inverse);
    c.tol.carlson = field(t, "carlson", c.tol.carlson);
    c.tol.cluster = field(t, "cluster", c.tol.cluster);
  }
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json src = json::array();
  for (const auto& s : c.sources)
    src.push_back({{"center", s.center}, {"radius", s.radius}, {"gevrey_index", s.gevrey_index}});
  return {{"model", model_config_to_json(c.model)},
          {"alpha", c.alpha},
          {"max_m", c.max_m},
          {"K_target", c.K_target},
          {"sources", src},
          {"dtn_lambdas", c.dtn_lambdas},
          {"output_dir", c.output_dir},
          {"seed", c.seed},
          {"tolerances",
           {{"zeta", c.tol.zeta},
            {"eigenvalue", c.tol.eigenvalue},
            {"trace", c.tol.trace},
            {"nd_relation", c.tol.nd_relation},
            {"dtn_unit", c.tol.dtn_unit},
            {"dtn_large", c.tol.dtn_large},
            {"alpha_one", c.tol.alpha_one},
            {"inverse", c.tol.inverse},
            {"carlson", c.tol.carlson},
            {"cluster", c.tol.cluster}}}};
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::Io, "cli", "cannot open config " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw config_error("config", e.what());
  }
  return experiment_config_from_json(j);
}

int build_model_files(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log) {
  TwoArcModel tm = build_from_config(c.model);
  fs::create_directories(out_dir);
  std::ostringstream os;
  write_model_csv(os, tm.model);
  write_file(fs::path(out_dir) / "model.csv", os.str());
  log << "model: " << tm.model.n << " nodes, volume " << tm.model.total_volume << ", " << tm.region.size()
      << " observed nodes\n";
  return kExitOk;
}

RunOutcome run_experiment(const ExperimentConfig& c, const std::string& out_dir, std::ostream& log, bool verbose) {
  RunOutcome out;
  json& S = out.summary;
  S["config"] = experiment_config_to_json(c);
  S["eigenvalue_errors"] = json::array();
  S["trace_errors"] = json::array();
  S["multiplicities"] = json::array();
  S["volume_estimate"] = nullptr;
  S["dtn_error"] = json::array();
  S["diagnostics"] = json::object();
  S["checks"] = json::array();
  json& D = S["diagnostics"];
  json& checks = S["checks"];

  std::ostringstream moments_csv, spectrum_csv, dtn_csv;
  dtn_csv << "lambda,row_node,col_node,assembled,direct\n";
  dtn_csv.precision(17);

  auto flush = [&]() {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "moments.csv", moments_csv.str());
    write_file(fs::path(out_dir) / "spectrum.csv", spectrum_csv.str());
    write_file(fs::path(out_dir) / "dtn.csv", dtn_csv.str());
    write_file(fs::path(out_dir) / "summary.json", S.dump(2) + "\n");
  };

  try {
    TwoArcModel tm = build_from_config(c.model);
    const SpectralModel& model = tm.model;
    const ObservationRegion& region = tm.region;
    if (verbose) log << "model built: " << model.num_blocks() << " distinct eigenvalues\n";

    // forward sanity
    std::mt19937_64 rng(c.seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd u(model.n);
    for (int i = 0; i < model.n; ++i) u[i] = gauss(rng);
    u.array() -= model.mean(u);
    Eigen::VectorXd ku = model.apply_laplacian(u);
    double a1 = (fractional_laplacian_apply(model, 1.0, u) - ku).norm() / ku.norm();
    D["forward_alpha_one_rel_error"] = a1;
    checks.push_back(check("forward_alpha_one", a1, c.tol.alpha_one));

    std::vector<Eigen::VectorXd> sources;
    std::vector<std::string> ids;
    for (size_t i = 0; i < c.sources.size(); ++i) {
      sources.push_back(mollifier_source(region, c.sources[i]));
      ids.push_back("F" + std::to_string(i));
    }
    Eigen::VectorXd lf = region.extend(iterated_laplacian_local(region, sources[0], 1));
    Eigen::VectorXd back = fractional_laplacian_apply(model, c.alpha, solve_fractional(model, c.alpha, lf));
    double inv = (back - lf).cwiseAbs().maxCoeff() / lf.cwiseAbs().maxCoeff();
    D["forward_inverse_rel_error"] = inv;
    checks.push_back(check("forward_inverse", inv, c.tol.inverse));

    // probes
    MomentSchedule sched(c.alpha, c.max_m);
    ForwardMap forward(model, region, c.alpha);
    MomentTable measured = moment_table_measured(region, forward, sched, sources, ids);
    MomentTable oracle = moment_table_oracle(model, region, sched, sources, ids);
    write_moment_csv(moments_csv, measured);
    {
      std::ostringstream tmp;
      write_moment_csv(tmp, oracle);
      std::string body = tmp.str();
      moments_csv << body.substr(body.find('\n') + 1);
    }
    double zdev = 0.0;
    for (int i = 0; i < measured.num_sources(); ++i)
      for (int k = 1; k <= sched.size(); ++k) {
        double scale = std::max(1.0, oracle.values[i].row(k - 1).cwiseAbs().maxCoeff());
        zdev = std::max(zdev, (measured.values[i].row(k - 1) - oracle.values[i].row(k - 1)).cwiseAbs().maxCoeff() / scale);
      }
    D["zeta_max_rel_deviation"] = zdev;
    checks.push_back(check("zeta_agreement", zdev, c.tol.zeta));
    D["schedule_gap"] = sched.gap();

    // direct DtN, always available as ground truth
    std::vector<DtnData> direct;
    double nd = 0.0;
    for (double lam : c.dtn_lambdas) {
      direct.push_back(dtn_direct(model, region, lam));
      nd = std::max(nd, direct.back().nd_residual);
    }
    D["nd_residual"] = nd;
    checks.push_back(check("nd_relation", nd, c.tol.nd_relation));

    // recovery
    MomentMatrix mm = build_moment_matrix(measured, c.K_target);
    std::vector<double> sv = hankel_singular_values(mm);
    D["hankel_singular_values"] = sv;
    int K = select_mode_count(sv, c.K_target);
    D["selected_modes"] = K;
    if (verbose) log << "pencil with K = " << K << "\n";
    RecoveredSpectrum rec;
    try {
      rec = pencil_recover(mm, K);
    } catch (const Error& e) {
      D["hankel_condition"] = sv.size() >= size_t(K) && sv[K - 1] > 0 ? sv[0] / sv[K - 1] : INFINITY;
      throw;
    }
    D["hankel_condition"] = rec.hankel_condition;
    D["amplitude_residual"] = rec.amplitude_residual;
    D["moment_scale"] = rec.scale;
    log << "Hankel condition number " << rec.hankel_condition << "\n";

    const int max_mult = 2;
    bool mult_ok = static_cast<int>(sources.size()) >= max_mult + 2;
    if (mult_ok) recover_multiplicities(rec, max_mult);
    write_spectrum_csv(spectrum_csv, rec);

    SpectralData truth = oracle_spectral_data(model, region, sources);
    double worst_eig = 0.0, worst_trace = 0.0;
    for (int k = 0; k < rec.size(); ++k) {
      const bool det = rec.detectable[k];
      double tv = model.distinct_eigenvalues[k + 1];
      double e = rel_err(rec.eigenvalues[k], tv);
      S["eigenvalue_errors"].push_back(
          {{"mode", k + 1}, {"estimate", rec.eigenvalues[k]}, {"truth", tv}, {"rel_error", e}, {"detectable", det}});
      double te = 0.0;
      for (int i = 0; i < rec.num_sources; ++i) {
        const Eigen::VectorXd& t = truth.traces[k][i];
        double sc = t.cwiseAbs().maxCoeff();
        te = std::max(te, (rec.traces[k][i] - t).cwiseAbs().maxCoeff() / (sc > 0 ? sc : 1.0));
      }
      S["trace_errors"].push_back({{"mode", k + 1}, {"max_rel_error", te}, {"detectable", det}});
      if (mult_ok)
        S["multiplicities"].push_back(
            {{"mode", k + 1}, {"estimate", rec.multiplicities[k]}, {"truth", model.multiplicities[k + 1]}});
      if (det) {
        worst_eig = std::max(worst_eig, e);
        worst_trace = std::max(worst_trace, te);
      }
    }
    checks.push_back(check("eigenvalue_recovery", worst_eig, c.tol.eigenvalue));
    checks.push_back(check("trace_recovery", worst_trace, c.tol.trace));

    double volume = 0.0;
    if (mult_ok) {
      try {
        VolumeEstimate ve = recover_volume_weyl(rec.eigenvalues, rec.multiplicities, 1);
        volume = ve.volume;
        double total = tm.truth.observed_length + tm.truth.hidden_length;
        double hidden = ve.volume - region.observed_length();
        S["volume_estimate"] = {{"circumference", ve.volume},
                                {"truth", total},
                                {"rel_error", rel_err(ve.volume, total)},
                                {"hidden_length", hidden},
                                {"hidden_truth", tm.truth.hidden_length},
                                {"hidden_rel_error", rel_err(hidden, tm.truth.hidden_length)},
                                {"modes_used", ve.modes_used}};
      } catch (const Error& e) {
        D["volume_error"] = error_json(e);
      }
    }

    // DtN from recovered spectral data
    if (volume > 0.0) {
      SpectralData data = spectral_data_from_recovered(rec, region, sources, volume);
      for (size_t l = 0; l < c.dtn_lambdas.size(); ++l) {
        double lam = c.dtn_lambdas[l];
        double tol = lam <= 1.0 ? c.tol.dtn_unit : c.tol.dtn_large;
        try {
          AssembledDtn a = assemble_dtn_from_spectral_data(data, region, lam);
          double err = (a.data.dtn - direct[l].dtn).cwiseAbs().maxCoeff();
          S["dtn_error"].push_back({{"lambda", lam}, {"max_abs_error", err}, {"tolerance", tol}});
          checks.push_back(check("dtn_lambda_" + lambda_label(lam), err, tol));
          for (int r = 0; r < a.data.dtn.rows(); ++r)
            for (int q = 0; q < a.data.dtn.cols(); ++q)
              dtn_csv << lam << ',' << region.boundary_idx[r] << ',' << region.boundary_idx[q] << ','
                      << a.data.dtn(r, q) << ',' << direct[l].dtn(r, q) << '\n';
        } catch (const Error& e) {
          S["dtn_error"].push_back({{"lambda", lam}, {"error", error_json(e)}, {"tolerance", tol}});
          checks.push_back(check("dtn_lambda_" + lambda_label(lam), INFINITY, tol));
        }
      }
    }

    // carlson: oracle zeta against the recovered exponential sum at one node
    {
      const int node = c.sources[0].center;
      const int a = region.local_index(node);
      const Eigen::VectorXd f0 = sources[0];
      double z_lo = std::abs(oracle.values[0](0, a).real()) + 1e-300;
      double z_hi = std::abs(oracle.values[0](2 * c.max_m - 2, a).real()) + 1e-300;
      double rho = std::pow(z_hi / z_lo, 1.0 / (sched.b(2 * c.max_m - 1) - sched.b(1)));
      Sampler h = [&](std::complex<double> z) {
        std::complex<double> v = zeta_oracle(model, region, f0, z, node).value;
        for (int k = 0; k < rec.size(); ++k)
          v -= std::exp((z - c.alpha) * std::log(rec.eigenvalues[k])) * rec.traces[k][0][a];
        return v * std::exp(-z * std::log(rho));
      };
      double scale = std::abs(h(sched.b(1))) + 1.0;
      CarlsonOptions opt;
      opt.grid_step = 1.0;
      VanishingReport vr = check_vanishing(h, sched, c.tol.carlson * scale, opt);
      D["carlson"] = {{"max_schedule", vr.max_schedule},
                      {"sup_grid", vr.sup_grid},
                      {"verdict", vr.verdict},
                      {"gap", sched.gap()}};
    }
  } catch (const Error& e) {
    S["error"] = error_json(e);
    S["status"] = "error";
    out.exit_code = e.kind() == ErrorKind::Io ? kExitIo : kExitPipeline;
    log << "pipeline error [" << e.module() << "/" << kind_name(e.kind()) << "]: " << e.what() << "\n";
    try {
      flush();
    } catch (const Error&) {
      out.exit_code = kExitIo;
    }
    return out;
  }

  bool all = true;
  for (const auto& ch : checks) all = all && ch["pass"].get<bool>();
  S["status"] = all ? "pass" : "fail";
  out.exit_code = all ? kExitOk : kExitAcceptance;
  try {
    flush();
  } catch (const Error& e) {
    log << e.what() << "\n";
    out.exit_code = kExitIo;
  }
  return out;
}

namespace {

double number_at(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw Error(ErrorKind::Io, "cli", std::string("summary field '") + key + "' is not numeric");
  return j[key].get<double>();
}

std::string mark(bool pass) { return pass ? "PASS" : "FAIL"; }

}  // namespace

int report_summary(const std::string& path, std::ostream& out, std::ostream& err) {
  std::ifstream is(path);
  if (!is) {
    err << "cannot open " << path << "\n";
    return kExitIo;
  }
  try {
    json S = json::parse(is);
    if (!S.is_object()) throw Error(ErrorKind::Io, "cli", "summary is not an object");
    double tol_eig = 1e-6, tol_tr = 1e-5;
    if (S.contains("config") && S["config"].contains("tolerances")) {
      tol_eig = number_at(S["config"]["tolerances"], "eigenvalue");
      tol_tr = number_at(S["config"]["tolerances"], "trace");
    }
    out << "status: " << S.value("status", std::string("unknown")) << "\n";
    if (S.contains("error")) out << "error: " << S["error"].value("message", std::string()) << "\n";

    out << "\nmode  estimate              truth                 rel_error   trace_err   mult  verdict\n";
    const json& ev = S.value("eigenvalue_errors", json::array());
    const json& tr = S.value("trace_errors", json::array());
    const json& mu = S.value("multiplicities", json::array());
    for (size_t i = 0; i < ev.size(); ++i) {
      const json& e = ev[i];
      double est = number_at(e, "estimate"), truth = number_at(e, "truth"), re = number_at(e, "rel_error");
      double te = i < tr.size() ? number_at(tr[i], "max_rel_error") : NAN;
      bool det = e.value("detectable", true);
      std::string m = i < mu.size() ? std::to_string(static_cast<int>(number_at(mu[i], "estimate"))) + "/" +
                                          std::to_string(static_cast<int>(number_at(mu[i], "truth")))
                                    : "-";
      std::string verdict = det ? mark(re <= tol_eig && te <= tol_tr) : "undetectable";
      out << std::left << std::setw(6) << static_cast<int>(number_at(e, "mode")) << std::setw(22)
          << std::setprecision(12) << est << std::setw(22) << truth << std::setprecision(3) << std::setw(12) << re
          << std::setw(12) << te << std::setw(6) << m << verdict << "\n";
    }
    if (S.contains("volume_estimate") && S["volume_estimate"].is_object()) {
      const json& v = S["volume_estimate"];
      out << "\nvolume " << number_at(v, "circumference") << " (truth " << number_at(v, "truth") << ", rel "
          << number_at(v, "rel_error") << "); hidden length " << number_at(v, "hidden_length") << " (truth "
          << number_at(v, "hidden_truth") << ")\n";
    }
    for (const auto& d : S.value("dtn_error", json::array())) {
      if (d.contains("max_abs_error"))
        out << "dtn lambda=" << number_at(d, "lambda") << " max error " << number_at(d, "max_abs_error") << " "
            << mark(number_at(d, "max_abs_error") <= number_at(d, "tolerance")) << "\n";
      else
        out << "dtn lambda=" << number_at(d, "lambda") << " not assembled\n";
    }
    out << "\nchecks:\n";
    for (const auto& ch : S.value("checks", json::array())) {
      if (!ch.contains("pass") || !ch["pass"].is_boolean()) throw Error(ErrorKind::Io, "cli", "check without verdict");
      out << "  " << std::left << std::setw(28) << ch.value("name", std::string("?")) << std::setprecision(3)
          << std::setw(12) << (ch["value"].is_number() ? ch["value"].get<double>() : NAN) << " <= " << std::setw(10)
          << number_at(ch, "tolerance") << mark(ch["pass"].get<bool>()) << "\n";
    }
  } catch (const json::exception& e) {
    err << "cannot parse " << path << ": " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace fracspec
