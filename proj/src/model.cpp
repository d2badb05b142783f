#include "fracspec/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "fracspec/errors.hpp"

namespace fracspec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Error model_error(ErrorKind k, const std::string& msg) { return Error(k, "model", msg); }

// Smooth 0 -> 1 step on [0, 1], flat to all orders at both ends.
double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = std::exp(-std::pow(t, -2.0));
  double b = std::exp(-std::pow(1.0 - t, -2.0));
  return a / (a + b);
}

}  // namespace

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidModel: return "invalid-model";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::InvalidRegion: return "invalid-region";
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Compatibility: return "compatibility";
    case ErrorKind::Support: return "support";
    case ErrorKind::Locality: return "locality";
    case ErrorKind::IncompleteTable: return "incomplete-table";
    case ErrorKind::IllConditioning: return "ill-conditioning";
    case ErrorKind::SpuriousMode: return "spurious-mode";
    case ErrorKind::UnderDetermined: return "under-determined";
    case ErrorKind::PoleProximity: return "pole-proximity";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::DensityFailure: return "density-failure";
    case ErrorKind::Range: return "range";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Profile MetricProfile::bind(double L) const {
  switch (kind) {
    case Kind::Flat: {
      double s = scale;
      return [s](double) { return s; };
    }
    case Kind::Bump: {
      double A = amp, k = kappa, c = center;
      return [A, k, c, L](double x) { return 1.0 + A * std::exp(k * (std::cos(kTwoPi * (x - c) / L) - 1.0)); };
    }
    case Kind::Fourier: {
      auto cc = cos_coef;
      auto ss = sin_coef;
      double c0 = scale;
      return [cc, ss, c0, L](double x) {
        double v = c0;
        for (size_t j = 0; j < cc.size(); ++j) v += cc[j] * std::cos(kTwoPi * double(j + 1) * x / L);
        for (size_t j = 0; j < ss.size(); ++j) v += ss[j] * std::sin(kTwoPi * double(j + 1) * x / L);
        return v;
      };
    }
  }
  throw model_error(ErrorKind::InvalidModel, "unknown profile kind");
}

MetricProfile profile_from_json(const nlohmann::json& j) {
  MetricProfile p;
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
    throw Error(ErrorKind::Config, "model", "profile.kind: expected one of flat, bump, fourier");
  std::string kind = j["kind"];
  nlohmann::json params = j.value("params", nlohmann::json::object());
  try {
    if (kind == "flat") {
      p.kind = MetricProfile::Kind::Flat;
      p.scale = params.value("scale", 1.0);
    } else if (kind == "bump") {
      p.kind = MetricProfile::Kind::Bump;
      p.amp = params.value("amp", 0.3);
      p.kappa = params.value("kappa", 10.0);
      p.center = params.value("center", 0.0);
    } else if (kind == "fourier") {
      p.kind = MetricProfile::Kind::Fourier;
      p.scale = params.value("c0", 1.0);
      p.cos_coef = params.value("cos", std::vector<double>{});
      p.sin_coef = params.value("sin", std::vector<double>{});
    } else {
      throw Error(ErrorKind::Config, "model", "profile.kind: unknown kind '" + kind + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "model", std::string("profile.params: ") + e.what());
  }
  return p;
}

nlohmann::json profile_to_json(const MetricProfile& p) {
  nlohmann::json j;
  switch (p.kind) {
    case MetricProfile::Kind::Flat:
      j = {{"kind", "flat"}, {"params", {{"scale", p.scale}}}};
      break;
    case MetricProfile::Kind::Bump:
      j = {{"kind", "bump"}, {"params", {{"amp", p.amp}, {"kappa", p.kappa}, {"center", p.center}}}};
      break;
    case MetricProfile::Kind::Fourier:
      j = {{"kind", "fourier"}, {"params", {{"c0", p.scale}, {"cos", p.cos_coef}, {"sin", p.sin_coef}}}};
      break;
  }
  return j;
}

Eigen::VectorXd SpectralModel::apply_laplacian(const Eigen::VectorXd& u) const {
  return (stiffness * u).cwiseQuotient(weights);
}

double SpectralModel::inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  return (u.cwiseProduct(weights)).dot(v);
}

double SpectralModel::mean(const Eigen::VectorXd& u) const { return inner(u, Eigen::VectorXd::Ones(n)) / total_volume; }

Eigen::VectorXd SpectralModel::project(int k, const Eigen::VectorXd& u) const {
  const Eigen::MatrixXd& B = eigenblocks.at(k);
  return B * (B.transpose() * u.cwiseProduct(weights));
}

Eigen::VectorXd SpectralModel::coefficients(const Eigen::VectorXd& u) const {
  return basis.transpose() * u.cwiseProduct(weights);
}

ClusterResult cluster_eigenvalues(const Eigen::VectorXd& raw_values, const Eigen::MatrixXd& raw_vectors,
                                  const Eigen::VectorXd& weights, double tol) {
  if (!(tol > 0.0 && tol < 0.5)) throw model_error(ErrorKind::InvalidParameter, "rel_gap_tol must lie in (0, 0.5)");
  ClusterResult out;
  const int m = static_cast<int>(raw_values.size());
  int start = 0;
  while (start < m) {
    int end = start + 1;
    while (end < m && raw_values[end] - raw_values[end - 1] < tol * (1.0 + std::abs(raw_values[end]))) ++end;
    int d = end - start;
    out.values.push_back(raw_values.segment(start, d).mean());
    out.multiplicities.push_back(d);
    if (raw_vectors.cols() > 0) {
      Eigen::MatrixXd V = raw_vectors.middleCols(start, d);
      Eigen::MatrixXd G = V.transpose() * weights.asDiagonal() * V;
      Eigen::LLT<Eigen::MatrixXd> llt(G);
      // V L^{-T} is W-orthonormal
      Eigen::MatrixXd Lt = llt.matrixU();
      out.blocks.push_back(Lt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(V));
    }
    start = end;
  }
  return out;
}

namespace {

SpectralModel assemble(int n, double L, const Eigen::VectorXd& a_node, const Eigen::VectorXd& a_edge, double tol) {
  SpectralModel m;
  m.n = n;
  m.circumference = L;
  m.h = L / n;
  m.coords = Eigen::VectorXd::LinSpaced(n, 0.0, L - m.h);
  m.metric = a_node;
  m.edge_metric = a_edge;
  m.weights = a_node.cwiseSqrt() * m.h;
  m.conductance = (a_edge.cwiseSqrt() * m.h).cwiseInverse();
  m.stiffness = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    double c = m.conductance[i];
    m.stiffness(i, i) += c;
    m.stiffness(j, j) += c;
    m.stiffness(i, j) -= c;
    m.stiffness(j, i) -= c;
  }
  m.total_volume = m.weights.sum();

  Eigen::VectorXd wis = m.weights.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd B = wis.asDiagonal() * m.stiffness * wis.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  if (es.info() != Eigen::Success) throw model_error(ErrorKind::InvalidModel, "eigensolver failed");
  Eigen::MatrixXd V = wis.asDiagonal() * es.eigenvectors();
  // Edge-form Rayleigh quotients: positive sums, so small eigenvalues keep full relative accuracy.
  Eigen::VectorXd vals(n);
  for (int j = 0; j < n; ++j) {
    double num = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = V(i, j) - V((i + 1) % n, j);
      num += m.conductance[i] * d * d;
    }
    vals[j] = num / V.col(j).cwiseAbs2().dot(m.weights);
  }
  vals[0] = 0.0;
  std::vector<int> order(n);
  for (int j = 0; j < n; ++j) order[j] = j;
  std::stable_sort(order.begin() + 1, order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
  Eigen::VectorXd sorted_vals(n);
  Eigen::MatrixXd sorted_vecs(n, n);
  for (int j = 0; j < n; ++j) {
    sorted_vals[j] = vals[order[j]];
    sorted_vecs.col(j) = V.col(order[j]);
  }
  vals = sorted_vals;
  V = sorted_vecs;

  ClusterResult cr = cluster_eigenvalues(vals, V, m.weights, tol);
  if (cr.multiplicities[0] != 1) throw model_error(ErrorKind::InvalidModel, "zero eigenvalue is not simple");
  cr.values[0] = 0.0;
  cr.blocks[0] = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(m.total_volume));

  m.distinct_eigenvalues = cr.values;
  m.multiplicities = cr.multiplicities;
  m.eigenblocks = cr.blocks;
  m.basis.resize(n, n);
  m.lambda.resize(n);
  int col = 0;
  for (int k = 0; k < m.num_blocks(); ++k) {
    m.block_start.push_back(col);
    for (int l = 0; l < m.multiplicities[k]; ++l, ++col) {
      m.basis.col(col) = m.eigenblocks[k].col(l);
      m.lambda[col] = col == 0 ? 0.0 : vals[col];
      m.block_of_column.push_back(k);
    }
  }
  m.trusted_modes = n / 3;
  return m;
}

void check_profile_values(const Eigen::VectorXd& a) {
  for (int i = 0; i < a.size(); ++i)
    if (!(a[i] > 0.0) || !std::isfinite(a[i]))
      throw model_error(ErrorKind::InvalidModel, "metric profile must be positive and finite");
}

}  // namespace

SpectralModel build_circle_model(int n, double L, const Profile& profile, double tol) {
  if (n < 8) throw model_error(ErrorKind::Resolution, "need at least 8 nodes, got " + std::to_string(n));
  if (!(L > 0.0)) throw model_error(ErrorKind::InvalidModel, "circumference must be positive");
  double h = L / n;
  Eigen::VectorXd an(n), ae(n);
  for (int i = 0; i < n; ++i) {
    an[i] = profile(i * h);
    ae[i] = profile((i + 0.5) * h);
  }
  check_profile_values(an);
  check_profile_values(ae);
  return assemble(n, L, an, ae, tol);
}

int ObservationRegion::local_index(int g) const {
  if (g < 0 || g >= n_nodes) return -1;
  return local_of_[g];
}

bool ObservationRegion::is_interior(int g) const { return g >= 0 && g < n_nodes && local_kind_[g] == 1; }

double ObservationRegion::observed_length() const {
  double s = 0.0;
  for (const auto& e : local_edges) s += 1.0 / e.conductance;
  return s;
}

Eigen::VectorXd ObservationRegion::restrict(const Eigen::VectorXd& u) const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = u[observed_idx[i]];
  return v;
}

Eigen::VectorXd ObservationRegion::extend(const Eigen::VectorXd& v) const {
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n_nodes);
  for (int i = 0; i < size(); ++i) u[observed_idx[i]] = v[i];
  return u;
}

ObservationRegion make_observation_region(const SpectralModel& model, std::vector<int> interior) {
  const int n = model.n;
  std::sort(interior.begin(), interior.end());
  interior.erase(std::unique(interior.begin(), interior.end()), interior.end());
  if (interior.empty()) throw model_error(ErrorKind::InvalidRegion, "empty interior");
  if (interior.front() < 0 || interior.back() >= n) throw model_error(ErrorKind::InvalidRegion, "node index out of range");

  ObservationRegion r;
  r.n_nodes = n;
  r.h = model.h;
  r.circumference = model.circumference;
  r.local_kind_.assign(n, 0);
  for (int i : interior) r.local_kind_[i] = 1;
  for (int i : interior) {
    for (int j : {(i + n - 1) % n, (i + 1) % n})
      if (r.local_kind_[j] == 0) r.local_kind_[j] = 2;
  }
  for (int i = 0; i < n; ++i) {
    if (r.local_kind_[i] == 1) r.interior_idx.push_back(i);
    else if (r.local_kind_[i] == 2) r.boundary_idx.push_back(i);
    else r.hidden_idx.push_back(i);
  }
  if (r.hidden_idx.empty()) throw model_error(ErrorKind::InvalidRegion, "no hidden nodes left");
  if (r.boundary_idx.empty()) throw model_error(ErrorKind::InvalidRegion, "empty boundary");

  r.local_of_.assign(n, -1);
  for (int i = 0; i < n; ++i)
    if (r.local_kind_[i] != 0) {
      r.local_of_[i] = static_cast<int>(r.observed_idx.size());
      r.observed_idx.push_back(i);
    }
  const int no = r.size();
  r.local_coords.resize(no);
  r.local_metric.resize(no);
  r.local_weights.resize(no);
  for (int a = 0; a < no; ++a) {
    r.local_coords[a] = model.coords[r.observed_idx[a]];
    r.local_metric[a] = model.metric[r.observed_idx[a]];
    r.local_weights[a] = model.weights[r.observed_idx[a]];
  }
  for (int i = 0; i < n; ++i) {
    int j = (i + 1) % n;
    if (r.local_kind_[i] != 0 && r.local_kind_[j] != 0)
      r.local_edges.push_back({r.local_of_[i], r.local_of_[j], model.conductance[i]});
  }
  for (int s : r.boundary_idx) {
    int prev = (s + n - 1) % n, next = (s + 1) % n;
    bool hp = r.local_kind_[prev] == 0, hn = r.local_kind_[next] == 0;
    int orient = 0, inward = -1;
    if (hn && !hp && r.local_kind_[prev] == 1) {
      orient = 1;
      inward = r.local_of_[prev];
    } else if (hp && !hn && r.local_kind_[next] == 1) {
      orient = -1;
      inward = r.local_of_[next];
    }
    r.normal_orientation.push_back(orient);
    r.inward_local.push_back(inward);
  }
  return r;
}

TwoArcModel build_two_arc_model(int n, double fraction, const Profile& observed, const Profile& hidden, double L,
                                double tol) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw model_error(ErrorKind::InvalidRegion, "observed arc fraction must lie in (0, 1)");
  if (n < 8) throw model_error(ErrorKind::Resolution, "need at least 8 nodes, got " + std::to_string(n));
  if (!(L > 0.0)) throw model_error(ErrorKind::InvalidModel, "circumference must be positive");
  const double h = L / n;
  const int m = static_cast<int>(std::lround(fraction * n));
  if (m < 2 || m > n - 2) throw model_error(ErrorKind::InvalidRegion, "observed arc leaves no interior or no hidden nodes");
  const double xm = m * h;
  const double window = 5.0 * h;

  auto a = [&](double x) {
    if (x <= xm) return observed(x);
    double t = std::min(x - xm, L - x) / window;
    double b = smooth_step(t);
    return (1.0 - b) * observed(x) + b * hidden(x);
  };
  Eigen::VectorXd an(n), ae(n);
  for (int i = 0; i < n; ++i) {
    an[i] = a(i * h);
    ae[i] = a((i + 0.5) * h);
  }
  check_profile_values(an);
  check_profile_values(ae);

  TwoArcModel out;
  out.model = assemble(n, L, an, ae, tol);
  std::vector<int> interior;
  for (int i = 1; i < m; ++i) interior.push_back(i);
  out.region = make_observation_region(out.model, interior);
  out.truth.hidden_profile = hidden;
  out.truth.observed_length = out.region.observed_length();
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += 1.0 / out.model.conductance[i];
  out.truth.hidden_length = total - out.truth.observed_length;
  return out;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  if (!j.is_object()) throw Error(ErrorKind::Config, "model", "model: expected an object");
  try {
    c.n_nodes = j.value("n_nodes", c.n_nodes);
    c.circumference = j.value("circumference", c.circumference);
    c.observed_fraction = j.value("observed_fraction", c.observed_fraction);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "model", std::string("model: ") + e.what());
  }
  if (j.contains("profile")) c.profile = profile_from_json(j["profile"]);
  if (j.contains("hidden_profile")) {
    c.has_hidden_profile = true;
    c.hidden_profile = profile_from_json(j["hidden_profile"]);
  }
  return c;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j = {{"n_nodes", c.n_nodes},
                      {"circumference", c.circumference},
                      {"profile", profile_to_json(c.profile)},
                      {"observed_fraction", c.observed_fraction}};
  if (c.has_hidden_profile) j["hidden_profile"] = profile_to_json(c.hidden_profile);
  return j;
}

TwoArcModel build_from_config(const ModelConfig& c) {
  Profile obs = c.profile.bind(c.circumference);
  Profile hid = c.has_hidden_profile ? c.hidden_profile.bind(c.circumference) : obs;
  return build_two_arc_model(c.n_nodes, c.observed_fraction, obs, hid, c.circumference);
}

void write_model_csv(std::ostream& os, const SpectralModel& m) {
  os << "node,coordinate,weight,metric\n";
  os.precision(17);
  for (int i = 0; i < m.n; ++i) os << i << ',' << m.coords[i] << ',' << m.weights[i] << ',' << m.metric[i] << '\n';
}

}  // namespace fracspec
