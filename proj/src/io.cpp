#include "adafat/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "adafat/error.hpp"

namespace adafat::io {

using nlohmann::json;

namespace {

double parse_field(std::string_view field, const std::string& label, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
    field.remove_suffix(1);
  }
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (field.empty() || ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error(ErrorCode::Io, label + ":" + std::to_string(line) + ": cannot parse '" +
                                   std::string(field) + "' as a number");
  }
  return value;
}

json matrix_rows(const MatrixXd& M) {
  json rows = json::array();
  for (Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_rows(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) {
    throw Error(ErrorCode::BadSpec, what + " must be a non-empty array of rows");
  }
  const auto r = static_cast<Index>(rows.size());
  const auto c = static_cast<Index>(rows[0].size());
  MatrixXd M(r, c);
  for (Index i = 0; i < r; ++i) {
    if (static_cast<Index>(rows[static_cast<std::size_t>(i)].size()) != c) {
      throw Error(ErrorCode::BadSpec, what + " has ragged rows");
    }
    for (Index k = 0; k < c; ++k) {
      M(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)].get<double>();
    }
  }
  return M;
}

VectorXd vector_from_json(const json& arr, const std::string& what) {
  if (!arr.is_array()) throw Error(ErrorCode::BadSpec, what + " must be an array");
  VectorXd v(static_cast<Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Index>(i)) = arr[i].get<double>();
  return v;
}

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string sigma_kind(SigmaEpsSpec::Kind kind) {
  switch (kind) {
    case SigmaEpsSpec::Kind::Identity: return "identity";
    case SigmaEpsSpec::Kind::Banded: return "banded";
    case SigmaEpsSpec::Kind::User: return "user";
  }
  return "?";
}

}  // namespace

MatrixXd parse_csv_matrix(std::istream& in, const std::string& label) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_field(rest.substr(0, comma), label, line_no));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::Io, label + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(rows.front().size()) + " fields");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::Io, label + ": no data rows");
  MatrixXd M(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      M(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    }
  }
  return M;
}

MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return parse_csv_matrix(in, path);
}

void write_csv_matrix(const std::string& path, const MatrixXd& M) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.imbue(std::locale::classic());
  out << std::setprecision(17);
  for (Index r = 0; r < M.rows(); ++r) {
    for (Index c = 0; c < M.cols(); ++c) {
      if (c) out << ',';
      out << M(r, c);
    }
    out << '\n';
  }
}

json to_json(const TestOutcome& o, bool emit_pvalues) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = std::string(to_string(o.method));
  j["tau"] = o.tau;
  j["nu"] = o.nu;
  j["threshold"] = o.threshold;
  j["pi0_hat"] = o.pi0_hat;
  j["fdr_estimate"] = o.fdr_estimate;
  j["rejected"] = o.rejected;
  j["n_rejected"] = o.rejected.size();
  if (o.q_hat) j["q_hat"] = *o.q_hat;
  if (!o.warnings.empty()) j["warnings"] = o.warnings;
  if (emit_pvalues) {
    j["p_values"] = vector_json(o.p_values);
    j["t_scores"] = vector_json(o.t_scores);
  }
  return j;
}

json to_json(const AdaFatTrace& trace) {
  json j;
  j["converged"] = trace.converged;
  j["cycle_detected"] = trace.cycle_detected;
  j["iterations_used"] = trace.iterations_used;
  j["ori_rejections"] = trace.ori_rejected.size();
  json its = json::array();
  for (const AdaFatIteration& it : trace.iterations) {
    its.push_back({{"subset_size", it.null_subset.size()},
                   {"rejections", it.rejected.size()},
                   {"updated_subset_size", it.updated_subset.size()},
                   {"threshold", it.threshold},
                   {"fdr_estimate", it.fdr_estimate},
                   {"pi0_hat", it.pi0_hat},
                   {"zeta_hat", vector_json(it.zeta_hat)}});
  }
  j["iterations"] = std::move(its);
  return j;
}

json to_json(const TestingConfig& c) {
  return {{"tau", c.tau},
          {"nu", c.nu},
          {"clip_pi0", c.clip_pi0},
          {"kappa", c.factor.kappa},
          {"penalty", "bai-ng"},
          {"max_iter", c.max_iter}};
}

json to_json(const SimConfig& c) {
  json j = to_json(c.testing);
  j["m"] = c.m;
  j["n"] = c.n;
  j["q"] = c.q;
  j["p"] = c.p;
  j["pi1"] = c.pi1;
  j["alpha_magnitude"] = c.alpha_magnitude;
  j["dist"] = std::string(to_string(c.error_dist));
  j["mu_x"] = vector_json(c.mu_x);
  j["sigma_x"] = vector_json(c.sigma_x);
  j["mu_z_scale"] = c.mu_z_scale;
  j["mu_z_mode"] = c.mu_z_mode == SimConfig::MuZMode::AlphaShift ? "alpha-shift" : "factor-mean";
  j["sigma_eps"] = {{"kind", sigma_kind(c.sigma_eps.kind)},
                    {"bandwidth", c.sigma_eps.bandwidth},
                    {"rho", c.sigma_eps.rho}};
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["calibrated"] = c.base_model.has_value();
  return j;
}

void apply_json(const json& j, SimConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::BadSpec, "config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "schema_version" || key == "calibrated" || key == "calibration") continue;
    else if (key == "m") c.m = value.get<Index>();
    else if (key == "n") c.n = value.get<Index>();
    else if (key == "q") c.q = value.get<Index>();
    else if (key == "p") c.p = value.get<Index>();
    else if (key == "pi1") c.pi1 = value.get<double>();
    else if (key == "alpha_magnitude") c.alpha_magnitude = value.get<double>();
    else if (key == "dist") {
      const auto d = parse_error_dist(value.get<std::string>());
      if (!d) throw Error(ErrorCode::BadSpec, "dist must be normal or t3");
      c.error_dist = *d;
    } else if (key == "mu_x") c.mu_x = vector_from_json(value, "mu_x");
    else if (key == "sigma_x") c.sigma_x = vector_from_json(value, "sigma_x");
    else if (key == "mu_z_scale") c.mu_z_scale = value.get<double>();
    else if (key == "mu_z_mode") {
      const auto mode = value.get<std::string>();
      if (mode == "alpha-shift") c.mu_z_mode = SimConfig::MuZMode::AlphaShift;
      else if (mode == "factor-mean") c.mu_z_mode = SimConfig::MuZMode::FactorMean;
      else throw Error(ErrorCode::BadSpec, "mu_z_mode must be alpha-shift or factor-mean");
    }
    else if (key == "sigma_eps") {
      const std::string kind = value.value("kind", "banded");
      if (kind == "identity") c.sigma_eps.kind = SigmaEpsSpec::Kind::Identity;
      else if (kind == "banded") c.sigma_eps.kind = SigmaEpsSpec::Kind::Banded;
      else if (kind == "user") c.sigma_eps.kind = SigmaEpsSpec::Kind::User;
      else throw Error(ErrorCode::BadSpec, "unknown sigma_eps kind " + kind);
      c.sigma_eps.bandwidth = value.value("bandwidth", c.sigma_eps.bandwidth);
      c.sigma_eps.rho = value.value("rho", c.sigma_eps.rho);
      if (value.contains("matrix")) c.sigma_eps.user = matrix_from_rows(value["matrix"], "sigma_eps.matrix");
    } else if (key == "reps") c.reps = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "tau") c.testing.tau = value.get<double>();
    else if (key == "nu") c.testing.nu = value.get<double>();
    else if (key == "clip_pi0") c.testing.clip_pi0 = value.get<bool>();
    else if (key == "kappa") c.testing.factor.kappa = value.get<int>();
    else if (key == "max_iter") c.testing.max_iter = value.get<int>();
    else if (key == "base_model") {
      FactorModel model;
      model.alpha = vector_from_json(value.at("alpha"), "base_model.alpha");
      model.B = matrix_from_rows(value.at("B"), "base_model.B");
      model.Gamma = matrix_from_rows(value.at("Gamma"), "base_model.Gamma");
      model.Sigma_eps = matrix_from_rows(value.at("Sigma_eps"), "base_model.Sigma_eps");
      c.sigma_eps.kind = SigmaEpsSpec::Kind::User;
      c.sigma_eps.user = model.Sigma_eps;
      c.base_model = std::move(model);
    } else if (key == "penalty") {
      if (value.get<std::string>() != "bai-ng") throw Error(ErrorCode::BadSpec, "penalty must be bai-ng");
    } else {
      throw Error(ErrorCode::BadSpec, "unknown config key '" + key + "'");
    }
  }
  if (c.mu_x.size() != c.p) c.mu_x = VectorXd::Constant(c.p, c.mu_x.size() ? c.mu_x(0) : 0.0);
  if (c.sigma_x.size() != c.p) c.sigma_x = VectorXd::Ones(c.p);
}

json to_json(const SimReport& report) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = to_json(report.config);
  json methods = json::array();
  for (const Method m : report.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  json results = json::object();
  for (const Method m : report.methods) {
    const MethodSeries& s = report.series.at(m);
    auto summary = [](const Summary& x) {
      return json{{"mean", number_or_null(x.mean)},   {"median", number_or_null(x.median)},
                  {"q1", number_or_null(x.q1)},       {"q3", number_or_null(x.q3)},
                  {"q90", number_or_null(x.q90)}};
    };
    json fdp = json::array();
    json pw = json::array();
    for (const double v : s.fdp) fdp.push_back(number_or_null(v));
    for (const double v : s.pow) pw.push_back(number_or_null(v));
    results[std::string(to_string(m))] = {{"fdp", fdp},
                                          {"pow", pw},
                                          {"failures", s.failures},
                                          {"fdp_summary", summary(s.fdp_summary)},
                                          {"pow_summary", summary(s.pow_summary)}};
  }
  j["results"] = results;
  return j;
}

json calibration_json(const Calibration& cal) {
  json j = to_json(cal.config);
  j["schema_version"] = kSchemaVersion;
  j.erase("calibrated");
  j["sigma_eps"] = {{"kind", "user"}};
  j["base_model"] = {{"alpha", vector_json(cal.model.alpha)},
                     {"B", matrix_rows(cal.model.B)},
                     {"Gamma", matrix_rows(cal.model.Gamma)},
                     {"Sigma_eps", matrix_rows(cal.model.Sigma_eps)}};
  j["calibration"] = {{"q_hat", cal.q_hat}, {"threshold_constant", cal.threshold_constant}};
  return j;
}

json truth_json(const SimulationTruth& truth) {
  return {{"schema_version", kSchemaVersion},
          {"alpha", vector_json(truth.model.alpha)},
          {"Gamma", matrix_rows(truth.model.Gamma)},
          {"sigma_eps_diag", vector_json(truth.model.sigma_eps_diag())},
          {"Z", matrix_rows(truth.Z)},
          {"E", matrix_rows(truth.E)}};
}

void write_outcome_csv(std::ostream& out, const std::vector<TestOutcome>& outcomes) {
  out << "method,tau,nu,threshold,pi0_hat,fdr_estimate,n_rejected\n";
  out << std::setprecision(17);
  for (const TestOutcome& o : outcomes) {
    out << to_string(o.method) << ',' << o.tau << ',' << o.nu << ',' << o.threshold << ','
        << o.pi0_hat << ',' << o.fdr_estimate << ',' << o.rejected.size() << '\n';
  }
}

void write_report_csv(std::ostream& out, const SimReport& report) {
  out << "rep,method,fdp,pow\n";
  out << std::setprecision(17);
  for (int r = 0; r < report.config.reps; ++r) {
    for (const Method m : report.methods) {
      const MethodSeries& s = report.series.at(m);
      const auto idx = static_cast<std::size_t>(r);
      out << r << ',' << to_string(m) << ',';
      if (std::isfinite(s.fdp[idx])) out << s.fdp[idx];
      out << ',';
      if (std::isfinite(s.pow[idx])) out << s.pow[idx];
      out << '\n';
    }
  }
}

void write_summary_table(std::ostream& out, const SimReport& report) {
  out << std::left << std::setw(8) << "method" << std::right << std::setw(10) << "FDP mean"
      << std::setw(10) << "FDP q90" << std::setw(10) << "POW mean" << std::setw(10) << "failures"
      << '\n';
  out << std::fixed << std::setprecision(4);
  for (const Method m : report.methods) {
    const MethodSeries& s = report.series.at(m);
    out << std::left << std::setw(8) << to_string(m) << std::right << std::setw(10)
        << s.fdp_summary.mean << std::setw(10) << s.fdp_summary.q90 << std::setw(10)
        << s.pow_summary.mean << std::setw(10) << s.failures << '\n';
  }
  out.unsetf(std::ios::fixed);
}

SimulationTruth read_truth_bundle(const std::string& path, Index n, Index m) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Io, path + ": " + e.what());
  }
  auto load_matrix = [&](const char* key) {
    if (!j.contains(key)) throw Error(ErrorCode::BadSpec, std::string("truth bundle lacks ") + key);
    const json& v = j[key];
    if (v.is_string()) return read_csv_matrix(v.get<std::string>());
    return matrix_from_rows(v, key);
  };

  SimulationTruth truth;
  truth.model.alpha = vector_from_json(j.at("alpha"), "alpha");
  truth.model.Gamma = matrix_from_rows(j.at("Gamma"), "Gamma");
  if (j.contains("Sigma_eps")) {
    truth.model.Sigma_eps = matrix_from_rows(j["Sigma_eps"], "Sigma_eps");
  } else {
    truth.model.Sigma_eps = vector_from_json(j.at("sigma_eps_diag"), "sigma_eps_diag").asDiagonal();
  }
  truth.Z = load_matrix("Z");
  truth.E = load_matrix("E");
  truth.model.validate();
  if (truth.model.m() != m || truth.Z.rows() != n || truth.E.rows() != n || truth.E.cols() != m) {
    throw Error(ErrorCode::BadSpec, "truth bundle does not match the data dimensions");
  }
  return truth;
}

}  // namespace adafat::io
