#pragma once

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "adafat/adafat.hpp"
#include "adafat/model.hpp"
#include "adafat/simgen.hpp"
#include "adafat/testing.hpp"

namespace adafat::io {

inline constexpr int kSchemaVersion = 1;

/// Headerless numeric CSV, one row per observation. Parsing ignores the
/// process locale. Throws Io on a missing file or malformed field.
MatrixXd read_csv_matrix(const std::string& path);
MatrixXd parse_csv_matrix(std::istream& in, const std::string& label = "<stream>");
void write_csv_matrix(const std::string& path, const MatrixXd& M);

nlohmann::json to_json(const TestOutcome& outcome, bool emit_pvalues);
nlohmann::json to_json(const AdaFatTrace& trace);
nlohmann::json to_json(const TestingConfig& config);
nlohmann::json to_json(const SimConfig& config);
nlohmann::json to_json(const SimReport& report);

/// Applies the keys present in `j` to `config`; unknown keys are rejected.
void apply_json(const nlohmann::json& j, SimConfig& config);

/// Simulation config plus the calibrated base model; readable by apply_json.
nlohmann::json calibration_json(const Calibration& cal);

/// Bundle accepted by read_truth_bundle.
nlohmann::json truth_json(const SimulationTruth& truth);

/// Header plus one row per outcome: method,tau,nu,threshold,pi0_hat,fdr_estimate,n_rejected.
void write_outcome_csv(std::ostream& out, const std::vector<TestOutcome>& outcomes);

/// Long form: rep,method,fdp,pow.
void write_report_csv(std::ostream& out, const SimReport& report);

/// Fixed-width table: method x {FDP mean, FDP q90, POW mean}.
void write_summary_table(std::ostream& out, const SimReport& report);

/// Simulation truth bundle: {"alpha":[...], "Gamma":[[...]...], "sigma_eps_diag":[...],
/// "Z": path or matrix, "E": path or matrix}.
SimulationTruth read_truth_bundle(const std::string& path, Index n, Index m);

}  // namespace adafat::io
