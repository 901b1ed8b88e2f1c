#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "quadet/detect.hpp"
#include "quadet/sim.hpp"

namespace quadet::tools {

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double v);

inline constexpr const char* kSerHeader = "detector,snr_db,n,rho,m,trials,errors,ser,stderr,analytic_ser";
inline constexpr const char* kOutageHeader = "detector,snr_db,n,rho,m,zeta,p_out,stderr,n_channels,inner_trials";
inline constexpr const char* kScatterHeader = "detector,snr_db,n,rho,m,channel,h_norm_sq,cond_ser";
inline constexpr const char* kThresholdHeader =
    "estimator,snr_db,n,rho,m,index,tau,mean_below,var_below,mean_above,var_above,analytic_ser";

void write_ser_csv(std::ostream& os, const SerResult& result);
nlohmann::json ser_rows_json(const SerResult& result);

void write_outage_csv(std::ostream& os, const OutageResult& result, const OutageConfig& config);
void write_scatter_csv(std::ostream& os, const OutageResult& result);
nlohmann::json outage_json(const OutageResult& result, const OutageConfig& config);

nlohmann::json validation_json(const ValidationReport& report);

/// Thresholds of one estimator at one operating point.
struct ThresholdReport {
  std::string estimator;
  GridPoint point;
  std::size_t m = 0;
  ThresholdSet thresholds;
  std::vector<EstimatorStats> stats;
  double analytic_ser = 0.0;
};

void write_thresholds_csv(std::ostream& os, const std::vector<ThresholdReport>& reports);
nlohmann::json thresholds_json(const std::vector<ThresholdReport>& reports);

}  // namespace quadet::tools
