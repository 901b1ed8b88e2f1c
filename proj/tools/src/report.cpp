#include "quadet_tools/report.hpp"

#include <charconv>
#include <cmath>

namespace quadet::tools {

namespace {

using nlohmann::json;

json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

void point_prefix(std::ostream& os, const std::string& name, const GridPoint& p, std::size_t m) {
  os << name << ',' << format_double(p.snr_db) << ',' << p.n << ',' << format_double(p.rho) << ',' << m;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_ser_csv(std::ostream& os, const SerResult& result) {
  os << kSerHeader << '\n';
  for (const auto& r : result.rows) {
    point_prefix(os, to_string(r.detector), {r.n, r.rho, r.snr_db}, r.m);
    os << ',' << r.trials << ',' << r.errors << ',' << format_double(r.ser) << ',' << format_double(r.stderr_)
       << ',';
    if (r.analytic_ser) os << format_double(*r.analytic_ser);
    os << '\n';
  }
}

json ser_rows_json(const SerResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"detector", to_string(r.detector)},
                    {"snr_db", r.snr_db},
                    {"n", r.n},
                    {"rho", r.rho},
                    {"m", r.m},
                    {"trials", r.trials},
                    {"errors", r.errors},
                    {"ser", r.ser},
                    {"stderr", r.stderr_},
                    {"analytic_ser", r.analytic_ser ? json(*r.analytic_ser) : json(nullptr)}});
  }
  return rows;
}

void write_outage_csv(std::ostream& os, const OutageResult& result, const OutageConfig& config) {
  os << kOutageHeader << '\n';
  for (const auto& c : result.curves) {
    for (std::size_t k = 0; k < c.zeta.size(); ++k) {
      point_prefix(os, to_string(c.detector), c.point, c.m);
      os << ',' << format_double(c.zeta[k]) << ',' << format_double(c.p_out[k]) << ','
         << format_double(c.p_out_stderr[k]) << ',' << config.n_channels << ',' << config.inner_trials << '\n';
    }
  }
}

void write_scatter_csv(std::ostream& os, const OutageResult& result) {
  os << kScatterHeader << '\n';
  for (const auto& c : result.curves) {
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      point_prefix(os, to_string(c.detector), c.point, c.m);
      os << ',' << i << ',' << format_double(c.samples[i].h_norm_sq) << ','
         << format_double(c.samples[i].cond_ser) << '\n';
    }
  }
}

json outage_json(const OutageResult& result, const OutageConfig& config) {
  json rows = json::array();
  json scatter = json::array();
  for (const auto& c : result.curves) {
    for (std::size_t k = 0; k < c.zeta.size(); ++k) {
      rows.push_back({{"detector", to_string(c.detector)},
                      {"snr_db", c.point.snr_db},
                      {"n", c.point.n},
                      {"rho", c.point.rho},
                      {"m", c.m},
                      {"zeta", c.zeta[k]},
                      {"p_out", c.p_out[k]},
                      {"stderr", c.p_out_stderr[k]},
                      {"n_channels", config.n_channels},
                      {"inner_trials", config.inner_trials}});
    }
    json h = json::array();
    json p = json::array();
    for (const auto& s : c.samples) {
      h.push_back(s.h_norm_sq);
      p.push_back(s.cond_ser);
    }
    scatter.push_back({{"detector", to_string(c.detector)},
                       {"snr_db", c.point.snr_db},
                       {"n", c.point.n},
                       {"rho", c.point.rho},
                       {"m", c.m},
                       {"h_norm_sq", std::move(h)},
                       {"cond_ser", std::move(p)}});
  }
  return {{"rows", std::move(rows)}, {"scatter", std::move(scatter)}, {"warnings", result.warnings}};
}

json validation_json(const ValidationReport& report) {
  const auto& s = report.spec;
  json out;
  out["config"] = {{"n", s.n},
                   {"rho", s.rho},
                   {"snr_db", s.snr_db},
                   {"m", s.mod_order},
                   {"samples", s.samples},
                   {"clt_samples", s.clt_samples},
                   {"pep_trials", s.pep_trials},
                   {"clt_n", s.clt_n},
                   {"deflection_n", s.deflection_n}};
  json unb = json::array();
  for (const auto& r : report.unbiasedness) {
    unb.push_back({{"estimator", r.estimator}, {"eps", r.eps}, {"mean", r.mean}, {"stderr", r.stderr_}, {"z", r.z}});
  }
  out["unbiasedness"] = std::move(unb);
  json eff = json::array();
  for (const auto& r : report.efficiency) {
    eff.push_back({{"eps", r.eps}, {"empirical_var", r.empirical_var}, {"crb", r.crb}, {"ratio", r.ratio}});
  }
  out["bque_efficiency"] = std::move(eff);
  out["qmmse_mse"] = {{"empirical", report.qmmse.empirical_mse},
                      {"analytic", report.qmmse.analytic_mse},
                      {"ratio", report.qmmse.ratio}};
  json clt = json::array();
  for (const auto& r : report.clt) {
    clt.push_back({{"n", r.n},
                   {"skewness", r.skewness},
                   {"excess_kurtosis", r.excess_kurtosis},
                   {"lyapunov_ratio", r.lyapunov}});
  }
  out["clt"] = std::move(clt);
  json defl = json::array();
  for (const auto& r : report.deflection) {
    defl.push_back({{"n", r.n}, {"eps_a", r.eps_a}, {"eps_b", r.eps_b}, {"delta", r.delta}});
  }
  out["deflection"] = std::move(defl);
  json pep = json::array();
  for (const auto& r : report.pep) {
    pep.push_back({{"eps_a", r.eps_a},
                   {"eps_b", r.eps_b},
                   {"simulated", r.simulated},
                   {"stderr", r.stderr_},
                   {"cantelli", r.cantelli},
                   {"chisq_lower", number_or_null(r.chisq_lower)},
                   {"chisq_upper", number_or_null(r.chisq_upper)}});
  }
  out["pep"] = std::move(pep);
  return out;
}

void write_thresholds_csv(std::ostream& os, const std::vector<ThresholdReport>& reports) {
  os << kThresholdHeader << '\n';
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.thresholds.taus.size(); ++i) {
      point_prefix(os, r.estimator, r.point, r.m);
      os << ',' << i + 1 << ',' << format_double(r.thresholds.taus[i]) << ','
         << format_double(r.stats[i].cond_mean) << ',' << format_double(r.stats[i].cond_var) << ','
         << format_double(r.stats[i + 1].cond_mean) << ',' << format_double(r.stats[i + 1].cond_var) << ','
         << format_double(r.analytic_ser) << '\n';
    }
  }
}

json thresholds_json(const std::vector<ThresholdReport>& reports) {
  json rows = json::array();
  for (const auto& r : reports) {
    json means = json::array();
    json vars = json::array();
    for (const auto& s : r.stats) {
      means.push_back(s.cond_mean);
      vars.push_back(s.cond_var);
    }
    rows.push_back({{"estimator", r.estimator},
                    {"snr_db", r.point.snr_db},
                    {"n", r.point.n},
                    {"rho", r.point.rho},
                    {"m", r.m},
                    {"taus", r.thresholds.taus},
                    {"cond_mean", std::move(means)},
                    {"cond_var", std::move(vars)},
                    {"analytic_ser", r.analytic_ser}});
  }
  return rows;
}

}  // namespace quadet::tools
