#include "quadet_tools/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "quadet/asymptotics.hpp"
#include "quadet/error.hpp"
#include "quadet/sim.hpp"
#include "quadet/version.hpp"
#include "quadet_tools/report.hpp"

namespace quadet::tools {

namespace {

using nlohmann::json;

enum class Format { kCsv, kJson };

double parse_real(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ParameterError("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    parts.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  return parts;
}

std::vector<DetectorKind> parse_detectors(const std::string& text) {
  std::vector<DetectorKind> out;
  for (const auto& name : split(text, ',')) {
    if (name.empty()) continue;
    const auto kind = parse_detector(name);
    if (std::find(out.begin(), out.end(), kind) != out.end()) {
      throw ParameterError("detector '" + name + "' listed twice");
    }
    out.push_back(kind);
  }
  if (out.empty()) throw ParameterError("no detectors given");
  return out;
}

unsigned parse_threads(const std::string& text) {
  if (text.empty() || text == "auto") return 0;
  const double v = parse_real(text);
  if (!(v >= 1.0) || v != std::floor(v) || v > 4096.0) throw ParameterError("--threads must be a positive integer or 'auto'");
  return static_cast<unsigned>(v);
}

// Options shared by the Monte Carlo subcommands.
struct Common {
  std::string n;
  std::string rho = "0.7";
  std::string snr_db;
  std::size_t mod = 8;
  std::string detectors;
  std::uint64_t trials = 100000;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::string threads = "auto";
  std::uint64_t block_size = 8192;
  bool no_timing = false;
};

void add_grid_options(CLI::App* sub, Common& c) {
  sub->add_option("--n", c.n, "receive antennas (list)")->capture_default_str();
  sub->add_option("--rho", c.rho, "exponential correlation in [0, 1) (list)")->capture_default_str();
  sub->add_option("--snr-db", c.snr_db, "SNR grid in dB, start:step:stop or list")->capture_default_str();
  sub->add_option("--mod", c.mod, "ASK order M")->capture_default_str();
}

void add_output_options(CLI::App* sub, Common& c) {
  sub->add_option("--out", c.out, "output file (stdout when empty)");
  sub->add_option("--format", c.format, "csv or json (default: from --out extension)")
      ->check(CLI::IsMember({"csv", "json"}));
}

void add_run_options(CLI::App* sub, Common& c) {
  sub->add_option("--detectors", c.detectors, "comma list of ml, ed, hsnr, bque, qmmse, abque")
      ->capture_default_str();
  sub->add_option("--trials", c.trials, "Monte Carlo trials per point")->capture_default_str();
  sub->add_option("--seed", c.seed, "master RNG seed (required)");
  sub->add_option("--threads", c.threads, "worker threads or 'auto'")->envname("QUADET_THREADS")->capture_default_str();
  sub->add_option("--block-size", c.block_size, "trials per RNG block")->capture_default_str();
  sub->add_flag("--no-timing", c.no_timing, "omit wall time from JSON output");
}

Format resolve_format(const Common& c) {
  if (c.format == "json") return Format::kJson;
  if (c.format == "csv") return Format::kCsv;
  const auto dot = c.out.rfind('.');
  if (dot != std::string::npos && c.out.substr(dot) == ".json") return Format::kJson;
  return Format::kCsv;
}

std::uint64_t require_seed(const Common& c) {
  if (!c.seed) throw ParameterError("--seed is required");
  return *c.seed;
}

// Opens the output stream before any work so an unwritable path fails fast.
class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (path.empty()) return;
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw ParameterError("cannot open output file '" + path + "'");
    stream_ = file_.get();
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

ExperimentSpec experiment_from(const Common& c) {
  ExperimentSpec spec;
  spec.n_antennas = parse_size_list(c.n);
  spec.rho = parse_real_grid(c.rho);
  spec.snr_db = parse_real_grid(c.snr_db);
  spec.mod_order = c.mod;
  spec.detectors = parse_detectors(c.detectors);
  spec.trials = c.trials;
  spec.seed = require_seed(c);
  spec.threads = parse_threads(c.threads);
  spec.block_size = c.block_size;
  return spec;
}

json metadata(const std::string& command, const Common& c, double wall) {
  json meta = {{"command", command}, {"version", kVersion}, {"block_size", c.block_size}};
  if (c.seed) meta["seed"] = *c.seed;
  if (!c.no_timing) meta["wall_time_s"] = wall;
  return meta;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_ser_like(const std::string& command, const Common& c, std::ostream& out) {
  const auto spec = experiment_from(c);
  const Format fmt = resolve_format(c);
  Output sink(c.out, out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_ser(spec);
  if (fmt == Format::kCsv) {
    write_ser_csv(sink.stream(), result);
  } else {
    json doc = metadata(command, c, seconds_since(t0));
    doc["sweep"] = to_string(spec.sweep());
    doc["rows"] = ser_rows_json(result);
    sink.stream() << doc.dump(2) << '\n';
  }
  return kExitOk;
}

struct OutageOpts {
  std::string zeta = "1e-3,1e-2,1e-1";
  std::size_t channels = 500;
  std::uint64_t inner_trials = 20000;
  std::string scatter_out;
};

int run_outage_cmd(const Common& c, const OutageOpts& o, std::ostream& out, std::ostream& err) {
  auto spec = experiment_from(c);
  spec.outage = OutageConfig{parse_real_grid(o.zeta), o.channels, o.inner_trials};
  const Format fmt = resolve_format(c);
  Output sink(c.out, out);
  std::optional<Output> scatter;
  if (!o.scatter_out.empty()) scatter.emplace(o.scatter_out, out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto result = run_outage(spec);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (fmt == Format::kCsv) {
    write_outage_csv(sink.stream(), result, *spec.outage);
  } else {
    json doc = metadata("outage", c, seconds_since(t0));
    doc.update(outage_json(result, *spec.outage));
    sink.stream() << doc.dump(2) << '\n';
  }
  if (scatter) write_scatter_csv(scatter->stream(), result);
  return kExitOk;
}

struct ValidateOpts {
  std::uint64_t samples = 50000;
  std::uint64_t clt_samples = 50000;
  std::uint64_t pep_trials = 50000;
  std::string clt_n = "16,64,256,1024";
  std::string deflection_n = "32,64,128,256,512";
};

int run_validate_cmd(const Common& c, const ValidateOpts& v, std::ostream& out) {
  if (resolve_format(c) != Format::kJson && !c.format.empty()) {
    throw ParameterError("validate writes JSON only");
  }
  ValidationSpec spec;
  spec.seed = require_seed(c);
  const auto n = parse_size_list(c.n);
  const auto rho = parse_real_grid(c.rho);
  const auto snr = parse_real_grid(c.snr_db);
  if (n.size() != 1 || rho.size() != 1 || snr.size() != 1) {
    throw ParameterError("validate takes a single --n, --rho and --snr-db");
  }
  spec.n = n[0];
  spec.rho = rho[0];
  spec.snr_db = snr[0];
  spec.mod_order = c.mod;
  spec.samples = v.samples;
  spec.clt_samples = v.clt_samples;
  spec.pep_trials = v.pep_trials;
  spec.clt_n = parse_size_list(v.clt_n);
  spec.deflection_n = parse_size_list(v.deflection_n);
  spec.threads = parse_threads(c.threads);
  Output sink(c.out, out);
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = run_estimator_validation(spec);
  json doc = metadata("validate", c, seconds_since(t0));
  doc.update(validation_json(report));
  sink.stream() << doc.dump(2) << '\n';
  return kExitOk;
}

int run_thresholds_cmd(const Common& c, const std::string& estimators, std::ostream& out) {
  const auto ns = parse_size_list(c.n);
  const auto rhos = parse_real_grid(c.rho);
  const auto snrs = parse_real_grid(c.snr_db);
  const auto constellation = Constellation::uniform_ask(c.mod);
  const Format fmt = resolve_format(c);

  std::vector<std::string> names;
  for (const auto& e : split(estimators, ',')) {
    if (e == "ed" || e == "hsnr" || e == "bque" || e == "qmmse") {
      names.push_back(e);
    } else if (!e.empty()) {
      throw ParameterError("unknown estimator '" + e + "'");
    }
  }
  if (names.empty()) throw ParameterError("no estimators given");

  Output sink(c.out, out);
  std::vector<ThresholdReport> reports;
  for (auto n : ns) {
    for (double rho : rhos) {
      for (double snr : snrs) {
        const GridPoint p{n, rho, snr};
        const auto spectrum = decompose(build_covariance_pair(ChannelSpec::white_db(n, rho, snr)));
        std::vector<QuadraticEstimator> ests;
        for (const auto& name : names) {
          if (name == "ed") ests.push_back(build_ed(spectrum));
          if (name == "hsnr") ests.push_back(build_hsnr(spectrum));
          if (name == "qmmse") ests.push_back(build_qmmse(spectrum, constellation));
          if (name == "bque") {
            for (double eps : constellation.energies()) ests.push_back(build_bque(spectrum, eps));
          }
        }
        for (const auto& est : ests) {
          ThresholdReport r;
          r.estimator = est.label();
          r.point = p;
          r.m = c.mod;
          r.thresholds = compute_thresholds(est, spectrum, constellation);
          r.stats = symbol_stats(est, spectrum, constellation);
          r.analytic_ser = analytic_ser(est, spectrum, constellation, r.thresholds).total;
          reports.push_back(std::move(r));
        }
      }
    }
  }
  if (fmt == Format::kCsv) {
    write_thresholds_csv(sink.stream(), reports);
  } else {
    json doc = {{"command", "thresholds"}, {"version", kVersion}, {"rows", thresholds_json(reports)}};
    sink.stream() << doc.dump(2) << '\n';
  }
  return kExitOk;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

// Replaces "--config FILE" with the file's "key = value" pairs as flags.
// Flags given explicitly on the command line take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ParameterError("--config needs a file name");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;

  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw ParameterError("cannot read config '" + path + "': " + e.what());
  }
  for (const auto& item : items) {
    if (!item.parents.empty()) throw ParameterError("config '" + path + "': sections are not supported");
    const std::string flag = "--" + item.name;
    if (given_on_command_line(out, flag)) continue;
    std::string value;
    for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
    if (item.name == "no-timing") {
      if (value == "true" || value == "1") out.push_back(flag);
      continue;
    }
    out.push_back(flag + "=" + value);
  }
  return out;
}

bool is_usage_error(const Error& e) {
  return dynamic_cast<const ParameterError*>(&e) != nullptr || dynamic_cast<const DimensionError*>(&e) != nullptr ||
         dynamic_cast<const CovarianceError*>(&e) != nullptr;
}

}  // namespace

std::vector<double> parse_real_grid(const std::string& text) {
  std::vector<double> out;
  const auto colon = split(text, ':');
  if (colon.size() == 3) {
    const double start = parse_real(colon[0]);
    const double step = parse_real(colon[1]);
    const double stop = parse_real(colon[2]);
    if (!(step > 0.0) || !(stop >= start) || !std::isfinite(start) || !std::isfinite(stop)) {
      throw ParameterError("grid '" + text + "' needs step > 0 and stop >= start");
    }
    const double count = std::floor((stop - start) / step + 1e-9);
    if (count > 1e6) throw ParameterError("grid '" + text + "' has too many points");
    for (long k = 0; k <= static_cast<long>(count); ++k) out.push_back(start + static_cast<double>(k) * step);
    return out;
  }
  if (colon.size() != 1) throw ParameterError("grid '" + text + "' must be start:step:stop or a list");
  for (const auto& part : split(text, ',')) {
    if (part.empty()) continue;
    out.push_back(parse_real(part));
  }
  if (out.empty()) throw ParameterError("empty grid");
  return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_real_grid(text)) {
    if (!(v >= 1.0) || v != std::floor(v)) throw ParameterError("antenna counts must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noncoherent energy-detection simulator for correlated Rayleigh SIMO channels", "quadet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common ser;
  ser.n = "64";
  ser.snr_db = "0:5:30";
  ser.detectors = "ed,bque,qmmse,abque,ml";
  auto* ser_cmd = app.add_subcommand("ser", "SER versus SNR sweep");

  Common floor;
  floor.n = "64,128,256,512";
  floor.snr_db = "30";
  floor.detectors = "ed,hsnr,qmmse,bque,abque,ml";
  auto* floor_cmd = app.add_subcommand("floor", "error floor versus N or rho at a fixed high SNR");

  Common outage;
  outage.n = "64";
  outage.snr_db = "10";
  outage.detectors = "bque,ml";
  OutageOpts outage_opts;
  auto* outage_cmd = app.add_subcommand("outage", "outage probability over channel realizations");

  Common validate;
  validate.n = "64";
  validate.snr_db = "10";
  ValidateOpts validate_opts;
  auto* validate_cmd = app.add_subcommand("validate", "estimator and bound checks by sampling");

  Common thresholds;
  thresholds.n = "64";
  thresholds.snr_db = "10";
  std::string estimators = "ed,hsnr,bque,qmmse";
  auto* thresholds_cmd = app.add_subcommand("thresholds", "print decision thresholds");

  for (auto [sub, c] : {std::pair{ser_cmd, &ser}, {floor_cmd, &floor}, {outage_cmd, &outage}}) {
    add_grid_options(sub, *c);
    add_run_options(sub, *c);
    add_output_options(sub, *c);
  }
  outage_cmd->add_option("--zeta", outage_opts.zeta, "conditional-SER thresholds (list or grid)")
      ->capture_default_str();
  outage_cmd->add_option("--channels", outage_opts.channels, "channel realizations")->capture_default_str();
  outage_cmd->add_option("--inner-trials", outage_opts.inner_trials, "trials per channel")->capture_default_str();
  outage_cmd->add_option("--scatter-out", outage_opts.scatter_out, "CSV of (||h||^2, conditional SER) pairs");

  add_grid_options(validate_cmd, validate);
  add_output_options(validate_cmd, validate);
  validate_cmd->add_option("--seed", validate.seed, "master RNG seed (required)");
  validate_cmd->add_option("--threads", validate.threads, "worker threads or 'auto'")->envname("QUADET_THREADS");
  validate_cmd->add_flag("--no-timing", validate.no_timing, "omit wall time");
  validate_cmd->add_option("--samples", validate_opts.samples, "samples per estimator and energy")
      ->capture_default_str();
  validate_cmd->add_option("--clt-samples", validate_opts.clt_samples, "samples per CLT point")
      ->capture_default_str();
  validate_cmd->add_option("--pep-trials", validate_opts.pep_trials, "trials per pairwise error")
      ->capture_default_str();
  validate_cmd->add_option("--clt-n", validate_opts.clt_n, "antenna counts for the CLT trend")
      ->capture_default_str();
  validate_cmd->add_option("--deflection-n", validate_opts.deflection_n, "antenna counts for deflection")
      ->capture_default_str();

  add_grid_options(thresholds_cmd, thresholds);
  add_output_options(thresholds_cmd, thresholds);
  thresholds_cmd->add_option("--estimators", estimators, "comma list of ed, hsnr, bque, qmmse")
      ->capture_default_str();

  std::string config_path;
  for (auto* sub : {ser_cmd, floor_cmd, outage_cmd, validate_cmd, thresholds_cmd}) {
    sub->add_option("--config", config_path, "file of 'key = value' lines, keys are option names");
  }

  std::vector<std::string> expanded;
  try {
    expanded = expand_config(args);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::vector<const char*> argv;
  argv.reserve(expanded.size());
  for (const auto& a : expanded) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*ser_cmd) return run_ser_like("ser", ser, out);
    if (*floor_cmd) return run_ser_like("floor", floor, out);
    if (*outage_cmd) return run_outage_cmd(outage, outage_opts, out, err);
    if (*validate_cmd) return run_validate_cmd(validate, validate_opts, out);
    if (*thresholds_cmd) return run_thresholds_cmd(thresholds, estimators, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return is_usage_error(e) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace quadet::tools
